"""KDE coresets by discrepancy halving, with certified error reports."""

from .advgen import AdversarialInstance, audit, generate, witnesses
from .baselines import herd, herding_path, random_sample
from .coreset import Coreset, build, build_streaming, halve, halving_levels, target_for_epsilon
from .discrepancy import Coloring, DiscrepancyCertificate, balance, certify, color, random_coloring
from .errors import (
    BudgetExceededError,
    DomainError,
    InputError,
    KDECoresetError,
    NotPSDError,
    NumericalError,
    PreconditionError,
    UnsupportedKernelError,
)
from .evaluation import ErrorReport, ReferenceEvaluator, kde, kernel_distance, linf_error, mean_embedding_dot
from .gram import FeatureSet, decompose, gram_matrix
from .kernels import Dataset, Domain, KernelSpec, Steepness, certify_constants, influence_box
from .lattice import QuerySet, build_lattice, sample_queries

__version__ = "0.1.0"

__all__ = [
    "AdversarialInstance", "BudgetExceededError", "Coloring", "Coreset", "Dataset",
    "DiscrepancyCertificate", "Domain", "DomainError", "ErrorReport", "FeatureSet",
    "InputError", "KDECoresetError", "KernelSpec", "NotPSDError", "NumericalError",
    "PreconditionError", "QuerySet", "ReferenceEvaluator", "Steepness",
    "UnsupportedKernelError", "audit", "balance", "build", "build_lattice",
    "build_streaming", "certify", "certify_constants", "color", "decompose", "generate",
    "gram_matrix", "halve", "halving_levels", "herd", "herding_path", "influence_box",
    "kde", "kernel_distance", "linf_error", "mean_embedding_dot", "random_coloring",
    "random_sample", "sample_queries", "target_for_epsilon", "witnesses",
]
