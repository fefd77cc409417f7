"""Hard instances for small coresets of shift-invariant kernels.

The instance is n/d far-apart groups; group j holds the d points
``s e_i + j L e_1`` with ``s = sqrt(z_f / 2)``, so all within-group
squared distances equal z_f, where the kernel profile is steep. A coreset
that keeps at most half of some group has a large KDE error at one of two
witness points pushed outward from that group's half-means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import PreconditionError
from .evaluation import weighted_points
from .kernels import Dataset, Domain, KernelSpec, kernel_sums

CROSS_DELTA = 1e-12
# the floor can be attained exactly, so compare with a rounding allowance
ROUNDING = 1e-12


@dataclass(frozen=True)
class AdversarialInstance:
    dataset: Dataset
    groups: tuple[tuple[int, ...], ...]
    kernel: KernelSpec
    scale: float
    separation: float
    d: int
    n: int
    epsilon: float
    l1_sq: float
    l2_sq: float
    floor: float

    def describe(self) -> dict:
        return {
            "d": self.d,
            "n": self.n,
            "epsilon": self.epsilon,
            "scale": self.scale,
            "separation": self.separation,
            "l1_sq": self.l1_sq,
            "l2_sq": self.l2_sq,
            "floor": self.floor,
            "groups": [list(g) for g in self.groups],
        }


def instance_size(d: int, epsilon: float) -> int:
    """Smallest multiple of d that is at least sqrt(d)/epsilon."""
    raw = math.sqrt(d) / epsilon
    groups = math.ceil(raw / d - 1e-12)
    return max(1, groups) * d


def generate(kernel: KernelSpec, d: int, epsilon: float, L: float | None = None) -> AdversarialInstance:
    """Build the grouped instance in R^d and its closed-form error floor.

    Raises PreconditionError naming the failed condition: the dimension
    range ``9 z_f^2 / r_f^2 <= d <= 1/eps^2`` (d even), missing steepness
    constants, or a separation L too small for cross-group values below
    eps^2/n.
    """
    st = kernel.steepness
    if st is None or not kernel.shift_invariant:
        raise PreconditionError("steepness: the kernel has no steepness constants")
    if not 0 < epsilon < 1:
        raise PreconditionError(f"d range: epsilon must lie in (0, 1), got {epsilon}")
    d_min = 9.0 * st.z_f ** 2 / st.r_f ** 2
    if not (d_min - 1e-9 <= d <= 1.0 / epsilon ** 2 + 1e-9) or d % 2:
        raise PreconditionError(
            f"d range: need even d with {d_min:g} <= d <= {1 / epsilon ** 2:g}, got d={d}"
        )
    try:
        kern = replace(kernel, domain=Domain.euclidean(d))
    except Exception as exc:
        raise PreconditionError(f"d range: {exc}") from None
    n = instance_size(d, epsilon)
    s = math.sqrt(st.z_f / 2.0)
    within = s * math.sqrt(2.0)
    need = kern.radius(epsilon ** 2 / n) + within
    if L is None:
        L = max(kern.radius(CROSS_DELTA), kern.radius(epsilon ** 2 / n)) + 2.0 * within
    if L < need:
        raise PreconditionError(f"L: separation {L:g} is below the required {need:g}")
    m = n // d
    pts = np.zeros((n, d))
    for j in range(m):
        pts[j * d:(j + 1) * d] = s * np.eye(d)
        pts[j * d:(j + 1) * d, 0] += j * L
    groups = tuple(tuple(range(j * d, (j + 1) * d)) for j in range(m))
    z = st.z_f
    l1_sq = z - z / d
    l2_sq = z + z / d + 2.0 * z / math.sqrt(d)
    floor = (d / (2.0 * n)) * float(kern.profile(l1_sq) - kern.profile(l2_sq))
    return AdversarialInstance(
        Dataset(pts, Domain.euclidean(d)), groups, kern, s, float(L), d, n, epsilon,
        l1_sq, l2_sq, floor,
    )


def witnesses(instance: AdversarialInstance, group_index: int, chosen_ids) -> tuple[np.ndarray, np.ndarray]:
    """(p_plus, p_minus) for a group split into chosen and unchosen halves.

    Fewer than d/2 chosen points are padded with the lowest unchosen ids.
    """
    group = instance.groups[group_index]
    half = instance.d // 2
    chosen = sorted(set(int(i) for i in chosen_ids) & set(group))
    if len(chosen) > half:
        raise PreconditionError(
            f"group {group_index} has {len(chosen)} chosen points, more than d/2 = {half}"
        )
    rest = [i for i in group if i not in chosen]
    chosen = chosen + rest[: half - len(chosen)]
    unchosen = [i for i in group if i not in set(chosen)]
    P = instance.dataset.points
    pos = instance.dataset.positions
    p_bar = P[pos(group)].mean(axis=0)
    out = []
    for half_ids in (chosen, unchosen):
        q = P[pos(half_ids)].mean(axis=0)
        u = q - p_bar
        out.append(q + instance.scale * u / np.linalg.norm(u))
    return out[0], out[1]


@dataclass(frozen=True)
class AuditReport:
    applicable: bool
    max_error: float
    floor: float
    cross_slack: float
    passed: bool
    groups_audited: tuple[int, ...]
    witness_errors: tuple[tuple[float, float], ...]

    def to_dict(self) -> dict:
        return {
            "applicable": self.applicable,
            "max_error": self.max_error,
            "floor": self.floor,
            "cross_slack": self.cross_slack,
            "passed": self.passed,
            "groups_audited": list(self.groups_audited),
            "witness_errors": [list(e) for e in self.witness_errors],
        }


def audit(kernel: KernelSpec, instance: AdversarialInstance, candidate) -> AuditReport:
    """KDE error of ``candidate`` at the witnesses of every under-sampled group.

    A group counts as under-sampled when it holds at most d/2 candidate
    points (zero-weight points do not count). Weighted candidates are
    evaluated with their weights. The verdict subtracts the measured
    cross-group contribution from the floor.
    """
    kern = instance.kernel if kernel.domain != instance.kernel.domain else kernel
    P = instance.dataset.points
    Q, wq, qids = weighted_points(candidate)
    live = set(int(i) for i, w in zip(qids, wq) if w > 0)
    half = instance.d // 2
    audited, errors, cross = [], [], 0.0
    n = instance.n
    for j, group in enumerate(instance.groups):
        chosen = live & set(group)
        if len(chosen) > half:
            continue
        wp, wm = witnesses(instance, j, chosen)
        W = np.vstack([wp, wm])
        diff = kernel_sums(kern, W, P, np.full(n, 1.0 / n)) - kernel_sums(kern, W, Q, wq)
        errors.append((float(abs(diff[0])), float(abs(diff[1]))))
        audited.append(j)
        others = [i for g in instance.groups if g is not group for i in g]
        if others:
            cross = max(cross, float(np.max(np.abs(kern.matrix(W, P[others])))))
    if not audited:
        return AuditReport(False, 0.0, instance.floor, 0.0, False, (), ())
    best = max(max(e) for e in errors)
    slack = 2.0 * cross
    return AuditReport(True, best, instance.floor, slack, best >= instance.floor - slack - ROUNDING,
                       tuple(audited), tuple(errors))
