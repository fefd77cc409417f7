import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kdecoreset import (
    BudgetExceededError, Dataset, Domain, KernelSpec, build_lattice, influence_box,
    random_coloring, sample_queries,
)
from kdecoreset.discrepancy import signed_sums
from kdecoreset.errors import InputError
from kdecoreset.lattice import QuerySet, lattice_axes, write_queries


def test_one_dimensional_lattice_count():
    ds = Dataset([[0.0], [0.3], [0.7], [1.0]], Domain.euclidean(1))
    k = KernelSpec("gaussian", 1.0, ds.domain)
    q = build_lattice(k, ds, 1e-6)
    assert q.spacing == pytest.approx(0.25)
    width = 1.0 + 2.0 * math.sqrt(math.log(1e6))
    assert q.size == math.ceil(width / 0.25) + 1
    # unit-weight sums of n terms move by at most 1/2 between lattice points
    assert q.count_slack == pytest.approx(0.5)
    assert q.additive_slack == pytest.approx(1.0 / 4)
    assert not q.lower_bound


def test_high_dimension_exceeds_budget():
    ds = Dataset(np.random.default_rng(0).normal(size=(1000, 10)), Domain.euclidean(10))
    with pytest.raises(BudgetExceededError) as err:
        build_lattice(KernelSpec("gaussian", 1.0, ds.domain), ds, 1e-3)
    assert err.value.size > 10_000_000


def test_single_point_small_box():
    ds = Dataset([[0.2, -0.4]], Domain.euclidean(2))
    k = KernelSpec("laplacian", 1.0, ds.domain)
    q = build_lattice(k, ds, 0.9)
    box = influence_box(k, ds, 0.9)
    assert np.all(box.contains(q.points))
    assert q.size <= (math.ceil(2 * math.log(1 / 0.9) / q.spacing) + 1) ** 2


@given(seed=st.integers(0, 1000), n=st.integers(1, 12), delta=st.floats(1e-6, 0.5))
def test_lattice_lies_in_box(seed, n, delta):
    ds = Dataset(np.random.default_rng(seed).uniform(-1, 1, size=(n, 2)), Domain.euclidean(2))
    k = KernelSpec("gaussian", 2.0, ds.domain)
    q = build_lattice(k, ds, delta)
    assert np.all(influence_box(k, ds, delta).contains(q.points))
    gaps = np.diff(np.unique(q.points[:, 0]))
    assert gaps.size == 0 or gaps.max() <= q.spacing * (1 + 1e-12)


def test_refined_axes_contain_coarse():
    coarse = lattice_axes([0.0], [1.0], 0.3)[0]
    fine = lattice_axes([0.0], [1.0], 0.3, refine=4)[0]
    assert np.all(np.isin(np.round(coarse, 12), np.round(fine, 12)))


@pytest.mark.parametrize("family,domain", [
    ("jensen_shannon", Domain.simplex(2)), ("hellinger", Domain.simplex(2)),
    ("exponential", Domain.sphere(2)),
])
def test_compact_domain_lattices_are_members(family, domain):
    rng = np.random.default_rng(0)
    pts = rng.dirichlet(np.ones(3), 2) if domain.kind == "simplex" else domain.project(rng.normal(size=(2, 3)))
    ds = Dataset(pts, domain)
    q = build_lattice(KernelSpec(family, 0.25, domain), ds, 1e-3)
    assert domain.contains(q.points).all()
    assert q.additive_slack == pytest.approx(2.0 / ds.n * q.count_slack)


def test_sampled_count_n_is_the_data():
    ds = Dataset(np.random.default_rng(1).normal(size=(40, 2)), Domain.euclidean(2))
    q = sample_queries(KernelSpec("gaussian", 1.0, ds.domain), ds, 40, 9)
    assert np.array_equal(q.points, ds.points)
    assert q.lower_bound and q.source == "sampled"


def test_sampled_simplex_queries_are_projected():
    ds = Dataset(np.random.default_rng(2).dirichlet(np.ones(4), 30), Domain.simplex(3))
    q = sample_queries(KernelSpec("hellinger", 5.0, ds.domain), ds, 500, 0)
    assert ds.domain.contains(q.points).all()


def test_sampled_queries_cover_both_clusters():
    rng = np.random.default_rng(3)
    pts = np.vstack([rng.normal(size=(20, 2)) * 0.1, 50 + rng.normal(size=(20, 2)) * 0.1])
    ds = Dataset(pts, Domain.euclidean(2))
    q = sample_queries(KernelSpec("gaussian", 1.0, ds.domain), ds, 400, 0)
    near_a = np.linalg.norm(q.points, axis=1) < 5
    near_b = np.linalg.norm(q.points - 50, axis=1) < 5
    assert near_a.sum() > 100 and near_b.sum() > 100


def test_sampled_queries_are_seeded():
    ds = Dataset(np.random.default_rng(4).normal(size=(10, 2)), Domain.euclidean(2))
    k = KernelSpec("gaussian", 1.0, ds.domain)
    assert np.array_equal(sample_queries(k, ds, 99, 1).points, sample_queries(k, ds, 99, 1).points)
    assert sample_queries(k, ds, 99, 1).size == 99
    with pytest.raises(InputError):
        sample_queries(k, ds, 0, 1)


@pytest.mark.parametrize("seed", range(4))
def test_lattice_max_certifies_finer_grid(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(8, 65))
    ds = Dataset(rng.uniform(0, 3, size=(n, 1)), Domain.euclidean(1))
    k = KernelSpec("gaussian", 1.0, ds.domain)
    col = random_coloring(ds.ids, seed)
    coarse = build_lattice(k, ds, 1e-3)
    fine = build_lattice(k, ds, 1e-3, refine=100)
    top_coarse = np.abs(signed_sums(col, k, ds, coarse)).max()
    top_fine = np.abs(signed_sums(col, k, ds, fine)).max()
    assert top_coarse <= top_fine + 1e-12
    assert top_fine - top_coarse <= coarse.count_slack


def test_query_sidecar(tmp_path):
    q = QuerySet.from_points(np.zeros((2, 3)))
    write_queries(tmp_path / "q.csv", q)
    assert (tmp_path / "q.csv.json").read_text().count('"witnesses"') == 1
