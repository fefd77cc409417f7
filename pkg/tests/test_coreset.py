import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import mixture
from kdecoreset import (
    Dataset, Domain, InputError, KernelSpec, build, build_lattice, build_streaming, halve,
    halving_levels, linf_error, random_sample, sample_queries, target_for_epsilon,
)
from kdecoreset.coreset import Coreset, MergeReduce, uniform
from kdecoreset.discrepancy import signed_sums
from kdecoreset.lattice import QuerySet

GAUSS1 = KernelSpec("gaussian", 1.0, Domain.euclidean(1))
GAUSS2 = KernelSpec("gaussian", 1.0, Domain.euclidean(2))


def test_two_identical_points():
    ds = Dataset([[0.4], [0.4]], Domain.euclidean(1))
    kept, col = halve(GAUSS1, ds, 0)
    assert kept.n == 1 and col.imbalance == 0
    q = QuerySet.from_points([[0.0], [0.4], [2.0]])
    assert linf_error(GAUSS1, ds, uniform(kept, "halving"), q).linf_error == 0.0


def test_two_far_points():
    ds = Dataset([[0.0], [40.0]], Domain.euclidean(1))
    kept, _ = halve(GAUSS1, ds, 3)
    dropped = 40.0 if kept.points[0, 0] == 0.0 else 0.0
    rep = linf_error(GAUSS1, ds, uniform(kept, "halving"), QuerySet.from_points([[dropped]]))
    assert rep.linf_error == pytest.approx(0.5, abs=1e-12)


@given(n=st.integers(2, 60), seed=st.integers(0, 1000))
def test_halve_sizes_and_odd_carry(n, seed):
    pts = np.random.default_rng(seed).normal(size=(n, 2))
    ids = np.random.default_rng(seed + 1).permutation(1000)[:n]
    ds = Dataset(pts, Domain.euclidean(2), ids)
    kept, col = halve(GAUSS2, ds, seed)
    assert kept.n == n // 2 + n % 2
    assert set(kept.ids) <= set(ds.ids) and len(set(kept.ids)) == kept.n
    assert col.imbalance == 0
    if n % 2:
        assert ids.min() in kept.ids and ids.min() not in col.ids


def test_five_points_keep_three():
    ds = Dataset(np.arange(5.0)[:, None], Domain.euclidean(1))
    assert halve(GAUSS1, ds, 0)[0].n == 3


def test_build_trivial_target():
    ds = Dataset(mixture(50, 0), Domain.euclidean(2))
    cs = build(GAUSS2, ds, 50, 1)
    assert cs.halving_depth == 0 and np.array_equal(cs.subset.points, ds.points)
    with pytest.raises(InputError):
        build(GAUSS2, ds, 0, 1)


def test_build_depth_and_certificates():
    ds = Dataset(mixture(4096, 1), Domain.euclidean(2))
    cs = build(GAUSS2, ds, 64, 2)
    assert cs.halving_depth == 6 and cs.size == 64
    assert len(cs.certificates) == 6
    assert np.all(cs.weights == 1 / 64)
    assert set(cs.ids) <= set(ds.ids)


def test_duplicates_halve_well():
    base = np.random.default_rng(2).normal(size=(64, 2)) * 2
    ds = Dataset(np.tile(base, (64, 1)), Domain.euclidean(2))
    q = sample_queries(GAUSS2, ds, 4096, 0)
    ours = linf_error(GAUSS2, ds, build(GAUSS2, ds, 64, 0), q).linf_error
    rand = linf_error(GAUSS2, ds, random_sample(ds, 64, 0), q).linf_error
    assert ours <= 1e-9 or ours <= rand


@pytest.mark.parametrize("seed", range(3))
def test_error_telescopes_over_levels(seed):
    rng = np.random.default_rng(seed)
    ds = Dataset(rng.uniform(0, 4, size=(64, 1)), Domain.euclidean(1))
    q = build_lattice(GAUSS1, ds, 1e-6)
    current, bound = ds, 0.0
    for step in halving_levels(GAUSS1, ds, seed, 4):
        bound += np.abs(signed_sums(step.coloring, GAUSS1, current, q)).max() / current.n
        current = step.kept
    rep = linf_error(GAUSS1, ds, uniform(current, "halving"), q)
    assert rep.linf_error <= bound + 1e-12


def test_halving_prefix_property():
    ds = Dataset(mixture(256, 3), Domain.euclidean(2))
    chain = [s.kept.ids for s in halving_levels(GAUSS2, ds, 7, 16)]
    assert np.array_equal(build(GAUSS2, ds, 64, 7).ids, chain[1])
    assert np.array_equal(build(GAUSS2, ds, 16, 7).ids, chain[3])


def test_target_for_epsilon():
    assert target_for_epsilon(0.1, 4) == 31
    assert target_for_epsilon(0.5, 1) == 2


def test_coreset_validation_and_write(tmp_path):
    ds = Dataset(mixture(10, 0), Domain.euclidean(2))
    with pytest.raises(InputError):
        Coreset(ds, np.full(10, 0.2), "halving")
    with pytest.raises(InputError):
        Coreset(ds, np.full(10, 0.1), "magic")
    cs = build(GAUSS2, ds, 5, 0)
    cs.write(tmp_path / "c.csv")
    meta = json.loads((tmp_path / "c.csv.json").read_text())
    assert meta["method"] == "halving" and meta["halving_depth"] == 1
    assert len((tmp_path / "c.csv").read_text().strip().splitlines()) == 6


def test_single_block_stream_equals_build():
    ds = Dataset(mixture(512, 4), Domain.euclidean(2))
    a = build_streaming(GAUSS2, ds, 512, 64, 9)
    b = build(GAUSS2, ds, 64, 9)
    assert np.array_equal(a.ids, b.ids) and np.array_equal(a.subset.points, b.subset.points)
    assert a.method == "merge_reduce" and a.info["merge_events"] == 0


def test_four_blocks_merge_three_times():
    ds = Dataset(mixture(1024, 5), Domain.euclidean(2))
    cs = build_streaming(GAUSS2, ds, 256, 32, 0)
    assert cs.info["merge_events"] == 3
    assert cs.size <= 32 and set(cs.ids) <= set(ds.ids)


def test_stream_of_raw_points_and_memory():
    pts = mixture(700, 6)
    mr = MergeReduce(GAUSS2, 100, 20, 0)
    peak = 0
    for i, p in enumerate(pts):
        mr.push(p, i, GAUSS2.domain)
        peak = max(peak, mr.live_points())
    assert peak <= 100 * (1 + int(np.log2(7)) + 1)
    cs = mr.finish(GAUSS2.domain)
    assert cs.size <= 20 and cs.parent_size == 700
    cs2 = build_streaming(GAUSS2, iter(pts), 100, 20, 0, domain=GAUSS2.domain)
    assert np.array_equal(cs.ids, cs2.ids)


def test_stream_rejects_small_blocks():
    with pytest.raises(InputError):
        build_streaming(GAUSS2, Dataset(mixture(10, 0), GAUSS2.domain), 10, 6, 0)
