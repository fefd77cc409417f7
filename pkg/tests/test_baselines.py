import numpy as np
import pytest

from conftest import mixture
from kdecoreset import (
    Dataset, Domain, InputError, KernelSpec, build, herd, herding_path, kernel_distance,
    linf_error, random_sample, sample_queries,
)
from kdecoreset.baselines import herd_from_path
from kdecoreset.evaluation import ReferenceEvaluator

GAUSS2 = KernelSpec("gaussian", 1.0, Domain.euclidean(2))


def brute_force_herding(kernel, ds, steps):
    """Try every candidate each step and keep the smallest kernel distance."""
    G = kernel.matrix(ds.points, ds.points)
    n = ds.n
    counts = np.zeros(n)
    picks = []
    for t in range(steps):
        best, arg = np.inf, -1
        for j in np.argsort(ds.ids, kind="stable"):
            c = counts.copy()
            c[j] += 1
            w = c / c.sum() - 1.0 / n
            val = w @ G @ w
            if val < best - 1e-13:
                best, arg = val, j
        counts[arg] += 1
        picks.append(arg)
    return np.array(picks)


def test_random_sample_full_size_is_permutation():
    ds = Dataset(mixture(30, 0), Domain.euclidean(2))
    cs = random_sample(ds, 30, 4)
    assert sorted(cs.ids) == sorted(ds.ids)
    assert linf_error(GAUSS2, ds, cs, sample_queries(GAUSS2, ds, 90, 0)).linf_error <= 1e-15


def test_random_sample_of_identical_points():
    ds = Dataset(np.ones((8, 2)), Domain.euclidean(2))
    assert linf_error(GAUSS2, ds, random_sample(ds, 1, 0), sample_queries(GAUSS2, ds, 20, 0)).linf_error <= 1e-15
    with pytest.raises(InputError):
        random_sample(ds, 9, 0)


def test_first_pick_maximizes_mean_similarity():
    ds = Dataset(mixture(100, 1), Domain.euclidean(2))
    first = herding_path(GAUSS2, ds, 1).selected[0]
    kdes = GAUSS2.matrix(ds.points, ds.points).mean(axis=1)
    assert first == int(np.argmax(kdes))


def test_identical_points_pick_lowest_id():
    ds = Dataset(np.zeros((5, 2)), Domain.euclidean(2), ids=[7, 3, 9, 4, 5])
    assert herd(GAUSS2, ds, 1).ids.tolist() == [3]


@pytest.mark.parametrize("seed", range(4))
def test_matches_brute_force_greedy(seed):
    ds = Dataset(np.random.default_rng(seed).normal(size=(25, 2)), Domain.euclidean(2))
    path = herding_path(GAUSS2, ds, 15)
    assert np.array_equal(path.selected, brute_force_herding(GAUSS2, ds, 15))


def test_path_distances_match_direct_computation():
    ds = Dataset(mixture(60, 2), Domain.euclidean(2))
    path = herding_path(GAUSS2, ds, 20)
    for t in (1, 5, 20):
        cs = herd_from_path(ds, path, t)
        assert path.distances[t - 1] == pytest.approx(kernel_distance(GAUSS2, ds, cs), abs=1e-7)
        assert abs(cs.weights.sum() - 1) <= 1e-12 and set(cs.ids) <= set(ds.ids)
        assert len(set(cs.ids)) == cs.size


def test_herding_bound_and_decay():
    ds = Dataset(np.random.default_rng(0).normal(size=(256, 2)), Domain.euclidean(2))
    d = herding_path(GAUSS2, ds, 64).distances
    t = np.arange(1, 65)
    assert np.all(d <= np.sqrt(8 / t))
    assert np.polyfit(np.log(t), np.log(d), 1)[0] <= -0.4


@pytest.mark.slow
def test_random_sampling_loses_to_halving():
    ours, rand = [], []
    for seed in range(20):
        ds = Dataset(mixture(4096, seed), Domain.euclidean(2))
        ev = ReferenceEvaluator(GAUSS2, ds, sample_queries(GAUSS2, ds, 8192, seed))
        ours.append(ev.report(build(GAUSS2, ds, 64, seed)).linf_error)
        rand.append(ev.report(random_sample(ds, 64, seed)).linf_error)
    assert np.median(rand) > np.median(ours)
