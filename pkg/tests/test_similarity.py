import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SAMPLE_MATRIX, one_hot_profile, random_profile, universe
from mobsoc.profile import BehavioralProfile, UniverseMismatchError, compute_svd, profile_from_svd
from mobsoc.similarity import (
    SimilarityGraph,
    SimilarityMatrix,
    build_similarity_graph,
    cdf_to_csv,
    pairwise_similarity,
    similarity_cdf,
    similarity_histogram,
    similarity_matrix,
)


def brute_force_sim(X, Y):
    total = 0.0
    for i in range(X.k):
        for j in range(Y.k):
            dot = sum(float(a) * float(b) for a, b in zip(X.vectors[i], Y.vectors[j]))
            total += X.weights[i] * Y.weights[j] * abs(dot)
    return total


def test_identical_rank_one_profiles():
    x = one_hot_profile("x", 1, 4)
    assert pairwise_similarity(x, x) == 1.0


def test_orthogonal_one_hots():
    uni = universe(4)
    assert pairwise_similarity(one_hot_profile("x", 0, 4, uni), one_hot_profile("y", 2, 4, uni)) == 0.0


def test_sample_matrix_self_similarity():
    prof = profile_from_svd(compute_svd(SAMPLE_MATRIX), universe=universe(5))
    got = pairwise_similarity(prof, prof)
    assert got == pytest.approx(float((prof.weights**2).sum()), abs=1e-12)
    assert got == pytest.approx(brute_force_sim(prof, prof), abs=1e-12)
    assert got < 1.0


def test_mismatched_universe_rejected():
    a = one_hot_profile("a", 0, 3)
    b = one_hot_profile("b", 0, 3, universe(3).__class__.from_ids(["x", "y", "z"]))
    with pytest.raises(UniverseMismatchError):
        pairwise_similarity(a, b)


@st.composite
def profile_pairs(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, 12))
    rng = np.random.default_rng(seed)
    uni = universe(n)
    return random_profile(rng, n, uni, "x", max_k=n), random_profile(rng, n, uni, "y", max_k=n), rng


@given(profile_pairs())
@settings(max_examples=200, deadline=None)
def test_similarity_properties(pair):
    x, y, rng = pair
    s = pairwise_similarity(x, y)
    assert s == pairwise_similarity(y, x)
    assert 0.0 <= s <= 1.0
    assert s == pytest.approx(brute_force_sim(x, y), abs=1e-12)
    assert pairwise_similarity(x, x) == pytest.approx(float((x.weights**2).sum()), abs=1e-12)
    perm = rng.permutation(x.vectors.shape[1])
    xp = BehavioralProfile("x", x.vectors[:, perm], x.weights, x.captured_power, x.universe)
    yp = BehavioralProfile("y", y.vectors[:, perm], y.weights, y.captured_power, y.universe)
    assert pairwise_similarity(xp, yp) == pytest.approx(s, abs=1e-12)


def test_matrix_examples():
    uni = universe(3)
    same = [one_hot_profile(f"u{i}", 0, 3, uni) for i in range(3)]
    m = similarity_matrix(same)
    np.testing.assert_array_equal(m.pair_scores(), [1.0, 1.0, 1.0])
    mixed = [one_hot_profile("a", 0, 3, uni), one_hot_profile("b", 1, 3, uni), one_hot_profile("c", 0, 3, uni)]
    assert sorted(similarity_matrix(mixed).pair_scores().tolist()) == [0.0, 0.0, 1.0]
    with pytest.raises(ValueError):
        similarity_matrix(same[:1])


def test_matrix_matches_pointwise_recomputation():
    rng = np.random.default_rng(3)
    uni = universe(20)
    profiles = [random_profile(rng, 20, uni, f"u{i}", max_k=7) for i in range(150)]
    m = similarity_matrix(profiles)
    np.testing.assert_array_equal(m.scores, m.scores.T)
    assert m.scores.min() >= 0 and m.scores.max() <= 1
    for i in range(150):
        assert m.scores[i, i] == pytest.approx(float((profiles[i].weights ** 2).sum()), abs=1e-12)
    for _ in range(30):
        i, j = rng.choice(150, size=2, replace=False)
        assert m.scores[i, j] == pytest.approx(pairwise_similarity(profiles[i], profiles[j]), abs=1e-12)


def _matrix(scores):
    scores = np.asarray(scores, dtype=float)
    return SimilarityMatrix(tuple(f"u{i}" for i in range(len(scores))), scores)


def _from_pairs(m, values):
    S = np.eye(m)
    S[np.triu_indices(m, 1)] = values
    return _matrix(np.triu(S, 1) + np.triu(S, 1).T + np.eye(m))


def test_histogram_examples():
    ones = _from_pairs(4, [1.0] * 6)
    h = similarity_histogram(ones)
    assert h.counts.tolist() == [0] * 9 + [6]
    m = _from_pairs(5, [0.05 + 0.1 * i for i in range(10)])
    assert similarity_histogram(m).counts.tolist() == [1] * 10
    assert similarity_histogram(m, bins=1).counts.tolist() == [10]
    with pytest.raises(ValueError):
        similarity_histogram(m, bins=0)


def test_histogram_csv_and_lognorm():
    m = _from_pairs(5, [0.05 + 0.1 * i for i in range(10)])
    h = similarity_histogram(m)
    lines = h.to_csv().splitlines()
    assert lines[0] == "bin_low,bin_high,count"
    assert len(lines) == 11
    assert h.fractions().sum() == pytest.approx(1.0)
    rows = [line.split(",") for line in h.to_lognorm_csv().splitlines()[1:]]
    assert sum(float(r[2]) for r in rows) == pytest.approx(1.0)
    assert float(rows[0][3]) == pytest.approx(math.log10(0.1))


def test_cdf_examples():
    assert similarity_cdf(_from_pairs(3, [0.9, 0.9, 0.9])) == [(0.9, 1.0)]
    assert similarity_cdf(_from_pairs(2, [0.2])) == [(0.2, 1.0)]
    cdf = similarity_cdf(_from_pairs(3, [0.2, 0.8, 0.8]))
    assert cdf[0] == (0.2, pytest.approx(1 / 3)) and cdf[-1] == (0.8, 1.0)
    assert cdf_to_csv([(0.2, 0.5), (0.8, 1.0)]) == "score,cum_fraction\n0.2,0.5\n0.8,1.0\n"


def test_cdf_two_scores_equal_steps():
    # no matrix has exactly two pairs; equal multiplicities give the same half steps
    cdf = similarity_cdf(_from_pairs(4, [0.2, 0.8, 0.2, 0.8, 0.2, 0.8]))
    assert cdf == [(0.2, 0.5), (0.8, 1.0)]


@given(st.integers(0, 10**6), st.integers(2, 30))
@settings(max_examples=60, deadline=None)
def test_cdf_nondecreasing_and_ends_at_one(seed, m):
    rng = np.random.default_rng(seed)
    mat = _from_pairs(m, rng.random(m * (m - 1) // 2))
    cdf = similarity_cdf(mat)
    fr = [c for _, c in cdf]
    assert fr == sorted(fr) and fr[-1] == 1.0
    assert [s for s, _ in cdf] == sorted({s for s, _ in cdf})


def test_graph_examples():
    rng = np.random.default_rng(0)
    vals = rng.random(10) * 0.99
    m = _from_pairs(5, vals)
    g0 = build_similarity_graph(m, 0.0)
    assert g0.n_edges == 10 and g0.n_vertices == 5
    assert build_similarity_graph(m, 1.0).n_edges == 0
    with pytest.raises(ValueError):
        build_similarity_graph(m, 1.5)


def test_two_identical_pairs_graph():
    uni = universe(2)
    profiles = [one_hot_profile(f"u{i}", i // 2, 2, uni) for i in range(4)]
    g = build_similarity_graph(similarity_matrix(profiles), 0.5)
    assert g.edge_list() == [(0, 1), (2, 3)]
    assert g.to_edge_list_text() == "u0 u1 1.0\nu2 u3 1.0\n"
    assert np.all(g.weights >= 0.5)


@given(st.integers(0, 10**6), st.floats(0, 1), st.floats(0, 1))
@settings(max_examples=60, deadline=None)
def test_raising_threshold_never_adds_edges(seed, a, b):
    lo, hi = sorted((a, b))
    rng = np.random.default_rng(seed)
    m = _from_pairs(12, rng.random(66))
    g_lo = set(build_similarity_graph(m, lo).edge_list())
    g_hi = set(build_similarity_graph(m, hi).edge_list())
    assert g_hi <= g_lo


def test_graph_from_edges_validation():
    with pytest.raises(ValueError):
        SimilarityGraph.from_edges("abc", [("a", "a")])
    with pytest.raises(ValueError):
        SimilarityGraph.from_edges("abc", [("a", "b"), ("b", "a")])
    g = SimilarityGraph.from_edges("abc", [("b", "a"), ("c", "b")])
    assert g.edge_list() == [(0, 1), (1, 2)]
    assert g.degrees().tolist() == [1, 2, 1]
