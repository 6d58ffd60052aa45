import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from pytest import approx

from dmstream import DegenerateLabelsError, auc_roc, friedman_q, nemenyi, roc_points
from dmstream.data import ANOMALY, NORMAL

# AUC of 13 streaming detectors over the 10 fully-populated benchmark
# datasets (rows with missing cells already dropped).
BENCHMARK_AUC_TABLE = np.array(
    [
        [0.507, 0.673, 0.515, 0.532, 0.617, 0.501, 0.966, 0.570, 0.918, 0.986, 0.921, 0.884, 0.989],
        [0.778, 0.731, 0.603, 0.640, 0.586, 0.500, 0.888, 0.688, 0.894, 0.874, 0.902, 0.952, 0.923],
        [0.511, 0.707, 0.529, 0.527, 0.514, 0.500, 0.907, 0.613, 0.800, 0.930, 0.734, 0.938, 0.788],
        [0.637, 0.764, 0.694, 0.772, 0.675, 0.503, 0.514, 0.928, 0.847, 0.670, 0.872, 0.821, 0.928],
        [0.914, 0.912, 0.575, 0.859, 0.791, 0.500, 0.525, 0.535, 0.957, 0.844, 0.874, 0.980, 0.995],
        [0.650, 0.832, 0.574, 0.773, 0.755, 0.500, 0.592, 0.733, 0.856, 0.567, 0.867, 0.894, 0.914],
        [0.504, 0.845, 0.500, 0.701, 0.745, 0.500, 0.659, 0.821, 0.552, 0.544, 0.767, 0.978, 0.982],
        [0.528, 0.667, 0.525, 0.562, 0.571, 0.502, 0.511, 0.543, 0.663, 0.529, 0.672, 0.742, 0.750],
        [0.662, 0.519, 0.504, 0.675, 0.552, 0.500, 0.665, 0.561, 0.677, 0.563, 0.716, 0.727, 0.764],
        [0.514, 0.929, 0.554, 0.685, 0.738, 0.500, 0.973, 0.563, 0.996, 0.958, 0.995, 0.991, 0.996],
    ]
)


def labels_from(mask):
    return [ANOMALY if m else NORMAL for m in mask]


# ---------------------------------------------------------------- auc_roc

def test_auc_perfect_separation():
    scores = [0.9, 0.8, 0.1, 0.2]
    labels = labels_from([True, True, False, False])
    assert auc_roc(scores, labels) == 1.0


def test_auc_all_ties_is_half():
    scores = [0.5] * 10
    labels = labels_from([True] * 4 + [False] * 6)
    assert auc_roc(scores, labels) == 0.5


def test_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(0)
    scores = rng.choice(np.linspace(0, 1, 40), size=200)  # force ties
    mask = rng.uniform(size=200) < 0.3
    labels = labels_from(mask)
    anom = scores[mask]
    norm = scores[~mask]
    wins = 0.0
    for a in anom:
        for n in norm:
            if a > n:
                wins += 1.0
            elif a == n:
                wins += 0.5
    brute = wins / (anom.size * norm.size)
    assert auc_roc(scores, labels) == approx(brute, abs=1e-12)


def test_auc_one_class_rejected():
    with pytest.raises(DegenerateLabelsError):
        auc_roc([0.1, 0.2], labels_from([True, True]))


@given(st.data())
@settings(deadline=None, max_examples=30)
def test_auc_monotone_transform_invariant(data):
    n = data.draw(st.integers(5, 60))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**31)))
    scores = rng.normal(size=n)
    mask = rng.uniform(size=n) < 0.5
    if mask.all() or not mask.any():
        mask[0] = True
        mask[1] = False
    labels = labels_from(mask)
    base = auc_roc(scores, labels)
    for f in (np.exp, lambda s: s**3, lambda s: 5 * s - 2):
        assert auc_roc(f(scores), labels) == approx(base, abs=1e-12)


def test_roc_points_match_trapezoid_auc():
    rng = np.random.default_rng(3)
    scores = rng.normal(size=150)
    mask = rng.uniform(size=150) < 0.4
    mask[0], mask[1] = True, False
    labels = labels_from(mask)
    fpr, tpr = roc_points(scores, labels)
    assert fpr[0] == 0.0 and tpr[0] == 0.0
    assert fpr[-1] == 1.0 and tpr[-1] == 1.0
    assert np.all(np.diff(fpr) >= 0) and np.all(np.diff(tpr) >= 0)
    assert np.trapezoid(tpr, fpr) == approx(auc_roc(scores, labels), abs=1e-12)


# ---------------------------------------------------------------- friedman

def test_friedman_identical_columns():
    m = np.tile([[0.5], [0.7], [0.9]], (1, 3))
    q, p = friedman_q(m)
    assert q == approx(0.0, abs=1e-12)
    assert p == approx(1.0, abs=1e-12)


def test_friedman_hand_computed_strict_order():
    # ranks per row are (1, 2, 3): R = (3, 6, 9), N = k = 3 -> Q = 6
    m = np.array([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [0.1, 0.5, 0.9]])
    q, p = friedman_q(m)
    assert q == approx(6.0, abs=1e-12)
    assert 0.0 < p < 1.0


def test_friedman_benchmark_table_significant():
    q, p = friedman_q(BENCHMARK_AUC_TABLE)
    assert p < 0.05


@given(st.integers(0, 2**31))
@settings(deadline=None, max_examples=20)
def test_friedman_rank_invariance(seed):
    rng = np.random.default_rng(seed)
    m = rng.uniform(0.3, 1.0, size=(5, 4))
    q0, p0 = friedman_q(m)
    # a different strictly monotone map per row leaves ranks unchanged
    transforms = [np.exp, lambda v: v**2, lambda v: 10 * v - 3, np.sqrt, np.log]
    m2 = np.stack([transforms[i % len(transforms)](m[i]) for i in range(5)])
    q1, p1 = friedman_q(m2)
    assert q1 == approx(q0, abs=1e-9)
    assert p1 == approx(p0, abs=1e-9)


def test_friedman_rejects_bad_input():
    with pytest.raises(ValueError):
        friedman_q(np.array([[1.0, 2.0]]))  # single row
    bad = np.array([[1.0, np.nan], [0.5, 0.6]])
    with pytest.raises(ValueError):
        friedman_q(bad)


# ---------------------------------------------------------------- nemenyi

def test_nemenyi_identical_columns_all_ones():
    m = np.tile([[0.5], [0.7], [0.9], [0.2]], (1, 3))
    p = nemenyi(m)
    assert p == approx(np.ones((3, 3)), abs=1e-9)


def test_nemenyi_dominant_column_most_different():
    rng = np.random.default_rng(1)
    base = rng.uniform(0.3, 0.6, size=(10, 2))
    dominant = base.max(axis=1)[:, None] + rng.uniform(0.05, 0.2, size=(10, 1))
    m = np.concatenate([base, dominant], axis=1)
    p = nemenyi(m)
    off_diag = p[~np.eye(3, dtype=bool)]
    assert p[0, 2] == off_diag.min() or p[1, 2] == off_diag.min()
    assert p[2, 0] <= p[1, 0] + 1e-12  # column 2 separates at least as much


def test_nemenyi_symmetric_unit_diagonal():
    rng = np.random.default_rng(2)
    m = rng.uniform(size=(6, 5))
    p = nemenyi(m)
    assert np.array_equal(p, p.T)
    assert np.all(np.diag(p) == 1.0)
    assert np.all((p >= 0) & (p <= 1))


def test_nemenyi_benchmark_table():
    p = nemenyi(BENCHMARK_AUC_TABLE)
    assert np.array_equal(p, p.T)
    assert np.all(np.diag(p) == 1.0)
