import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from morphlab.errors import DimensionError
from morphlab.memorization import PredictionHistory
from morphlab.safe_set import MaximalSafeSet, evolve, init_safe_set


def make_hist(preds, k):
    """History with a single recorded epoch of predictions."""
    h = PredictionHistory(len(preds), k, q=3)
    h.record_epoch(np.asarray(preds))
    return h


def test_init_members():
    s = init_safe_set([0, 2, 5], t_tr=10, n_samples=8)
    assert s.size == 3
    assert np.array_equal(s.as_sorted_array(), [0, 2, 5])
    assert s.creation_epoch == 10
    assert s.total_added == 0 and s.total_removed == 0


def test_init_empty_ok():
    s = init_safe_set([], t_tr=3, n_samples=5)
    assert s.size == 0


def test_init_deduplicates():
    s = init_safe_set([1, 1, 2, 2, 2], t_tr=0, n_samples=4)
    assert s.size == 2


def test_init_out_of_range():
    with pytest.raises(DimensionError):
        init_safe_set([0, 9], t_tr=0, n_samples=5)


def test_evolve_no_changes():
    preds = np.array([0, 1, 2, 0])
    noisy = preds.copy()  # everyone memorized
    h = make_hist(preds, 3)
    s = init_safe_set([0, 1, 2, 3], 0, 4)
    c, r = evolve(s, np.array([0, 1, 2, 3]), h, noisy)
    assert c.size == 0 and r.size == 0
    assert s.size == 4


def test_evolve_from_empty_set():
    preds = np.array([0, 1, 2, 0])
    noisy = preds.copy()
    h = make_hist(preds, 3)
    s = init_safe_set([], 0, 4)
    batch = np.array([1, 3])
    c, r = evolve(s, batch, h, noisy)
    assert np.array_equal(c, [1, 3])
    assert r.size == 0
    assert np.array_equal(s.as_sorted_array(), [1, 3])


def test_evolve_removes_forgotten():
    preds = np.array([1, 1])   # sample 0 no longer predicts its noisy label 0
    noisy = np.array([0, 1])
    h = make_hist(preds, 2)
    s = init_safe_set([0, 1], 0, 2)
    c, r = evolve(s, np.array([0, 1]), h, noisy)
    assert np.array_equal(r, [0])
    assert c.size == 0
    assert np.array_equal(s.as_sorted_array(), [1])


def test_evolve_out_of_batch_untouched():
    preds = np.array([1, 1, 1])
    noisy = np.array([0, 0, 0])  # nobody memorized
    h = make_hist(preds, 2)
    s = init_safe_set([0, 2], 0, 3)
    c, r = evolve(s, np.array([0]), h, noisy)
    assert np.array_equal(r, [0])
    assert 2 in s  # outside the batch: membership unchanged


def test_evolve_counters():
    preds = np.array([0, 1, 0])
    noisy = np.array([0, 0, 0])
    h = make_hist(preds, 2)
    s = init_safe_set([1], 0, 3)
    c, r = evolve(s, np.array([0, 1, 2]), h, noisy)
    assert s.total_added == c.size == 2
    assert s.total_removed == r.size == 1


def test_evolve_batch_index_out_of_range():
    h = make_hist(np.array([0, 1]), 2)
    s = init_safe_set([0], 0, 2)
    with pytest.raises(DimensionError):
        evolve(s, np.array([5]), h, np.array([0, 1]))


def brute_force_evolve(members, batch, hist, noisy):
    """Direct evaluation of both membership comprehensions."""
    def memorized(i):
        probs = [hist.label_prob(i, y) for y in range(hist.num_classes)]
        return int(np.argmax(probs)) == noisy[i]
    c = sorted(i for i in batch if i not in members and memorized(i))
    r = sorted(i for i in batch if i in members and not memorized(i))
    new = (members | set(c)) - set(r)
    return new, c, r


@settings(max_examples=100, deadline=None)
@given(st.data())
def test_evolve_matches_bruteforce(data_):
    n, k = 30, 4
    rng = np.random.default_rng(data_.draw(st.integers(0, 2**31)))
    h = PredictionHistory(n, k, q=3)
    for _ in range(rng.integers(1, 5)):
        h.record_epoch(rng.integers(0, k, size=n))
    noisy = rng.integers(0, k, size=n)
    members = set(rng.choice(n, size=rng.integers(0, n), replace=False).tolist())
    batch = rng.choice(n, size=rng.integers(1, n), replace=False)
    s = MaximalSafeSet(np.array(sorted(members)), 0, n)
    size_before = s.size
    c, r = evolve(s, batch, h, noisy)
    expected, ec, er = brute_force_evolve(members, set(batch.tolist()), h, noisy)
    assert np.array_equal(c, ec)
    assert np.array_equal(r, er)
    assert set(s.as_sorted_array().tolist()) == expected
    # algebraic invariants
    bset = set(batch.tolist())
    assert set(c.tolist()) <= bset and set(r.tolist()) <= bset
    assert set(c.tolist()).isdisjoint(members)
    assert set(r.tolist()) <= members
    assert set(c.tolist()).isdisjoint(set(r.tolist()))
    assert s.size == size_before + c.size - r.size


def test_write_indices(tmp_path):
    s = init_safe_set([4, 0, 2], 0, 6)
    p = tmp_path / "safe.txt"
    s.write_indices(p)
    assert p.read_text() == "0\n2\n4\n"
