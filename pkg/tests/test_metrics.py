import numpy as np
import pytest

from mega_bandits.env import RoundOutcome
from mega_bandits.metrics import (
    RegretTrace,
    aggregate,
    collision_indicators,
    instantaneous_pseudo_regret,
    loglog_slope,
    logged_rounds,
    optimal_set,
    pairwise_collision_counts,
    realized_regret_increment,
)

MU = (0.9, 0.5)


def outcome(arms, rewards=None, collisions=None):
    n = len(arms)
    if collisions is None:
        live = [a for a in arms if a is not None]
        collisions = tuple(int(a is not None and live.count(a) > 1) for a in arms)
    return RoundOutcome(1, tuple(range(n)), tuple(arms), tuple(rewards or (0.0,) * n),
                        tuple(collisions))


def test_optimal_set():
    assert optimal_set(MU, 1) == {0}
    assert optimal_set(MU, 2) == {0, 1}
    assert optimal_set((0.3, 0.7, 0.7, 0.1), 2) == {1, 2}
    assert optimal_set((0.7, 0.7, 0.7), 2) == {0, 1}
    with pytest.raises(ValueError):
        optimal_set(MU, 3)


def test_optimal_set_matches_sort_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        mu = rng.integers(0, 5, size=7) / 4
        n = int(rng.integers(1, 8))
        oracle = {k for _, k in sorted((-m, k) for k, m in enumerate(mu))[:n]}
        assert optimal_set(mu, n) == oracle


def test_pseudo_regret_examples():
    assert instantaneous_pseudo_regret(MU, 2, outcome((0, 1))) == 0.0
    assert instantaneous_pseudo_regret(MU, 2, outcome((0, 0))) == pytest.approx(1.4)
    assert instantaneous_pseudo_regret(MU, 1, outcome((1,))) == pytest.approx(0.4)
    assert instantaneous_pseudo_regret(MU, 2, outcome((0, None))) == pytest.approx(0.5)


def test_pseudo_regret_needs_all_active():
    with pytest.raises(ValueError):
        instantaneous_pseudo_regret(MU, 2, outcome((0,)))


def test_realized_regret_examples():
    assert realized_regret_increment(MU, 2, outcome((0, 1), (1.0, 1.0))) == pytest.approx(-0.6)
    both = outcome((0, 0))
    assert realized_regret_increment(MU, 2, both) == instantaneous_pseudo_regret(MU, 2, both)


def test_realized_matches_pseudo_on_average():
    rng = np.random.default_rng(1)
    mu = (0.9, 0.5, 0.2)
    n = 100_000
    r = np.array([
        realized_regret_increment(mu, 2, outcome((0, 2), (float(a < 0.9), float(b < 0.2))))
        for a, b in rng.random((n, 2))
    ])
    pseudo = instantaneous_pseudo_regret(mu, 2, outcome((0, 2)))
    assert abs(r.mean() - pseudo) < 3 * r.std() / np.sqrt(n)


def test_zero_regret_iff_optimal_set():
    mu = (0.8, 0.6, 0.4, 0.2)
    for a in range(-1, 4):
        for b in range(-1, 4):
            arms = tuple(None if x < 0 else x for x in (a, b))
            out = outcome(arms)
            served = {x for x, c in zip(out.arms, out.collisions) if x is not None and not c}
            zero = instantaneous_pseudo_regret(mu, 2, out) == 0.0
            assert zero == (served == {0, 1})


def test_trace_from_increments():
    pseudo = np.array([1.0, 0.0, 2.0, 0.5, 0.5])
    coll = np.array([[1, 0, 1, 0, 0], [1, 0, 0, 0, 1]], dtype=bool)
    tr = RegretTrace.from_increments(pseudo, pseudo, coll, stride=2)
    np.testing.assert_array_equal(tr.t, [2, 4, 5])
    np.testing.assert_allclose(tr.pseudo_regret, [1.0, 3.5, 4.0])
    np.testing.assert_array_equal(tr.collisions, [[1, 2, 2], [1, 1, 2]])
    np.testing.assert_allclose(tr.collisions_per_user, [1.0, 1.5, 2.0])


def test_logged_rounds():
    assert len(logged_rounds(100_000, 100)) == 1000
    assert list(logged_rounds(7, 3)) == [3, 6, 7]
    assert len(logged_rounds(0, 100)) == 0


def _trace(value, n=5):
    s = np.full(n, float(value))
    return RegretTrace(np.arange(1, n + 1), s, s, np.full((2, n), value, dtype=np.int64))


def test_aggregate_simple():
    a = aggregate([_trace(3)])
    assert np.all(a.pseudo_regret_std == 0) and a.repetitions == 1
    b = aggregate([_trace(0), _trace(2)])
    np.testing.assert_allclose(b.pseudo_regret_mean, 1.0)
    np.testing.assert_allclose(b.collisions_per_user_mean, 1.0)
    np.testing.assert_allclose(b.pseudo_regret_std, 1.0)


def test_aggregate_errors():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ValueError):
        aggregate([_trace(0, 5), _trace(0, 6)])


def test_aggregate_noise_std():
    rng = np.random.default_rng(2)
    n_pts = 2000
    traces = []
    for _ in range(50):
        x = rng.standard_normal(n_pts)
        traces.append(RegretTrace(np.arange(1, n_pts + 1), x, x, np.zeros((1, n_pts), dtype=np.int64)))
    a = aggregate(traces)
    inside = (a.pseudo_regret_std >= 0.7) & (a.pseudo_regret_std <= 1.3)
    assert inside.mean() >= 0.99
    lo = np.min([t.pseudo_regret for t in traces], axis=0)
    hi = np.max([t.pseudo_regret for t in traces], axis=0)
    assert np.all((a.pseudo_regret_mean >= lo) & (a.pseudo_regret_mean <= hi))


def test_collision_indicators_and_pairs():
    choices = np.array([
        [0, 1, 1, -1, 2],
        [0, 1, 2, -1, 2],
        [1, 1, 0, -2, 2],
    ])
    ind = collision_indicators(choices)
    np.testing.assert_array_equal(ind, [
        [1, 1, 0, 0, 1],
        [1, 1, 0, 0, 1],
        [0, 1, 0, 0, 1],
    ])
    pc = pairwise_collision_counts(choices, [2, 5], K=3)
    assert pc[0, 0, 1].tolist() == [1, 1, 0]
    assert pc[1, 0, 1].tolist() == [1, 1, 1]
    assert pc[1, 1, 0].tolist() == [1, 1, 1]
    assert pc[1, 0, 2].tolist() == [0, 1, 1]
    assert pc[1, 0, 0].sum() == 0


def test_loglog_slope():
    t = np.logspace(3, 5, 50)
    assert loglog_slope(t, 7 * t**0.6, 1e3, 1e5) == pytest.approx(0.6)
    with pytest.raises(ValueError):
        loglog_slope(t, np.zeros_like(t), 1e3, 1e5)
