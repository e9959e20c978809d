"""Closed-form bounds against hand-computed values and a second,
independently written evaluation (numpy, different association order)."""

import math

import numpy as np
import pytest

from mega_bandits import bounds as B
from mega_bandits.policies import MegaParams, epsilon_t

P = MegaParams(c=0.1, d=0.05, p0=0.6, alpha=0.5, beta=0.8)
REL = 1e-9


# independent oracles
def oracle_T(K, N, eps, delta):
    denom = eps**2 * np.prod(np.arange(K - 1, K - N, -1, dtype=float)) if N > 1 else eps**2
    return math.ceil(8.0 * N * float(K) ** N / denom * np.log(2 * K / delta) - 1e-9)


def oracle_availability(t, N, K, T, c, d, alpha, beta):
    c2 = (2 * c * K**2) / (d * (K - 1)) + (7 - 3 * alpha) / (1 - alpha)
    return N * K * (T + (1 + 8 * c2) * np.power(t, beta))


def oracle_exploration(t, N, K, c, d):
    m = c * K**2 / (d**2 * (K - 1))
    return N * m * (1 + np.log(t))


def oracle_collisions(t, N, K, p0, beta):
    return N**2 * K * (1 - p0 * p0) ** 0.5 / (1 - p0) * np.power(t, 1 - beta / 2)


def test_learning_time():
    assert B.learning_time_T(2, 2, 0.1, 0.1) == 23609
    assert B.learning_time_T(2, 2, 0.1, 0.1) == oracle_T(2, 2, 0.1, 0.1)
    # delta = 2K/e makes the log term 1; outside (0, 1), so via the raw expression
    assert B.learning_time_value(2, 1, 1.0, 4 / math.e) == pytest.approx(16.0, rel=REL)
    with pytest.raises(ValueError):
        B.learning_time_T(2, 1, 1.0, 4 / math.e)
    assert B.learning_time_T(9, 6, 0.1, 0.1) == oracle_T(9, 6, 0.1, 0.1)
    vals = [B.learning_time_T(5, 3, e, 0.1) for e in (0.1, 1, 10, 1e3, 1e6)]
    assert vals == sorted(vals, reverse=True) and vals[-1] <= 1


@pytest.mark.parametrize("args", [(2, 3, 0.1, 0.1), (3, 2, 0.1, 1.0), (3, 2, 0.1, 0.0), (3, 2, 0.0, 0.1)])
def test_learning_time_rejects(args):
    with pytest.raises(ValueError):
        B.learning_time_T(*args)


def test_learning_time_k_equals_n():
    assert B.learning_time_T(3, 3, 0.5, 0.1) == oracle_T(3, 3, 0.5, 0.1)


def test_c_from_T():
    assert B.c_from_T(0.05, 2, 23609) == pytest.approx(14.755625, rel=REL)
    assert B.c_from_T(1.0, 2, 4) == pytest.approx(1.0, rel=REL)
    with pytest.raises(ValueError):
        B.c_from_T(0.05, 1, 10)


@pytest.mark.parametrize("K, T", [(2, 23609), (9, 1000), (12, 5000)])
def test_c_from_T_keeps_full_exploration(K, T):
    params = MegaParams(c=B.c_from_T(0.05, K, T), d=0.05)
    assert epsilon_t(params, K, T - 1) == 1.0
    assert all(epsilon_t(params, K, t) == 1.0 for t in range(1, T, max(1, T // 50)))


def test_birthday():
    assert B.birthday_collision_prob(1, 7) == 0.0
    assert B.birthday_collision_prob(2, 2) == pytest.approx(0.5, rel=REL)
    assert B.birthday_collision_prob(3, 10) == pytest.approx(0.28, rel=REL)
    with pytest.raises(ValueError):
        B.birthday_collision_prob(3, 2)


def test_birthday_against_enumeration():
    import itertools
    for N, K in [(2, 3), (3, 4), (4, 5)]:
        picks = list(itertools.product(range(K), repeat=N))
        clash = sum(len(set(p)) < N for p in picks) / len(picks)
        assert B.birthday_collision_prob(N, K) == pytest.approx(clash, rel=REL)


def test_collision_constants_and_pairwise():
    l_up, l_low, c1 = B.collision_constants(0.6)
    assert l_up == pytest.approx(2.5, rel=REL)
    assert l_low == pytest.approx(1.5625, rel=REL)
    assert 2 * c1 == pytest.approx(4.0, rel=REL)
    assert B.pairwise_collision_bound(1e5, 0.6, 0.8) == pytest.approx(4000.0, rel=REL)
    # beta -> 0 limit: linear with coefficient 2 L_up / sqrt(L_low)
    assert B.pairwise_collision_bound(1e4, 0.6, 1e-12) == pytest.approx(4.0 * 1e4, rel=1e-9)


def test_total_collisions():
    assert B.total_collision_regret_bound(1e5, 2, 2, 0.6, 0.8) == pytest.approx(16000.0, rel=REL)
    for N, K, t in [(1, 3, 10), (6, 9, 1e4), (12, 12, 1e5)]:
        assert B.total_collision_regret_bound(t, N, K, 0.6, 0.8) == pytest.approx(
            oracle_collisions(t, N, K, 0.6, 0.8), rel=REL)


def test_exploration():
    assert B.m_explore(0.1, 0.05, 9) == 405
    assert B.exploration_regret_bound(1e4, 6, 9, 0.1, 0.05) == pytest.approx(24811.1, abs=0.1)
    assert B.exploration_regret_bound(1e4, 6, 9, 0.1, 0.05) == pytest.approx(
        oracle_exploration(1e4, 6, 9, 0.1, 0.05), rel=REL)
    assert B.exploration_regret_bound(1e4, 0, 9, 0.1, 0.05) == 0.0
    with pytest.raises(ValueError, match="m_explore"):
        B.exploration_regret_bound(405, 6, 9, 0.1, 0.05)
    assert B.exploration_regret_bound(406, 6, 9, 0.1, 0.05) > 0


def test_availability():
    c2, c3 = B.availability_constants(0.1, 0.05, 9, 0.5)
    assert c2 == pytest.approx(51.5, rel=REL)
    assert c3 == pytest.approx(413.0, rel=REL)
    v = B.availability_regret_bound(1e4, 6, 9, 1000, P)
    assert v == pytest.approx(3.539e7, rel=1e-3)
    assert v == pytest.approx(oracle_availability(1e4, 6, 9, 1000, 0.1, 0.05, 0.5, 0.8), rel=REL)
    assert B.availability_regret_bound(1, 6, 9, 0, P) == pytest.approx(6 * 9 * 413, rel=REL)


def test_availability_uses_d_not_d_squared():
    # this constant divides by d; with d^2 the first term would be 810
    c2, _ = B.availability_constants(0.1, 0.05, 9, 0.5)
    assert c2 - 11.0 == pytest.approx(40.5, rel=REL)


def test_availability_validity_flag():
    low = MegaParams(beta=0.5)
    with pytest.raises(ValueError, match="outside validity"):
        B.availability_regret_bound(1e4, 6, 9, 1000, low)
    with pytest.raises(ValueError, match="outside validity"):
        B.availability_regret_bound(1e4, 6, 9, 1000, MegaParams(beta=2 / 3))
    assert B.availability_regret_bound(1e4, 6, 9, 1000, low, strict=False) > 0


def test_total_is_sum_of_parts():
    t, N, K, T = 1e4, 6, 9, 1000
    total = B.total_regret_bound(t, N, K, T, P)
    parts = (oracle_collisions(t, N, K, 0.6, 0.8)
             + oracle_availability(t, N, K, T, 0.1, 0.05, 0.5, 0.8)
             + oracle_exploration(t, N, K, 0.1, 0.05))
    assert total == pytest.approx(parts, rel=REL)
    assert total == pytest.approx(
        B.total_collision_regret_bound(t, N, K, 0.6, 0.8)
        + B.availability_regret_bound(t, N, K, T, P)
        + B.exploration_regret_bound(t, N, K, 0.1, 0.05), rel=REL)
    with pytest.raises(ValueError):
        B.total_regret_bound(1000, N, K, T, P)


def test_total_power_law_term():
    a = B.total_collision_regret_bound(2e4, 6, 9, 0.6, 0.8)
    b = B.total_collision_regret_bound(4e4, 6, 9, 0.6, 0.8)
    assert b / a == pytest.approx(2 ** (1 - 0.4), rel=REL)


def test_departure():
    assert B.dynamic_departure_bound(1000, 1, 0.8) == 0.0
    assert B.dynamic_departure_bound(1000, 2, 0.8) == pytest.approx(1000**0.8, rel=REL)
    assert B.dynamic_departure_bound(1000, 2, 0.8) == pytest.approx(251.19, abs=0.005)
    v3 = B.dynamic_departure_bound(1000, 3, 0.8)
    assert v3 == pytest.approx((2**3.6 - 1) / (2**1.8 - 1) * 1000**0.8, rel=REL)
    assert v3 == pytest.approx(1125.9, abs=0.05)
    with pytest.raises(ValueError):
        B.dynamic_departure_bound(1000, 0, 0.8)


def test_bounds_monotone_in_t():
    ts = np.array([500, 1e3, 1e4, 1e5, 1e6])
    for f in (
        lambda t: B.pairwise_collision_bound(t, 0.6, 0.8),
        lambda t: B.total_collision_regret_bound(t, 6, 9, 0.6, 0.8),
        lambda t: B.exploration_regret_bound(t, 6, 9, 0.1, 0.05),
        lambda t: B.availability_regret_bound(t, 6, 9, 100, P),
        lambda t: B.dynamic_departure_bound(t, 3, 0.8),
    ):
        v = [f(t) for t in ts]
        assert all(x >= 0 for x in v) and v == sorted(v)


def test_bound_table_rows():
    rows = {r.name: r for r in B.bound_table(B.BoundInputs(K=9, N=6, t=10_000, params=P, T=1000))}
    assert rows["m_explore"].value == 405
    assert rows["C2"].value == pytest.approx(51.5)
    assert rows["availability_regret_bound"].value == pytest.approx(3.539e7, rel=1e-3)
    assert rows["exploration_regret_bound"].value == pytest.approx(24811.1, abs=0.1)
    assert rows["total_regret_bound_beta_2_3"].value is not None


def test_bound_table_flags_but_continues():
    inp = B.BoundInputs(K=2, N=1, t=10, params=MegaParams(beta=0.5))
    rows = {r.name: r for r in B.bound_table(inp)}
    assert rows["availability_regret_bound"].value is None
    assert "outside validity" in rows["availability_regret_bound"].note
    assert rows["dynamic_departure_bound"].value == 0.0
    assert rows["birthday_collision_prob"].value == 0.0


@pytest.mark.parametrize("kw", [dict(K=2, N=3, t=1), dict(K=2, N=1, t=0), dict(K=2, N=1, t=1, delta=1.0),
                                dict(K=2, N=1, t=1, eps_rank=0)])
def test_bound_inputs_validated(kw):
    with pytest.raises(ValueError):
        B.BoundInputs(**kw)
