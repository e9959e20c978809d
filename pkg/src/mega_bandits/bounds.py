"""Closed-form bounds for MEGA: learning time, collision, availability,
exploration and departure regret.

Logarithms are natural.  Constants are evaluated exactly as stated, including
the availability constant whose first term divides by d rather than d^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .policies import MegaParams


class BoundDomainError(ValueError):
    """Inputs outside the range where a bound is stated."""


def _ceil(x, rel=1e-9):
    # round-off guard: 405.00000000000006 -> 405
    r = round(x)
    if abs(x - r) <= rel * max(1.0, abs(x)):
        return int(r)
    return math.ceil(x)


def learning_time_T(K, N, eps_rank, delta):
    """Rounds after which every user holds an eps-correct ranking of the N best
    arms w.p. >= 1 - delta:  2 * 4 K^N N / (eps^2 prod_{i<N} (K - i)) * log(2K/delta)."""
    if not K >= N >= 1:
        raise BoundDomainError(f"need K >= N >= 1, got K={K}, N={N}")
    if not 0 < delta < 1:
        raise BoundDomainError(f"delta must lie in (0, 1), got {delta}")
    if not eps_rank > 0:
        raise BoundDomainError("eps_rank must be positive")
    return _ceil(learning_time_value(K, N, eps_rank, delta))


def learning_time_value(K, N, eps_rank, delta):
    """The unrounded learning-time expression, without domain checks."""
    prod = math.prod(K - i for i in range(1, N))
    return 2.0 * 4.0 * K**N * N / (eps_rank**2 * prod) * math.log(2.0 * K / delta)


def c_from_T(d, K, T):
    """Exploration constant keeping epsilon_t = 1 for all t < T."""
    if K < 2:
        raise BoundDomainError("need K >= 2")
    return d * d * (K - 1) * T / (K * K)


def birthday_collision_prob(N, K):
    """P(some collision) when N users each pick one of K arms uniformly."""
    if not 1 <= N <= K:
        raise BoundDomainError(f"need 1 <= N <= K, got N={N}, K={K}")
    return 1.0 - math.prod(1.0 - i / K for i in range(1, N))


def collision_constants(p0):
    """(L_up, L_low, C1) bounding the mean collision-streak length."""
    l_up = 1.0 / (1.0 - p0)
    l_low = 1.0 / (1.0 - p0 * p0)
    return l_up, l_low, l_up / math.sqrt(l_low)


def pairwise_collision_bound(t, p0, beta):
    """Expected collisions of one pair of users on one arm up to t."""
    if t < 1:
        raise BoundDomainError("t must be >= 1")
    l_up, l_low, _ = collision_constants(p0)
    return 2.0 * l_up / math.sqrt(l_low) * t ** (1.0 - beta / 2.0)


def total_collision_regret_bound(t, N, K, p0, beta):
    if t < 1:
        raise BoundDomainError("t must be >= 1")
    _, _, c1 = collision_constants(p0)
    return c1 * N * N * K * t ** (1.0 - beta / 2.0)


def exploration_length(c, d, K):
    """cK^2 / (d^2 (K-1)): the number of rounds with epsilon_t = 1 (unrounded)."""
    if K < 2:
        raise BoundDomainError("need K >= 2")
    return c * K * K / (d * d * (K - 1))


def m_explore(c, d, K):
    return _ceil(exploration_length(c, d, K))


def exploration_regret_bound(t, N, K, c, d):
    m = exploration_length(c, d, K)
    if t <= _ceil(m):
        raise BoundDomainError(f"needs t > m_explore = {_ceil(m)}, got t={t}")
    return N * m + m * N * math.log(t)


def availability_constants(c, d, K, alpha):
    """(C2, C3) of the availability bound."""
    c2 = 2.0 * c * K * K / (d * (K - 1)) + (7.0 - 3.0 * alpha) / (1.0 - alpha)
    return c2, 1.0 + 8.0 * c2


def availability_regret_bound(t, N, K, T, params: MegaParams, strict=True):
    """N K T + N K C3 t^beta.  Stated for beta > 2/3 only; with strict=False
    the formula is evaluated regardless."""
    if strict and params.beta <= 2.0 / 3.0:
        raise BoundDomainError(f"outside validity (beta <= 2/3): beta={params.beta}")
    if K < 2:
        raise BoundDomainError("need K >= 2")
    _, c3 = availability_constants(params.c, params.d, K, params.alpha)
    return N * K * T + N * K * c3 * t**params.beta


def total_regret_bound(t, N, K, T, params: MegaParams, strict=True):
    """Sum of the collision, availability and exploration bounds, for t > max(m, T)."""
    m = m_explore(params.c, params.d, K)
    if t <= max(m, T):
        raise BoundDomainError(f"needs t > max(m_explore, T) = {max(m, T)}, got t={t}")
    return (
        total_collision_regret_bound(t, N, K, params.p0, params.beta)
        + availability_regret_bound(t, N, K, T, params, strict=strict)
        + exploration_regret_bound(t, N, K, params.c, params.d)
    )


OPTIMAL_BETA = 2.0 / 3.0


def dynamic_departure_bound(t, n_after, beta):
    """Regret between a departure at t and the new optimal configuration:
    (2^((beta+1)(N-1)) - 1) / (2^(beta+1) - 1) * t^beta, N users remaining."""
    if n_after < 1:
        raise BoundDomainError("need at least one remaining user")
    if t < 1:
        raise BoundDomainError("t must be >= 1")
    r = 2.0 ** (beta + 1.0)
    return (r ** (n_after - 1) - 1.0) / (r - 1.0) * t**beta


@dataclass(frozen=True)
class BoundInputs:
    K: int
    N: int
    t: int
    params: MegaParams = field(default_factory=MegaParams)
    T: int | None = None
    eps_rank: float = 0.1
    delta: float = 0.1

    def __post_init__(self):
        if not self.K >= self.N >= 1:
            raise ValueError(f"need K >= N >= 1, got K={self.K}, N={self.N}")
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if not self.eps_rank > 0:
            raise ValueError("eps_rank must be positive")
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")


@dataclass
class BoundRow:
    name: str
    value: float | None
    note: str = ""


def bound_table(inp: BoundInputs):
    """Every bound for ``inp``.  Rows whose preconditions fail carry value None
    and the reason in ``note``; the rest are still evaluated."""
    p = inp.params
    rows = []

    def add(name, fn, note=""):
        try:
            rows.append(BoundRow(name, float(fn()), note))
        except BoundDomainError as exc:
            rows.append(BoundRow(name, None, str(exc)))

    add("learning_time_T", lambda: learning_time_T(inp.K, inp.N, inp.eps_rank, inp.delta))
    T = inp.T
    if T is None:
        try:
            T = learning_time_T(inp.K, inp.N, inp.eps_rank, inp.delta)
        except BoundDomainError:
            T = 0
    add("T_used", lambda: T, "given" if inp.T is not None else "from learning_time_T")
    add("c_from_T", lambda: c_from_T(p.d, inp.K, T))
    add("birthday_collision_prob", lambda: birthday_collision_prob(inp.N, inp.K))
    l_up, l_low, c1 = collision_constants(p.p0)
    rows += [BoundRow("L_up", l_up), BoundRow("L_low", l_low), BoundRow("C1", c1)]
    add("pairwise_collision_bound", lambda: pairwise_collision_bound(inp.t, p.p0, p.beta))
    add("total_collision_regret_bound",
        lambda: total_collision_regret_bound(inp.t, inp.N, inp.K, p.p0, p.beta))
    add("m_explore", lambda: m_explore(p.c, p.d, inp.K))
    add("exploration_regret_bound",
        lambda: exploration_regret_bound(inp.t, inp.N, inp.K, p.c, p.d))
    if inp.K >= 2:
        c2, c3 = availability_constants(p.c, p.d, inp.K, p.alpha)
        rows += [BoundRow("C2", c2), BoundRow("C3", c3)]
    add("availability_regret_bound",
        lambda: availability_regret_bound(inp.t, inp.N, inp.K, T, p))
    add("total_regret_bound", lambda: total_regret_bound(inp.t, inp.N, inp.K, T, p))
    opt = MegaParams(p.c, p.d, p.p0, p.alpha, OPTIMAL_BETA)
    add("total_regret_bound_beta_2_3",
        lambda: total_regret_bound(inp.t, inp.N, inp.K, T, opt, strict=False),
        "beta = 2/3; availability term at the edge of its stated range")
    add("dynamic_departure_bound", lambda: dynamic_departure_bound(inp.t, inp.N, p.beta),
        f"N(t) = {inp.N} users remaining")
    return rows
