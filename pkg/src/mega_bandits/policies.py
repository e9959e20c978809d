"""Per-user policies: MEGA plus epsilon-greedy, UCB1, KL-UCB and rho-RAND.

Policy logic lives in numba-compiled functions acting on one user's state
arrays, so the same code serves the :class:`Policy` wrapper (one user, one
round at a time) and the batched kernel in :mod:`mega_bandits.engine`.

Every round a user receives a row of ``ROUND_DRAWS`` uniforms from its own
stream.  Slot usage:

    0  MEGA persist coin; rho-RAND initial rank
    1  MEGA backoff deadline; rho-RAND rank redraw
    2  exploration coin
    3  arm choice (uniform pick or tie-break)

No function here reads another user's state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .metrics import optimal_set

REFRAIN = -1

MEGA, EGREEDY, UCB1, KLUCB, RHORAND = range(5)
POLICY_CODES = {
    "mega": MEGA,
    "egreedy": EGREEDY,
    "ucb1": UCB1,
    "klucb": KLUCB,
    "rhorand": RHORAND,
}
POLICY_NAMES = {v: k for k, v in POLICY_CODES.items()}

# integer state slots
LAST_ARM, LAST_COLLISION, STREAK, RANK, N_KNOWN = range(5)
N_INT = 5
# float state slots
PERSIST = 0
N_FLOAT = 1
# parameter slots
P_C, P_D, P_P0, P_ALPHA, P_BETA = range(5)
N_PARAMS = 5

KL_TOL = 1e-9


@dataclass(frozen=True)
class MegaParams:
    c: float = 0.1
    d: float = 0.05
    p0: float = 0.6
    alpha: float = 0.5
    beta: float = 0.8

    def __post_init__(self):
        for name in ("p0", "alpha", "beta"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly inside (0, 1), got {v}")
        if not self.c > 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if not self.d > 0:
            raise ValueError(f"d must be positive, got {self.d}")

    def as_array(self):
        return np.array([self.c, self.d, self.p0, self.alpha, self.beta], dtype=np.float64)


def epsilon_t(params: MegaParams, K: int, t: int) -> float:
    """MEGA exploration probability min{1, cK^2 / (d^2 (K-1) t)}."""
    if K < 2:
        raise ValueError("the exploration schedule needs K >= 2")
    if t < 1:
        raise ValueError("rounds start at 1")
    return _mega_epsilon(params.c, params.d, K, t)


def persistence_after(m: int, p0: float, alpha: float) -> float:
    """Persistence after ``m`` consecutive successes: 1 - alpha^m (1 - p0)."""
    if m < 0:
        raise ValueError("m must be non-negative")
    return 1.0 - alpha**m * (1.0 - p0)


@njit(cache=True)
def _mega_epsilon(c, d, K, t):
    return min(1.0, c * K * K / (d * d * (K - 1) * t))


@njit(cache=True)
def _egreedy_epsilon(c, d, K, t):
    return min(1.0, c * K / (d * d * t))


@njit(cache=True)
def _pick(u, n):
    i = int(u * n)
    return n - 1 if i >= n else i


@njit(cache=True)
def bernoulli_kl(p, q):
    eps = 1e-15
    q = min(max(q, eps), 1.0 - eps)
    out = 0.0
    if p > 0.0:
        out += p * math.log(p / q)
    if p < 1.0:
        out += (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    return out


@njit(cache=True)
def kl_ucb_index(mean, budget):
    """sup{q in [mean, 1] : kl(mean, q) <= budget}, by bisection."""
    if mean >= 1.0:
        return 1.0
    lo, hi = mean, 1.0
    while hi - lo > KL_TOL:
        mid = 0.5 * (lo + hi)
        if bernoulli_kl(mean, mid) > budget:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True)
def ucb1_index(mean, n, t):
    return mean + math.sqrt(2.0 * math.log(t) / n)


@njit(cache=True)
def kl_exploration(t):
    """ln t + 3 ln ln t, with the second term dropped while ln t <= 1."""
    lt = math.log(t)
    return lt + 3.0 * math.log(max(lt, 1.0))


@njit(cache=True)
def _argmax_available(mu_hat, t_next, t, u):
    best = -1.0
    n_best = 0
    for k in range(mu_hat.shape[0]):
        if t_next[k] <= t:
            if mu_hat[k] > best:
                best = mu_hat[k]
                n_best = 1
            elif mu_hat[k] == best:
                n_best += 1
    j = _pick(u, n_best)
    for k in range(mu_hat.shape[0]):
        if t_next[k] <= t and mu_hat[k] == best:
            if j == 0:
                return k
            j -= 1
    return REFRAIN


@njit(cache=True)
def mega_select(ist, fst, prm, t_next, mu_hat, t, u):
    K = t_next.shape[0]
    last = ist[LAST_ARM]
    if ist[LAST_COLLISION] == 1:
        if u[0] < fst[PERSIST]:
            return last
        # give up: arm taken until a deadline uniform on [t, t + floor(t^beta)]
        window = int(math.floor(t ** prm[P_BETA]))
        t_next[last] = t + _pick(u[1], window + 1)
        fst[PERSIST] = prm[P_P0]
        ist[STREAK] = 0
    n_avail = 0
    for k in range(K):
        if t_next[k] <= t:
            n_avail += 1
    if n_avail == 0:
        return REFRAIN
    if K == 1 or u[2] < _mega_epsilon(prm[P_C], prm[P_D], K, t):
        j = _pick(u[3], n_avail)
        arm = REFRAIN
        for k in range(K):
            if t_next[k] <= t:
                if j == 0:
                    arm = k
                    break
                j -= 1
    else:
        arm = _argmax_available(mu_hat, t_next, t, u[3])
    if arm != last:
        fst[PERSIST] = prm[P_P0]
        ist[STREAK] = 0
    ist[LAST_ARM] = arm
    return arm


@njit(cache=True)
def _rank_pick(index, rank, u):
    """Arm holding the rank-th largest index (1-based), ties uniform."""
    order = np.sort(index)
    v = order[index.shape[0] - rank]
    n_tie = 0
    for k in range(index.shape[0]):
        if index[k] == v:
            n_tie += 1
    j = _pick(u, n_tie)
    for k in range(index.shape[0]):
        if index[k] == v:
            if j == 0:
                return k
            j -= 1
    return REFRAIN


@njit(cache=True)
def index_select(code, ist, prm, counts, mu_hat, t, u):
    K = counts.shape[0]
    if code == RHORAND and ist[RANK] == 0:
        ist[RANK] = 1 + _pick(u[0], ist[N_KNOWN])
    index = np.empty(K)
    n_unpulled = 0
    for k in range(K):
        if counts[k] == 0:
            n_unpulled += 1
    if code == EGREEDY:
        if n_unpulled == 0 and u[2] < _egreedy_epsilon(prm[P_C], prm[P_D], K, t):
            arm = _pick(u[3], K)
            ist[LAST_ARM] = arm
            return arm
        for k in range(K):
            index[k] = np.inf if counts[k] == 0 else mu_hat[k]
    elif code == KLUCB:
        f = kl_exploration(t)
        for k in range(K):
            index[k] = np.inf if counts[k] == 0 else kl_ucb_index(mu_hat[k], f / counts[k])
    else:
        for k in range(K):
            index[k] = np.inf if counts[k] == 0 else ucb1_index(mu_hat[k], counts[k], t)
    rank = ist[RANK] if code == RHORAND else 1
    arm = _rank_pick(index, rank, u[3])
    ist[LAST_ARM] = arm
    return arm


@njit(cache=True)
def select_action(code, ist, fst, prm, t_next, counts, mu_hat, t, u):
    if code == MEGA:
        return mega_select(ist, fst, prm, t_next, mu_hat, t, u)
    return index_select(code, ist, prm, counts, mu_hat, t, u)


@njit(cache=True)
def update_policy(code, ist, fst, prm, counts, sums, mu_hat, arm, reward, collision, u):
    if arm < 0:
        ist[LAST_COLLISION] = 0
        return
    if collision:
        ist[LAST_COLLISION] = 1
        if code == RHORAND:
            ist[RANK] = 1 + _pick(u[1], ist[N_KNOWN])
        return
    ist[LAST_COLLISION] = 0
    counts[arm] += 1
    sums[arm] += reward
    mu_hat[arm] = sums[arm] / counts[arm]
    if code == MEGA:
        ist[STREAK] += 1
        a = prm[P_ALPHA]
        fst[PERSIST] = fst[PERSIST] * a + (1.0 - a)


def initial_state(code, K, params: MegaParams, n_known=None):
    """Fresh state arrays: (istate, fstate, params, t_next, counts, sums, mu_hat)."""
    if code == RHORAND:
        if n_known is None or n_known < 1:
            raise ValueError("rho-RAND needs the number of users")
        if n_known > K:
            raise ValueError(f"rho-RAND told N={n_known} users but only K={K} arms")
    ist = np.zeros(N_INT, dtype=np.int64)
    ist[LAST_ARM] = REFRAIN
    ist[N_KNOWN] = n_known or 1
    fst = np.zeros(N_FLOAT, dtype=np.float64)
    fst[PERSIST] = params.p0
    return (
        ist,
        fst,
        params.as_array(),
        np.ones(K, dtype=np.int64),
        np.zeros(K, dtype=np.int64),
        np.zeros(K, dtype=np.float64),
        np.zeros(K, dtype=np.float64),
    )


class Policy:
    """One user's policy.  ``select`` returns an arm index or None (refrain)."""

    def __init__(self, name, K, params: MegaParams | None = None, n_known=None):
        if name not in POLICY_CODES:
            raise ValueError(f"unknown policy {name!r}; choose from {sorted(POLICY_CODES)}")
        self.name = name
        self.code = POLICY_CODES[name]
        self.K = K
        self.params = params or MegaParams()
        (self.istate, self.fstate, self._prm, self.t_next,
         self.counts, self.sums, self.mu_hat) = initial_state(self.code, K, self.params, n_known)

    def select(self, t, draws):
        arm = select_action(self.code, self.istate, self.fstate, self._prm, self.t_next,
                            self.counts, self.mu_hat, t, np.asarray(draws, dtype=np.float64))
        return None if arm < 0 else int(arm)

    def update(self, arm, reward, collision, draws):
        if not 0.0 <= reward <= 1.0:
            raise ValueError(f"reward {reward} outside [0, 1]")
        update_policy(self.code, self.istate, self.fstate, self._prm, self.counts, self.sums,
                      self.mu_hat, REFRAIN if arm is None else arm, float(reward),
                      bool(collision), np.asarray(draws, dtype=np.float64))

    @property
    def p(self):
        return float(self.fstate[PERSIST])

    @property
    def streak(self):
        return int(self.istate[STREAK])

    @property
    def last_arm(self):
        a = int(self.istate[LAST_ARM])
        return None if a < 0 else a

    @property
    def last_collision(self):
        return int(self.istate[LAST_COLLISION])

    @property
    def rank(self):
        return int(self.istate[RANK])


def is_epsilon_correct_ranking(mu_hat, mu, eps, M):
    """Check the empirical order of the M best arms against the true one.

    For every ordered pair (i, j) of distinct arms among the M arms of largest
    true mean: mu_hat[i] <= mu_hat[j] iff mu[i] + eps <= mu[j].
    """
    mu_hat = np.asarray(mu_hat, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    if mu_hat.shape != mu.shape or mu.shape[0] < M:
        raise ValueError("mu_hat and mu must have equal length >= M")
    top = np.array(sorted(optimal_set(mu, M)), dtype=np.int64)
    h, m = mu_hat[top], mu[top]
    lhs = h[:, None] <= h[None, :]
    rhs = m[:, None] + eps <= m[None, :]
    off = ~np.eye(len(top), dtype=bool)
    return bool(np.all(lhs[off] == rhs[off]))
