"""Experiment descriptions, presets and the plain-text config format.

Config files are INI-style with a single ``[scenario]`` section::

    [scenario]
    name = fig3
    arms = 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1
    kind = bernoulli
    horizon = 100000
    repetitions = 50
    seed = 2014
    policy = mega              ; one name for everyone, or one per user
    users = 6                  ; N users present from round 1 ...
    schedule = 1:0:join, 5000:1:join, 9000:0:leave   ; ... or explicit events
    c = 0.1
    d = 0.05
    p0 = 0.6
    alpha = 0.5
    beta = 0.8
    n_known = 6                ; users announced to rho-RAND

``users`` and ``schedule`` are mutually exclusive.  Omitted MEGA parameters
take their defaults.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .env import JOIN, LEAVE, ArmSet, ScheduleEvent, UserSchedule
from .policies import POLICY_CODES, MegaParams

DEFAULT_HORIZON = 100_000
DEFAULT_SEED = 2014
GAP_TOL = 1e-12


def even_arms(K, lo=0.1, hi=0.9):
    """K evenly spaced means from hi down to lo (a single arm sits at hi)."""
    if K == 1:
        return (hi,)
    return tuple(float(round(m, 12)) for m in np.linspace(hi, lo, K))


@dataclass(frozen=True)
class Scenario:
    name: str
    mu: tuple
    schedule: UserSchedule
    policies: tuple
    params: MegaParams = field(default_factory=MegaParams)
    n_known: int | None = None
    horizon: int = DEFAULT_HORIZON
    repetitions: int = 1
    master_seed: int = DEFAULT_SEED
    kind: str = "bernoulli"

    def __post_init__(self):
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))
        if isinstance(self.policies, str):
            object.__setattr__(self, "policies", (self.policies,) * len(self.schedule.users))
        object.__setattr__(self, "policies", tuple(self.policies))
        arms = self.arms  # validates mu and kind
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        U = len(self.schedule.users)
        if len(self.policies) != U:
            raise ValueError(f"{len(self.policies)} policies given for {U} users")
        for p in self.policies:
            if p not in POLICY_CODES:
                raise ValueError(f"unknown policy {p!r}; choose from {sorted(POLICY_CODES)}")
        n_max = self.schedule.max_active()
        if n_max > arms.K:
            raise ValueError(f"up to {n_max} users but only K={arms.K} arms")
        if "rhorand" in self.policies:
            if self.n_known is None:
                raise ValueError("rho-RAND needs n_known")
            if not 1 <= self.n_known <= arms.K:
                raise ValueError(f"n_known={self.n_known} must lie in [1, K={arms.K}]")
        if "mega" in self.policies:
            check_gaps(self.mu, n_max, self.params.d)

    @property
    def arms(self):
        return ArmSet(self.mu, self.kind)

    @property
    def K(self):
        return len(self.mu)

    def with_(self, **kw):
        return replace(self, **kw)


def check_gaps(mu, n_users, d):
    """Consecutive gaps among the top min(N+1, K) means must be at least d."""
    top = np.sort(np.asarray(mu, dtype=np.float64))[::-1][: min(n_users + 1, len(mu))]
    gaps = -np.diff(top)
    if len(gaps) and gaps.min() < d - GAP_TOL:
        i = int(np.argmin(gaps))
        raise ValueError(
            f"mean gap {gaps[i]:.4g} between ranks {i + 1} and {i + 2} is below d={d}"
        )


def staircase_schedule(horizon, peak=4):
    """One user at round 1, one more joins at each of the first peak-1 change
    times, then the latest arrival leaves at each of the next peak-1.  Change
    times are the multiples of horizon // (2 peak - 1)."""
    step = horizon // (2 * peak - 1)
    if step < 1:
        raise ValueError(f"horizon {horizon} too short for {2 * peak - 2} change times")
    events = [ScheduleEvent(1, 0, JOIN)]
    for i in range(1, peak):
        events.append(ScheduleEvent(i * step, i, JOIN))
    for j, user in enumerate(range(peak - 1, 0, -1)):
        events.append(ScheduleEvent((peak + j) * step, user, LEAVE))
    return UserSchedule(tuple(events))


def _fixed(name, K, N, policy, reps, n_known=None):
    return Scenario(
        name=name,
        mu=even_arms(K),
        schedule=UserSchedule.fixed(N),
        policies=policy,
        n_known=n_known,
        repetitions=reps,
    )


def _fig5(name, policy, horizon=DEFAULT_HORIZON):
    return Scenario(
        name=name,
        mu=even_arms(12),
        schedule=staircase_schedule(horizon),
        policies=policy,
        n_known=2 if policy == "rhorand" else None,
        horizon=horizon,
        repetitions=20,
    )


_PRESETS = {
    "fig2": lambda: _fixed("fig2", 2, 2, "mega", 50),
    "fig2-klucb": lambda: _fixed("fig2-klucb", 2, 2, "klucb", 50),
    "fig2-egreedy": lambda: _fixed("fig2-egreedy", 2, 2, "egreedy", 50),
    "fig3": lambda: _fixed("fig3", 9, 6, "mega", 50),
    "fig3-rhorand": lambda: _fixed("fig3-rhorand", 9, 6, "rhorand", 50, n_known=6),
    "fig4": lambda: _fixed("fig4", 12, 12, "mega", 50),
    "fig4-rhorand": lambda: _fixed("fig4-rhorand", 12, 12, "rhorand", 50, n_known=12),
    "fig5": lambda: _fig5("fig5", "mega"),
    "fig5-rhorand": lambda: _fig5("fig5-rhorand", "rhorand"),
}

# the curves drawn together in each figure
FIGURE_POLICIES = {
    "fig2": ("fig2", "fig2-klucb", "fig2-egreedy"),
    "fig3": ("fig3", "fig3-rhorand"),
    "fig4": ("fig4", "fig4-rhorand"),
    "fig5": ("fig5", "fig5-rhorand"),
}


def preset_names():
    return tuple(_PRESETS)


def preset(name, horizon=None):
    """Named scenario.  ``horizon`` rescales fig5's schedule as well."""
    if name not in _PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(_PRESETS)}")
    s = _PRESETS[name]()
    if horizon is not None and horizon != s.horizon:
        if name.startswith("fig5"):
            s = s.with_(schedule=staircase_schedule(horizon), horizon=horizon)
        else:
            s = s.with_(horizon=horizon)
    return s


# --- config files ---------------------------------------------------------

_PARAM_KEYS = ("c", "d", "p0", "alpha", "beta")
_KNOWN_KEYS = {
    "name", "arms", "kind", "horizon", "repetitions", "seed", "policy",
    "users", "schedule", "n_known", *_PARAM_KEYS,
}


def _events_text(schedule):
    return ", ".join(f"{e.time}:{e.user}:{e.kind}" for e in schedule.events)


def _parse_events(text):
    events = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"bad schedule event {item!r}, expected time:user:join|leave")
        t, u, kind = parts
        events.append(ScheduleEvent(int(t), int(u), kind.strip()))
    return UserSchedule(tuple(events))


def to_config(s: Scenario) -> str:
    cp = configparser.ConfigParser()
    sec = {
        "name": s.name,
        "arms": ", ".join(repr(m) for m in s.mu),
        "kind": s.kind,
        "horizon": str(s.horizon),
        "repetitions": str(s.repetitions),
        "seed": str(s.master_seed),
    }
    if len(set(s.policies)) == 1:
        sec["policy"] = s.policies[0]
    else:
        sec["policy"] = ", ".join(s.policies)
    if s.schedule == UserSchedule.fixed(len(s.schedule.users)):
        sec["users"] = str(len(s.schedule.users))
    else:
        sec["schedule"] = _events_text(s.schedule)
    for k in _PARAM_KEYS:
        sec[k] = repr(getattr(s.params, k))
    if s.n_known is not None:
        sec["n_known"] = str(s.n_known)
    cp["scenario"] = sec
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def from_config(text: str) -> Scenario:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ValueError(f"unreadable config: {exc}") from None
    if "scenario" not in cp:
        raise ValueError("config needs a [scenario] section")
    sec = cp["scenario"]
    unknown = set(sec) - _KNOWN_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "arms" not in sec:
        raise ValueError("config needs 'arms'")
    mu = tuple(float(x) for x in sec["arms"].split(",") if x.strip())
    if ("users" in sec) == ("schedule" in sec):
        raise ValueError("give exactly one of 'users' or 'schedule'")
    if "users" in sec:
        schedule = UserSchedule.fixed(int(sec["users"]))
    else:
        schedule = _parse_events(sec["schedule"])
    policies = tuple(p.strip() for p in sec.get("policy", "mega").split(",") if p.strip())
    if len(policies) == 1:
        policies = policies * len(schedule.users)
    defaults = MegaParams()
    params = MegaParams(**{k: float(sec.get(k, getattr(defaults, k))) for k in _PARAM_KEYS})
    return Scenario(
        name=sec.get("name", "custom"),
        mu=mu,
        schedule=schedule,
        policies=policies,
        params=params,
        n_known=int(sec["n_known"]) if "n_known" in sec else None,
        horizon=int(sec.get("horizon", DEFAULT_HORIZON)),
        repetitions=int(sec.get("repetitions", 1)),
        master_seed=int(sec.get("seed", DEFAULT_SEED)),
        kind=sec.get("kind", "bernoulli"),
    )


def load_config(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return from_config(fh.read())
