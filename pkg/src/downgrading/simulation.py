"""Event-driven simulation of the finite-N link under the downgrading policy.

The state is the vector of job counts per class. A single exponential clock
with the total event rate drives the chain; the firing event is chosen
categorically among arrivals (rate lambda_j N) and departures (rate
mu_j L_j). Histograms are time-weighted over [warmup, horizon].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, EmptyWindow, TraceDisabled
from .model import ModelParams

PRNG_NAME = "numpy.random.PCG64"
BLOCK = 1 << 16

ARRIVED, ACCEPTED_FULL, DOWNGRADED, REJECTED = range(4)
COUNT_FIELDS = ("arrived", "accepted_full", "downgraded", "rejected")


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    seed: int
    horizon: float
    warmup: float = 0.0
    initial_state: Optional[tuple] = None
    trace_dt: Optional[float] = None  # sampling period of the L/N trace; None disables it
    track_states: bool = False  # time-weighted histogram of the full state vector
    batches: int = 0  # per-batch counters over the post-warmup window, for batch-means errors

    def __post_init__(self):
        p = self.params
        if p.N is None:
            raise ConfigError("simulation requires the scale N in the model parameters")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if not 0 <= self.warmup < self.horizon:
            raise ConfigError("need 0 <= warmup < horizon")
        if self.batches < 0:
            raise ConfigError("batches must be nonnegative")
        if self.trace_dt is not None and self.trace_dt <= 0:
            raise ConfigError("trace_dt must be positive")
        init = self.initial_state
        if init is None:
            init = (0,) * p.J
        init = tuple(int(x) for x in init)
        if len(init) != p.J or min(init) < 0:
            raise ConfigError("initial_state must be J nonnegative integers")
        if sum(a * x for a, x in zip(p.A.tolist(), init)) > self.capacity:
            raise ConfigError("initial occupancy exceeds the capacity C^N")
        if self.capacity - self.threshold < p.AJ - 1:
            raise ConfigError(
                "C^N - C0^N must be at least A_J - 1 so that admissions below the "
                "threshold never overflow the link"
            )
        object.__setattr__(self, "initial_state", init)

    @property
    def capacity(self) -> int:
        return int(round(self.params.c * self.params.N))

    @property
    def threshold(self) -> int:
        return int(round(self.params.c0 * self.params.N))

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "seed": int(self.seed),
            "horizon": self.horizon,
            "warmup": self.warmup,
            "initial_state": list(self.initial_state),
            "trace_dt": self.trace_dt,
            "track_states": self.track_states,
            "batches": self.batches,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        if not isinstance(d, dict) or "params" not in d:
            raise ConfigError("simulation config needs a 'params' object")
        allowed = {
            "params", "seed", "horizon", "warmup", "initial_state", "trace_dt", "track_states", "batches",
        }
        extra = set(d) - allowed
        if extra:
            raise ConfigError(f"unknown keys: {sorted(extra)}")
        for k in ("seed", "horizon"):
            if k not in d:
                raise ConfigError(f"missing key '{k}'")
        if not isinstance(d["seed"], int) or isinstance(d["seed"], bool):
            raise ConfigError("'seed' must be an integer")
        return cls(
            params=ModelParams.from_dict(d["params"]),
            seed=d["seed"],
            horizon=float(d["horizon"]),
            warmup=float(d.get("warmup", 0.0)),
            initial_state=d.get("initial_state"),
            trace_dt=d.get("trace_dt"),
            track_states=bool(d.get("track_states", False)),
            batches=int(d.get("batches", 0)),
        )


@dataclass
class SimOutcome:
    config: SimConfig
    counts: np.ndarray  # (J, 4): arrived, accepted_full, downgraded, rejected
    occupancy_time: dict  # occupancy -> time spent, post-warmup
    final_state: tuple
    events: int
    trace_times: Optional[np.ndarray] = None
    trace_states: Optional[np.ndarray] = None  # L / N
    state_time: Optional[dict] = None
    min_occupancy: int = 0
    max_occupancy: int = 0
    prng: dict = field(default_factory=dict)
    batch_counts: Optional[np.ndarray] = None  # (batches, J, 4)

    @property
    def window(self) -> float:
        return self.config.horizon - self.config.warmup

    @property
    def m_histogram(self) -> dict:
        c0 = self.config.threshold
        return {occ - c0: t for occ, t in sorted(self.occupancy_time.items())}

    def non_downgraded_fraction(self, classes=None) -> tuple[float, int]:
        """Fraction of arrivals admitted at their requested rate, and the number of arrivals.

        Defaults to the classes j >= 2 whose arrivals can actually be downgraded.
        """
        idx = range(1, self.counts.shape[0]) if classes is None else classes
        arrived = int(sum(self.counts[j, ARRIVED] for j in idx))
        full = int(sum(self.counts[j, ACCEPTED_FULL] for j in idx))
        return (full / arrived if arrived else float("nan")), arrived

    def batch_means_error(self, classes=None) -> float:
        """Standard error of the non-downgraded fraction from batch means.

        Arrival outcomes are correlated through the occupancy, so the binomial
        error understates the spread; the batch ratio estimator does not.
        """
        if self.batch_counts is None or self.batch_counts.shape[0] < 2:
            raise EmptyWindow("simulation ran without batches")
        idx = list(range(1, self.counts.shape[0]) if classes is None else classes)
        arrived = self.batch_counts[:, idx, ARRIVED].sum(axis=1).astype(float)
        full = self.batch_counts[:, idx, ACCEPTED_FULL].sum(axis=1).astype(float)
        B = arrived.size
        ratio = full.sum() / arrived.sum()
        resid = (full - ratio * arrived) / arrived.mean()
        return float(np.sqrt((resid**2).sum() / (B - 1) / B))

    def to_dict(self) -> dict:
        J = self.counts.shape[0]
        return {
            "config": self.config.to_dict(),
            "C": self.config.capacity,
            "C0": self.config.threshold,
            "prng": self.prng,
            "events": self.events,
            "counts": [
                {"class": j + 1, **{k: int(self.counts[j, i]) for i, k in enumerate(COUNT_FIELDS)}}
                for j in range(J)
            ],
            "m_histogram": {str(m): t for m, t in self.m_histogram.items()},
            "final_state": list(self.final_state),
            "min_occupancy": self.min_occupancy,
            "max_occupancy": self.max_occupancy,
        }


def _generator(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def simulate(config: SimConfig, seed_sequence: Optional[np.random.SeedSequence] = None) -> SimOutcome:
    p = config.params
    N = p.N
    J = p.J
    A = [int(a) for a in p.A]
    mu = [float(m) for m in p.mu]
    arr = [float(l) * N for l in p.lam]
    arr_total = sum(arr)
    C = config.capacity
    C0 = config.threshold
    horizon = float(config.horizon)
    warmup = float(config.warmup)

    seed_src = seed_sequence if seed_sequence is not None else int(config.seed)
    rng = _generator(seed_src)

    L = list(config.initial_state)
    occ = sum(a * x for a, x in zip(A, L))
    counts = [[0, 0, 0, 0] for _ in range(J)]
    n_batch = config.batches
    batch_counts = [[[0, 0, 0, 0] for _ in range(J)] for _ in range(n_batch)]
    batch_len = (horizon - warmup) / n_batch if n_batch else 0.0
    occ_time = [0.0] * (C + 1)
    state_time: Optional[dict] = {} if config.track_states else None

    trace_dt = config.trace_dt
    trace_t: list = []
    trace_s: list = []
    next_trace = 0.0

    t = 0.0
    events = 0
    lo_occ = hi_occ = occ
    exps = rng.standard_exponential(BLOCK)
    unis = rng.random(BLOCK)
    k = 0
    while True:
        dep_total = 0.0
        for j in range(J):
            dep_total += mu[j] * L[j]
        total = arr_total + dep_total
        if k == BLOCK:
            exps = rng.standard_exponential(BLOCK)
            unis = rng.random(BLOCK)
            k = 0
        dt = exps[k] / total
        u = unis[k] * total
        k += 1
        t_next = t + dt

        if trace_dt is not None:
            while next_trace <= min(t_next, horizon):
                trace_t.append(next_trace)
                trace_s.append(list(L))
                next_trace += trace_dt
        if t_next > warmup:
            a = t if t > warmup else warmup
            b = t_next if t_next < horizon else horizon
            occ_time[occ] += b - a
            if state_time is not None:
                key = tuple(L)
                state_time[key] = state_time.get(key, 0.0) + (b - a)
        if t_next >= horizon:
            break
        t = t_next
        events += 1
        counting = t > warmup

        if u < arr_total:
            j = 0
            acc = arr[0]
            while u >= acc and j < J - 1:
                j += 1
                acc += arr[j]
            if occ < C0:
                L[j] += 1
                occ += A[j]
                outcome = ACCEPTED_FULL
            elif occ < C:
                L[0] += 1
                occ += 1
                outcome = ACCEPTED_FULL if j == 0 else DOWNGRADED
            else:
                outcome = REJECTED
            if counting:
                counts[j][ARRIVED] += 1
                counts[j][outcome] += 1
                if n_batch:
                    row = batch_counts[min(int((t - warmup) / batch_len), n_batch - 1)][j]
                    row[ARRIVED] += 1
                    row[outcome] += 1
            if occ > hi_occ:
                hi_occ = occ
        else:
            u -= arr_total
            j = 0
            acc = mu[0] * L[0]
            while (u >= acc or L[j] == 0) and j < J - 1:
                j += 1
                acc += mu[j] * L[j]
            while L[j] == 0:  # u landed past the last class through rounding
                j -= 1
            L[j] -= 1
            occ -= A[j]
            if occ < lo_occ:
                lo_occ = occ

    occupancy_time = {o: tm for o, tm in enumerate(occ_time) if tm > 0}
    return SimOutcome(
        config=config,
        counts=np.array(counts, dtype=np.int64),
        occupancy_time=occupancy_time,
        final_state=tuple(L),
        events=events,
        trace_times=np.array(trace_t) if trace_dt is not None else None,
        trace_states=np.array(trace_s, dtype=float) / N if trace_dt is not None else None,
        state_time=state_time,
        min_occupancy=lo_occ,
        max_occupancy=hi_occ,
        prng={
            "algorithm": PRNG_NAME,
            "numpy": np.__version__,
            "seed": int(config.seed),
            "spawn_key": list(seed_sequence.spawn_key) if seed_sequence is not None else [],
            "block": BLOCK,
        },
        batch_counts=np.array(batch_counts, dtype=np.int64) if n_batch else None,
    )


def replicate(config: SimConfig, k: int) -> list[SimOutcome]:
    """``k`` independent replicas with child seeds spawned from ``config.seed``."""
    children = np.random.SeedSequence(int(config.seed)).spawn(k)
    return [simulate(config, seed_sequence=s) for s in children]


def merge(outcomes: list[SimOutcome]) -> dict:
    """Order-independent pooling of counters and occupancy histograms."""
    if not outcomes:
        raise EmptyWindow("nothing to merge")
    counts = sum((o.counts for o in outcomes), np.zeros_like(outcomes[0].counts))
    occ: dict = {}
    for o in outcomes:
        for key, tm in o.occupancy_time.items():
            occ[key] = occ.get(key, 0.0) + tm
    return {"counts": counts, "occupancy_time": dict(sorted(occ.items()))}


def empirical_offset_distribution(outcome: SimOutcome) -> dict:
    """Time-weighted law of m = <A, L> - C0^N over the post-warmup window."""
    hist = outcome.m_histogram
    total = math.fsum(hist.values())
    if total <= 0:
        raise EmptyWindow("no time recorded after warmup")
    return {m: t / total for m, t in hist.items()}


def fluid_trace(outcome: SimOutcome) -> tuple[np.ndarray, np.ndarray]:
    if outcome.trace_times is None:
        raise TraceDisabled("simulation ran without trace sampling (trace_dt unset)")
    return outcome.trace_times, outcome.trace_states


def total_variation(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)
