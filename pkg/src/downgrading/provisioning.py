"""Threshold sizing for a link of C capacity units.

With C0 = alpha C, a job is lost when the offset Y exceeds the headroom
C - C0. In the limit Y follows the invariant law at the fixed point, whose
positive tail is geometric, so the loss probability is available in closed
form for every alpha.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, DowngradingError, Infeasible, RegimeError
from .invariant import at_fixed_point
from .loss import erlang_fixed_point
from .model import ModelParams, fixed_point

REFINE_TOL = 1e-6

FINITE_N_NOTE = (
    "loss probabilities use the N -> infinity law of the offset; "
    "at finite N they are an approximation"
)


@dataclass(frozen=True)
class ProvisionQuery:
    params: ModelParams  # template; c0 is overwritten by alpha
    capacity_units: int
    epsilon: float
    alpha_grid: float = 1e-3

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ConfigError("epsilon must lie in (0, 1)")
        if int(self.capacity_units) != self.capacity_units or self.capacity_units < self.params.AJ:
            raise ConfigError("capacity_units must be an integer >= A_J")
        if self.params.c != 1.0:
            raise ConfigError("provisioning works with capacities normalised to c = 1")
        if not 0 < self.alpha_grid < 1:
            raise ConfigError("alpha_grid must lie in (0, 1)")

    def at(self, alpha: float) -> ModelParams:
        return self.params.replace(c0=alpha, N=int(self.capacity_units))

    @property
    def alpha_range(self) -> tuple[float, float]:
        p = self.params
        lo = p.Lambda / p.mu[0]
        hi = min(p.c, p.A_rho)
        return lo, hi

    @classmethod
    def from_dict(cls, d: dict) -> "ProvisionQuery":
        try:
            eps = d["epsilon"]
            if isinstance(eps, list):
                eps = eps[0]
            return cls(
                params=ModelParams.from_dict(d["params"]),
                capacity_units=int(d["capacity_units"]),
                epsilon=float(eps),
                alpha_grid=float(d.get("alpha_grid", 1e-3)),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad provisioning query: {exc}") from exc


def headroom(query: ProvisionQuery, alpha: float) -> int:
    C = int(query.capacity_units)
    return C - int(round(alpha * C))


def loss_probability(query: ProvisionQuery, alpha: float) -> float:
    """P(Y + C0 > C) at the fixed point for threshold C0 = round(alpha C)."""
    dist = at_fixed_point(query.at(alpha))
    return dist.tail_at_or_above(headroom(query, alpha) + 1)


def max_threshold(query: ProvisionQuery) -> float:
    """Largest alpha whose loss probability stays below epsilon.

    A full grid scan followed by bisection between the last feasible grid
    point and its infeasible neighbour; no monotonicity in alpha is assumed.
    """
    lo, hi = query.alpha_range
    d = query.alpha_grid
    grid = np.arange(lo + d, hi - d / 2, d)
    if grid.size == 0:
        raise Infeasible("search interval is empty at this grid resolution")
    feasible = np.array([_feasible(query, a) for a in grid])
    if not feasible.any():
        raise Infeasible(f"no alpha on the grid keeps the loss below {query.epsilon:g}")
    i = int(np.flatnonzero(feasible)[-1])
    good = float(grid[i])
    bad = float(grid[i + 1]) if i + 1 < grid.size else hi
    while bad - good > REFINE_TOL:
        mid = 0.5 * (good + bad)
        if _feasible(query, mid):
            good = mid
        else:
            bad = mid
    return good


def _feasible(query: ProvisionQuery, alpha: float) -> bool:
    try:
        return loss_probability(query, alpha) < query.epsilon
    except RegimeError:
        return False


def pi_minus_at(query: ProvisionQuery, alpha: float) -> float:
    return fixed_point(query.at(alpha)).pi_minus


@dataclass(frozen=True)
class CurveRow:
    epsilon: float
    rate: float
    alpha_eps: Optional[float]
    pi_minus_eps: Optional[float]
    beta: float
    acceptance_uncontrolled: float  # beta ** A_J
    loss_fraction_uncontrolled: float  # 1 - beta ** A_J
    status: str

    def as_list(self) -> list:
        return [
            self.epsilon,
            self.rate,
            self.alpha_eps,
            self.pi_minus_eps,
            self.beta,
            self.acceptance_uncontrolled,
            self.loss_fraction_uncontrolled,
            self.status,
        ]


CURVE_HEADER = [
    "epsilon",
    "lambda2",
    "alpha_eps",
    "pi_minus_eps",
    "beta",
    "acceptance_uncontrolled",
    "loss_fraction_uncontrolled",
    "status",
]


def downgrade_curve(query: ProvisionQuery, rate_grid, epsilons=None, index: int = -1) -> list[CurveRow]:
    """alpha_eps and pi_minus_eps as the rate of class ``index`` sweeps ``rate_grid``.

    Points where the regime fails or the search is infeasible are kept with a
    status flag instead of being dropped.
    """
    epsilons = [query.epsilon] if epsilons is None else list(epsilons)
    rows = []
    for eps in epsilons:
        for rate in rate_grid:
            lam = query.params.lam.copy()
            lam[index] = rate
            try:
                p = query.params.replace(lam=lam)
                q = ProvisionQuery(p, query.capacity_units, eps, query.alpha_grid)
            except DowngradingError as exc:
                rows.append(CurveRow(eps, float(rate), None, None, float("nan"), float("nan"), float("nan"), f"invalid: {exc}"))
                continue
            beta = erlang_fixed_point(p)
            acc = float(beta ** p.AJ)
            try:
                a = max_threshold(q)
                pim = pi_minus_at(q, a)
                rows.append(CurveRow(eps, float(rate), a, pim, beta, acc, 1 - acc, "ok"))
            except DowngradingError as exc:
                rows.append(CurveRow(eps, float(rate), None, None, beta, acc, 1 - acc, f"{type(exc).__name__}: {exc}"))
    return rows


def simulated_loss(query: ProvisionQuery, alpha: float, seed: int, horizon: float, warmup: float) -> dict:
    """Finite-N cross-check: rejected fraction of the simulated link at N = C."""
    from .simulation import REJECTED, ARRIVED, SimConfig, simulate

    p = query.at(alpha)
    star = fixed_point(p).ell
    init = tuple(int(x) for x in np.floor(star * p.N))
    out = simulate(SimConfig(p, seed, horizon, warmup, initial_state=init))
    arrived = int(out.counts[:, ARRIVED].sum())
    rejected = int(out.counts[:, REJECTED].sum())
    return {
        "alpha": alpha,
        "arrived": arrived,
        "rejected": rejected,
        "rejected_fraction": rejected / arrived if arrived else float("nan"),
        "limit_loss_probability": loss_probability(query, alpha),
    }


def load_query(path) -> tuple[ProvisionQuery, dict]:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return ProvisionQuery.from_dict(raw), raw
