"""Pure-loss benchmark: Erlang fixed point and accepted-load comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RegimeError
from .model import ModelParams

BISECTION_TOL = 1e-12


def _load(params: ModelParams, beta: float) -> float:
    return float((params.A * params.rho * beta ** params.A.astype(float)).sum())


def erlang_fixed_point(params: ModelParams) -> float:
    """Root in (0, 1) of sum_j A_j rho_j beta^A_j = c, or 1 when the link is not overloaded.

    Plain bisection: the map is strictly increasing on [0, 1], vanishes at 0
    and exceeds c at 1 whenever <A, rho> > c.
    """
    c = params.c
    if params.A_rho <= c:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if _load(params, mid) < c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class ComparisonResult:
    c0: float
    beta: float
    acceptance: tuple  # beta ** A_j, per class
    pi_minus: float
    W_L: float
    W_D: float
    overloaded: bool  # <A, rho> > c; otherwise beta = 1 and nothing is lost

    @property
    def delta(self) -> float:
        return self.W_L - self.W_D

    @property
    def loss_fraction(self) -> tuple:
        return tuple(1 - a for a in self.acceptance)


def accepted_load(params: ModelParams, beta: float) -> float:
    return float((params.rho * beta ** params.A.astype(float)).sum() / params.Lambda)


def non_downgraded_load(params: ModelParams, c0: float) -> float:
    low = params.Lambda / params.mu[0]
    pim = (c0 - low) / (params.A_rho - low)
    return float(params.rho.sum() * pim / params.Lambda)


def compare(params: ModelParams, c0grid) -> list[ComparisonResult]:
    low = params.Lambda / params.mu[0]
    if params.A_rho <= low:
        raise RegimeError("no threshold gives a non-downgrade probability in (0, 1)")
    beta = erlang_fixed_point(params)
    acc = tuple(float(beta**a) for a in params.A)
    W_L = accepted_load(params, beta)
    out = []
    for c0 in np.atleast_1d(np.asarray(c0grid, dtype=float)):
        if not low < c0 < params.c:
            raise RegimeError(f"c0={c0} outside (Lambda/mu1, c) = ({low:.6g}, {params.c:.6g})")
        if not c0 < params.A_rho:
            raise RegimeError(f"c0={c0} violates (R1): <A,rho>={params.A_rho:.6g}")
        out.append(
            ComparisonResult(
                c0=float(c0),
                beta=beta,
                acceptance=acc,
                pi_minus=float((c0 - low) / (params.A_rho - low)),
                W_L=W_L,
                W_D=non_downgraded_load(params, c0),
                overloaded=params.A_rho > params.c,
            )
        )
    return out


def sweep_rate(params: ModelParams, index: int, values, c0: float) -> list[tuple]:
    """Rows (value, beta, W_L, W_D) as the arrival rate of class ``index`` varies.

    Raises RegimeError at the first value for which c0 leaves the admissible
    window; see :func:`admissible_rate_window`.
    """
    rows = []
    for v in values:
        lam = params.lam.copy()
        lam[index] = v
        p = params.replace(lam=lam, c0=c0)
        r = compare(p, [c0])[0]
        rows.append((float(v), r.beta, r.W_L, r.W_D))
    return rows


def admissible_rate_window(params: ModelParams, index: int, c0: float) -> tuple[float, float]:
    """Open interval of lambda_index for which Lambda/mu1 < c0 < <A, rho>."""
    lam = params.lam.copy()
    lam[index] = 0.0
    base = params.replace(lam=lam) if lam.sum() > 0 else None
    others_low = 0.0 if base is None else base.Lambda / params.mu[0]
    others_arho = 0.0 if base is None else base.A_rho
    lo = (c0 - others_arho) * params.mu[index] / params.A[index]
    hi = (c0 - others_low) * params.mu[0]
    return max(lo, 0.0), hi
