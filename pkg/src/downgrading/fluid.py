"""Fluid limit of the scaled occupancy vector.

Below the threshold hyperplane every class evolves as an independent
M/M/infinity fluid. On the hyperplane, with the offset walk ergodic, arrivals
are split between requested and downgraded admission according to the
walk's negative-half-line mass, which keeps the occupancy at c0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModel, RegimeError, RegionUnsupported, SingularB, StepTooLarge
from .model import HYPERPLANE_TOL, ModelParams, Region, classify, pi_negative, validate

HIT_TOL = 1e-10
MAX_REL_CHANGE = 0.1


def vector_field(params: ModelParams, ell) -> np.ndarray:
    ell = np.asarray(ell, dtype=float)
    region = classify(params, ell)
    if region is Region.DELTA0:
        p = pi_negative(params, ell)
    else:
        p = region.pi_neg_limit
    return _field(params, ell, p)


def _field(params: ModelParams, ell: np.ndarray, p_neg: float) -> np.ndarray:
    lam, mu = params.lam, params.mu
    out = lam * p_neg - mu * ell
    out[0] = lam[0] - mu[0] * ell[0] + (1 - p_neg) * lam[1:].sum()
    return out


def boundary_field(params: ModelParams, y) -> np.ndarray:
    """Right-hand side of the linear system followed on the threshold hyperplane."""
    y = np.asarray(y, dtype=float)
    A, lam, mu = params.A, params.lam, params.mu
    la = params.Lambda_A
    out = -mu * y + lam * float(A @ (mu * y) - params.Lambda) / la
    out[0] = -mu[0] * y[0] + lam[0] + lam[1:].sum() * float(A @ (lam - mu * y)) / la
    return out


def free_flow(params: ModelParams, ell0, t) -> np.ndarray:
    """Exact solution below the threshold, rho + (ell0 - rho) e^{-mu t}."""
    rho = params.rho
    return rho + (np.asarray(ell0, dtype=float) - rho) * np.exp(-params.mu * t)


@dataclass
class FluidTrajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), J)
    regions: list

    def occupancy(self, A) -> np.ndarray:
        return self.states @ np.asarray(A)

    def rows(self, A):
        occ = self.occupancy(A)
        for t, s, o, r in zip(self.times, self.states, occ, self.regions):
            yield [float(t), *map(float, s), float(o), r.value]


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _project(params: ModelParams, y: np.ndarray) -> np.ndarray:
    y = y.copy()
    y[0] = params.c0 - float(params.A[1:] @ y[1:])
    return y


def integrate(
    params: ModelParams,
    ell0,
    horizon: float,
    step: float | None = None,
    record_every: int = 1,
) -> FluidTrajectory:
    """Fixed-step RK4 integration of the fluid limit from ``ell0``.

    States on the threshold hyperplane are re-projected onto it after every
    step by adjusting the class-1 component. Upward crossings of the
    hyperplane from below are located by bisection on the step length.
    """
    if params.Lambda_A <= 0:
        raise DegenerateModel("Lambda_A = 0")
    if step is None:
        step = 1e-3 / float(params.mu.max())
    if step <= 0:
        raise ValueError("step must be positive")
    A = params.A.astype(float)
    lam, mu = params.lam, params.mu
    c0 = params.c0
    la = params.Lambda_A
    Lam = params.Lambda
    lam_up = lam[1:].sum()
    A_mu = A * mu
    band = HYPERPLANE_TOL * max(1.0, c0)
    ell = np.array(ell0, dtype=float)
    region = classify(params, ell)
    if region is Region.DELTA0:
        ell = _project(params, ell)

    def field(y, p_neg):
        out = lam * p_neg - mu * y
        out[0] = lam[0] - mu[0] * y[0] + (1 - p_neg) * lam_up
        return out

    def on_h0(y):
        return field(y, (float(A_mu @ y) - Lam) / la)

    def below(y):
        return field(y, 1.0)

    def region_of(y):
        occ = float(A @ y)
        if occ > params.c * (1 + HYPERPLANE_TOL):
            return classify(params, y)  # raises OutOfStateSpace
        if abs(occ - c0) > band:
            return Region.BELOW if occ < c0 else Region.ABOVE
        down = float(A_mu @ y)
        if float(A @ lam) - down <= 0:
            return Region.DELTA_MINUS
        if down <= Lam:
            return Region.DELTA_PLUS
        return Region.DELTA0

    t = 0.0
    times, states, regions = [t], [ell.copy()], [region]
    k = 0
    while t < horizon - 1e-12:
        h = min(step, horizon - t)
        if region in (Region.DELTA_PLUS, Region.ABOVE):
            raise RegionUnsupported(f"state at t={t:.6g} lies in {region.value}")
        if region is Region.DELTA0:
            new = _project(params, _rk4(on_h0, ell, h))
        else:
            new = _rk4(below, ell, h)
            if float(A @ new) > c0:
                lo, hi = 0.0, h
                while hi - lo > HIT_TOL:
                    mid = 0.5 * (lo + hi)
                    if float(A @ _rk4(below, ell, mid)) > c0:
                        hi = mid
                    else:
                        lo = mid
                h = hi
                new = _project(params, _rk4(below, ell, h))
        scale = np.maximum(np.abs(ell), params.c0)
        if np.any(np.abs(new - ell) > MAX_REL_CHANGE * scale):
            raise StepTooLarge(f"step {h:g} changes the state by more than 10% at t={t:.6g}")
        t += h
        ell = new
        region = region_of(ell)
        k += 1
        if k % record_every == 0 or t >= horizon - 1e-12:
            times.append(t)
            states.append(ell.copy())
            regions.append(region)
    return FluidTrajectory(np.array(times), np.array(states), regions)


@dataclass(frozen=True)
class StabilityReport:
    eigenvalues: np.ndarray
    max_real_part: float
    B: np.ndarray
    e_b: np.ndarray
    F0: float

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "max_real_part": self.max_real_part,
            "B": self.B.tolist(),
            "e_b": self.e_b.tolist(),
            "F0": self.F0,
            "F0_below_one": bool(self.F0 < 1),
        }

    def equilibrium(self) -> np.ndarray:
        """-B^{-1} e_b, the limit of the classes j >= 2 on the hyperplane."""
        return -np.linalg.solve(self.B, self.e_b)


def stability_report(params: ModelParams) -> StabilityReport:
    rep = validate(params)
    if not (rep.R1 and rep.R2):
        raise RegimeError("stability analysis requires (R1) and (R2)")
    if params.J < 2 or params.Lambda_A <= 0:
        raise DegenerateModel("Lambda_A = 0")
    la = params.Lambda_A
    lam, mu, A = params.lam, params.mu, params.A
    b0 = (mu[0] * params.c0 - params.Lambda) / la
    b = A[1:] * (mu[1:] - mu[0]) / la
    B = np.outer(lam[1:], b) - np.diag(mu[1:])
    if abs(np.linalg.det(B)) < 1e-12:
        raise SingularB("B is singular")
    eig = np.linalg.eigvals(B)
    return StabilityReport(
        eigenvalues=eig,
        max_real_part=float(eig.real.max()),
        B=B,
        e_b=b0 * lam[1:],
        F0=float((b * lam[1:] / mu[1:]).sum()),
    )


def decay_rate(traj: FluidTrajectory, target, t_min: float, t_max: float, floor: float = 1e-11) -> float:
    """Least-squares slope of log ||ell(t) - target|| over [t_min, t_max]."""
    dist = np.linalg.norm(traj.states - np.asarray(target), axis=1)
    sel = (traj.times >= t_min) & (traj.times <= t_max) & (dist > floor)
    if sel.sum() < 2:
        raise ValueError("not enough points above the noise floor to fit a rate")
    slope, _ = np.polyfit(traj.times[sel], np.log(dist[sel]), 1)
    return float(slope)
