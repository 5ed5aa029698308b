"""Explicit invariant distribution of the occupancy-offset walk on Z.

For a fluid state on the threshold hyperplane with both drift conditions
satisfied, the offset walk is ergodic and its law is obtained by partial
fractions over the zeros of P1 and P2:

* n < 0: a finite sum of geometric terms, one per zero of P2 inside the disk;
* 0 <= n < A_J - 1: a polynomial correction plus the geometric tail;
* n >= A_J - 1: pure geometric decay at rate 1/z1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotErgodic, NotFixedPoint, PoleProximity
from .model import ModelParams, Region, classify, fixed_point
from .spectral import (
    PolyPair,
    RootProfile,
    build_polynomials,
    deflate,
    locate_roots,
    poly_from_roots,
    polyval,
)

IMAG_TOL = 1e-9
POLE_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class InvariantDistribution:
    params: ModelParams
    ell: np.ndarray
    polys: PolyPair
    profile: RootProfile
    kappa: float
    alpha: np.ndarray
    tail_const: float
    neg_weights: np.ndarray

    @property
    def z1(self) -> float:
        return self.profile.z1

    @property
    def roots_d(self) -> np.ndarray:
        return self.profile.p2_in_disk

    @property
    def AJ(self) -> int:
        return self.params.AJ

    # --- point masses -------------------------------------------------

    def evaluate(self, n: int) -> float:
        return float(self.pmf(np.array([n]))[0])

    def pmf(self, ns) -> np.ndarray:
        ns = np.asarray(ns, dtype=np.int64)
        out = np.zeros(ns.shape, dtype=float)
        neg = ns < 0
        if neg.any():
            k = (-ns[neg] - 1).astype(float)
            terms = self.neg_weights[None, :] * self.roots_d[None, :] ** k[:, None]
            out[neg] = terms.sum(axis=1).real
        geo = ns >= 0
        if geo.any():
            out[geo] = self.kappa * self.tail_const * self.z1 ** (-ns[geo] - 1.0)
        mid = (ns >= 0) & (ns < self.AJ - 1)
        if mid.any():
            out[mid] += self.kappa * self.alpha[ns[mid]]
        return out

    def pmf_imag(self, ns) -> np.ndarray:
        """Imaginary residue left over in the n < 0 branch (should cancel)."""
        ns = np.asarray(ns, dtype=np.int64)
        ns = ns[ns < 0]
        k = (-ns - 1).astype(float)
        return (self.neg_weights[None, :] * self.roots_d[None, :] ** k[:, None]).sum(axis=1).imag

    # --- aggregated masses -------------------------------------------

    def negative_mass(self) -> float:
        """P(Y < 0), summed in closed form."""
        return float((self.neg_weights / (1 - self.roots_d)).sum().real)

    def tail_at_or_above(self, K: int) -> float:
        """P(Y >= K) with every infinite branch summed in closed form."""
        K = int(K)
        geo = self.kappa * self.tail_const * self.z1 ** (-float(max(K, 0))) / (self.z1 - 1)
        if K >= self.AJ - 1:
            return float(geo)
        lo = max(K, 0)
        total = geo + self.kappa * self.alpha[lo:].sum()
        if K < 0:
            q = self.roots_d
            total += (self.neg_weights * (1 - q ** (-K)) / (1 - q)).sum().real
        return float(total)

    def total_mass(self) -> float:
        return self.negative_mass() + self.tail_at_or_above(0)

    # --- generating function ----------------------------------------

    def generating_split(self, z: complex) -> tuple[complex, complex]:
        """Closed forms of E[z^Y; Y >= 0] and E[z^Y; Y < 0].

        The first is the power series inside |z| < z1; the second is the
        Laurent series outside the largest zero of P2 in the disk and its
        meromorphic continuation elsewhere.
        """
        z = complex(z)
        poles = np.concatenate([[self.z1], self.roots_d])
        if np.min(np.abs(z - poles)) < POLE_TOL:
            raise PoleProximity(f"z={z} is within {POLE_TOL} of a pole")
        lamJ = self.params.lam[-1]
        phi_plus = -self.kappa * lamJ * np.prod(z - self.profile.p2_out_disk) / (z - self.z1)
        phi_minus = (
            self.kappa
            * self.params.Lambda
            * np.prod(z - self.profile.p1_in_disk)
            / np.prod(z - self.roots_d)
        )
        return complex(phi_plus), complex(phi_minus)

    # --- moments by summation ----------------------------------------

    def raw_moments(self, order: int = 3) -> np.ndarray:
        """E[Y^k] for k = 0..order (order <= 3), by branch-wise closed-form sums."""
        if order > 3:
            raise ValueError("order must be <= 3")
        out = np.zeros(order + 1)
        q = self.roots_d
        # sum_{m>=1} m^k q^(m-1)
        neg_series = [
            1 / (1 - q),
            1 / (1 - q) ** 2,
            (1 + q) / (1 - q) ** 3,
            (1 + 4 * q + q * q) / (1 - q) ** 4,
        ]
        x = 1 / self.z1
        # sum_{n>=0} n^k x^n
        geo_series = [
            1 / (1 - x),
            x / (1 - x) ** 2,
            x * (1 + x) / (1 - x) ** 3,
            x * (1 + 4 * x + x * x) / (1 - x) ** 4,
        ]
        geo = self.kappa * self.tail_const
        n_mid = np.arange(self.AJ - 1, dtype=float)
        for k in range(order + 1):
            neg = ((-1) ** k * self.neg_weights * neg_series[k]).sum().real
            pos = geo * x * geo_series[k]
            mid = self.kappa * (n_mid**k * self.alpha).sum()
            out[k] = neg + pos + mid
        return out


def build_distribution(params: ModelParams, ell) -> InvariantDistribution:
    ell = np.array(ell, dtype=float)
    region = classify(params, ell)
    if region is not Region.DELTA0:
        raise NotErgodic(f"offset walk is not ergodic: state lies in {region.value}")
    polys = build_polynomials(params, ell)
    prof = locate_roots(polys)
    z1 = prof.z1
    q = prof.p2_in_disk
    lamJ = params.lam[-1]

    r_d1 = np.prod(1 - q)
    kappa = float(((z1 - 1) * r_d1).real / params.Lambda_A)

    r_dc = poly_from_roots(prof.p2_out_disk)
    if np.abs(r_dc.imag).max(initial=0.0) > IMAG_TOL * max(1.0, np.abs(r_dc).max()):
        raise NotErgodic("outer zeros of P2 are not closed under conjugation")
    r_dc = r_dc.real
    quot, _ = deflate(r_dc, z1)
    alpha = -lamJ * quot

    r_d_z1 = np.prod(z1 - q).real
    tail_const = float(polyval(polys.p2, z1) / ((z1 - 1) * r_d_z1))

    # R_D'(q) as the product over the other inner zeros
    diffs = q[:, None] - q[None, :]
    np.fill_diagonal(diffs, 1.0)
    r_d_prime = diffs.prod(axis=1)
    neg_weights = -kappa * polyval(polys.p1, q) / ((q - z1) * (q - 1) * r_d_prime)

    ell.setflags(write=False)
    alpha.setflags(write=False)
    neg_weights.setflags(write=False)
    return InvariantDistribution(
        params=params,
        ell=ell,
        polys=polys,
        profile=prof,
        kappa=kappa,
        alpha=alpha,
        tail_const=tail_const,
        neg_weights=neg_weights,
    )


def at_fixed_point(params: ModelParams) -> InvariantDistribution:
    return build_distribution(params, fixed_point(params).ell)


@dataclass(frozen=True)
class MomentSummary:
    mean: float
    variance: float
    third_central: float
    standardized_skew: float
    theta: tuple
    s0: float
    s1: float
    s2: float

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "third_central": self.third_central,
            "standardized_skew": self.standardized_skew,
            "theta": list(self.theta),
            "S(1)": self.s0,
            "S'(1)": self.s1,
            "S''(1)": self.s2,
        }


def moments(dist: InvariantDistribution, params: ModelParams | None = None) -> MomentSummary:
    """Closed-form mean, variance and third central moment at the fixed point.

    These are the successive cumulants of log E[z^Y] at z = 1. The variance
    uses the coefficient (2*theta3 - theta2)/(6*theta1); the third cumulant
    uses theta2**3/(4 theta1**3) + theta2 (theta2 - 2 theta3)/(4 theta1**2)
    + (theta4 - theta3)/(4 theta1).
    """
    params = params or dist.params
    star = fixed_point(params).ell
    if not np.allclose(dist.ell, star, rtol=1e-9, atol=1e-12):
        raise NotFixedPoint("closed-form moments are only available at the fixed point")
    A = params.A.astype(float)
    lam = params.lam
    t1, t2, t3, t4 = (float((lam * A ** (i - 1) * (A - 1)).sum()) for i in (1, 2, 3, 4))
    z1 = dist.z1
    q = dist.roots_d
    s0 = float((1 / (1 - z1) + (1 / (1 - q)).sum()).real)
    s1 = float((-1 / (1 - z1) ** 2 - (1 / (1 - q) ** 2).sum()).real)
    s2 = float((2 / (1 - z1) ** 3 + 2 * (1 / (1 - q) ** 3).sum()).real)

    mean = params.AJ + t2 / (2 * t1) - s0
    var = (2 * t3 - t2) / (6 * t1) - (t2 / (2 * t1)) ** 2 - (s0 + s1)
    third = (
        t2**3 / (4 * t1**3)
        + t2 * (t2 - 2 * t3) / (4 * t1**2)
        + (t4 - t3) / (4 * t1)
        - (s0 + 3 * s1 + s2)
    )
    return MomentSummary(
        mean=mean,
        variance=var,
        third_central=third,
        standardized_skew=third / var**1.5,
        theta=(t1, t2, t3, t4),
        s0=s0,
        s1=s1,
        s2=s2,
    )


def moments_by_summation(dist: InvariantDistribution) -> tuple[float, float, float]:
    """(mean, variance, third central moment) from the branch sums; any state in Delta0."""
    m0, m1, m2, m3 = dist.raw_moments(3)
    mean = m1 / m0
    var = m2 / m0 - mean**2
    third = m3 / m0 - 3 * mean * m2 / m0 + 2 * mean**3
    return float(mean), float(var), float(third)
