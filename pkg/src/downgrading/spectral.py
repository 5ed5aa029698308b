"""Zeros of the two polynomials in the Wiener-Hopf relation of the offset walk.

Coefficient vectors are stored in ascending order of powers (index k holds
the coefficient of z**k) throughout this package.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateModel, RepeatedRootDetected, RootCountMismatch
from .model import ModelParams

UNIT_CIRCLE_TOL = 1e-9
REAL_TOL = 1e-9
REPEAT_TOL = 1e-6
NEWTON_STEPS = 2


@dataclass(frozen=True)
class PolyPair:
    p1: np.ndarray  # degree A_J + 1
    p2: np.ndarray  # degree 2 A_J


@dataclass(frozen=True)
class RootProfile:
    z1: float
    p1_in_disk: np.ndarray
    z2: float
    p2_in_disk: np.ndarray  # includes z2
    p2_out_disk: np.ndarray

    def to_dict(self) -> dict:
        def pairs(r):
            return [[float(x.real), float(x.imag)] for x in r]

        return {
            "z1": self.z1,
            "z2": self.z2,
            "p1_in_disk": pairs(self.p1_in_disk),
            "p2_in_disk": pairs(self.p2_in_disk),
            "p2_out_disk": pairs(self.p2_out_disk),
        }


def polyval(coeffs: np.ndarray, z):
    """Horner evaluation of an ascending coefficient vector."""
    acc = np.zeros_like(np.asarray(z), dtype=np.result_type(coeffs, z, float))
    for a in coeffs[::-1]:
        acc = acc * z + a
    return acc


def polyder(coeffs: np.ndarray) -> np.ndarray:
    return coeffs[1:] * np.arange(1, coeffs.size)


def deflate(coeffs: np.ndarray, root) -> tuple[np.ndarray, complex]:
    """Synthetic division by (z - root); returns (quotient, remainder)."""
    n = coeffs.size - 1
    q = np.zeros(n, dtype=np.result_type(coeffs, root))
    acc = coeffs[n]
    for k in range(n - 1, -1, -1):
        q[k] = acc
        acc = coeffs[k] + acc * root
    return q, acc


def poly_from_roots(roots, lead=1.0) -> np.ndarray:
    """Ascending coefficients of lead * prod(z - r)."""
    c = np.array([lead], dtype=complex)
    for r in roots:
        c = np.concatenate([[0.0], c]) - r * np.concatenate([c, [0.0]])
    return c


def build_polynomials(params: ModelParams, ell) -> PolyPair:
    ell = np.asarray(ell, dtype=float)
    if np.any(ell < 0):
        raise ValueError("fluid state must be nonnegative")
    AJ = params.AJ
    if AJ < 2 or params.Lambda_A <= 0:
        raise DegenerateModel("Lambda_A = 0: no class with A_j > 1 has positive rate")
    if params.lam[-1] <= 0:
        raise DegenerateModel("lambda_J = 0: leading coefficient of P2 vanishes")
    p1 = np.zeros(AJ + 2)
    p2 = np.zeros(2 * AJ + 1)
    for a, lam, mx in zip(params.A, params.lam, params.mu * ell):
        p1[AJ] += lam + mx
        p1[AJ + 1] -= lam
        p1[AJ - a] -= mx
        p2[AJ + a] += lam
        p2[AJ - a] += mx
        p2[AJ] -= lam + mx
    return PolyPair(p1=p1, p2=p2)


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Eigenvalues of the companion matrix of an ascending coefficient vector."""
    c = coeffs / coeffs[-1]
    n = c.size - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1]
    return np.linalg.eigvals(comp).astype(complex)


def _polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = NEWTON_STEPS) -> np.ndarray:
    d = polyder(coeffs)
    r = roots.copy()
    for _ in range(steps):
        f = polyval(coeffs, r)
        fp = polyval(d, r)
        ok = fp != 0
        r[ok] = r[ok] - f[ok] / fp[ok]
    return r


def _roots_without_one(coeffs: np.ndarray, name: str) -> np.ndarray:
    q, rem = deflate(coeffs, 1.0)
    scale = np.abs(coeffs).max()
    if abs(rem) > 1e-10 * scale:
        raise RootCountMismatch(f"{name}(1) = {rem:g} is not zero")
    return _polish(coeffs.astype(complex), _companion_roots(q))


def _as_real(z: complex, name: str) -> float:
    if abs(z.imag) > REAL_TOL * max(1.0, abs(z)):
        raise RootCountMismatch(f"{name} is not real: {z}")
    return float(z.real)


def locate_roots(pair: PolyPair) -> RootProfile:
    r1 = _roots_without_one(pair.p1, "P1")
    r2 = _roots_without_one(pair.p2, "P2")
    AJ = pair.p1.size - 2

    for name, r in (("P1", r1), ("P2", r2)):
        near = np.abs(np.abs(r) - 1.0) <= UNIT_CIRCLE_TOL
        if near.any():
            raise RootCountMismatch(f"{name} has a root on the unit circle: {r[near]}")

    p1_in = r1[np.abs(r1) < 1]
    p1_out = r1[np.abs(r1) > 1]
    if p1_in.size != AJ - 1 or p1_out.size != 1:
        raise RootCountMismatch(
            f"P1: {p1_in.size} roots inside the disk and {p1_out.size} outside, "
            f"expected {AJ - 1} and 1"
        )
    z1 = _as_real(p1_out[0], "z1")
    if z1 <= 1:
        raise RootCountMismatch(f"z1 = {z1} is not > 1")

    p2_in = r2[np.abs(r2) < 1]
    p2_out = r2[np.abs(r2) > 1]
    if p2_in.size != AJ or p2_out.size != AJ - 1:
        raise RootCountMismatch(
            f"P2: {p2_in.size} roots inside the disk and {p2_out.size} outside, "
            f"expected {AJ} and {AJ - 1}"
        )
    k = int(np.argmax(np.abs(p2_in)))
    z2 = _as_real(p2_in[k], "z2")
    if not 0 < z2 < 1:
        raise RootCountMismatch(f"z2 = {z2} is not in (0, 1)")
    p2_in[k] = z2

    diff = np.abs(r2[:, None] - r2[None, :])
    np.fill_diagonal(diff, np.inf)
    if diff.size > 1 and diff.min() <= REPEAT_TOL:
        raise RepeatedRootDetected(f"P2 has a repeated root (separation {diff.min():.3g})")

    return RootProfile(
        z1=z1,
        p1_in_disk=_conjugate_clean(p1_in),
        z2=z2,
        p2_in_disk=_conjugate_clean(p2_in),
        p2_out_disk=_conjugate_clean(p2_out),
    )


def _conjugate_clean(r: np.ndarray) -> np.ndarray:
    """Snap near-real roots onto the real axis and sort for reproducibility."""
    r = r.copy()
    real = np.abs(r.imag) <= REAL_TOL * np.maximum(1.0, np.abs(r))
    r[real] = r[real].real
    order = np.lexsort((r.imag, r.real))
    r = r[order]
    r.setflags(write=False)
    return r


def roots(params: ModelParams, ell) -> RootProfile:
    return locate_roots(build_polynomials(params, ell))
