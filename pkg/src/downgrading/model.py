"""Model parameters, regime checks, region classification and the fixed point."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .errors import ConfigError, OutOfStateSpace, RegimeError, StructuralInvalid

# relative half-width of the band treated as the threshold hyperplane <A,x> = c0
HYPERPLANE_TOL = 1e-9


def _frozen(a, dtype) -> np.ndarray:
    arr = np.array(a, dtype=dtype).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelParams:
    """One link with J job classes under the downgrading policy.

    Rates and capacities are per unit of scale; the simulator multiplies
    arrival rates and capacities by ``N``.
    """

    A: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    c: float
    c0: float
    N: Optional[int] = None

    def __post_init__(self):
        A = np.array(self.A).reshape(-1)
        if A.size == 0:
            raise StructuralInvalid("J>=1", "at least one class is required")
        if not np.all(np.equal(np.mod(A, 1), 0)):
            raise StructuralInvalid("A integer", f"A={A.tolist()}")
        object.__setattr__(self, "A", _frozen(A, np.int64))
        object.__setattr__(self, "lam", _frozen(self.lam, float))
        object.__setattr__(self, "mu", _frozen(self.mu, float))
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "c0", float(self.c0))
        J = self.A.size
        if self.lam.size != J or self.mu.size != J:
            raise StructuralInvalid(
                "vector lengths",
                f"len(A)={J}, len(lambda)={self.lam.size}, len(mu)={self.mu.size}",
            )
        if self.A[0] != 1:
            raise StructuralInvalid("A[1]=1", f"A[1]={self.A[0]}")
        if np.any(np.diff(self.A) <= 0):
            raise StructuralInvalid("A strictly increasing", f"A={self.A.tolist()}")
        if np.any(self.lam < 0) or not np.all(np.isfinite(self.lam)):
            raise StructuralInvalid("lambda>=0", f"lambda={self.lam.tolist()}")
        if np.any(self.mu <= 0) or not np.all(np.isfinite(self.mu)):
            raise StructuralInvalid("mu>0", f"mu={self.mu.tolist()}")
        if np.any(self.mu < self.mu[0]):
            raise StructuralInvalid("mu[1] minimal", f"mu={self.mu.tolist()}")
        if not 0 < self.c0 < self.c:
            raise StructuralInvalid("0<c0<c", f"c0={self.c0}, c={self.c}")
        if self.Lambda <= 0:
            raise StructuralInvalid("Lambda>0", "all arrival rates vanish")
        if self.N is not None:
            if int(self.N) != self.N or self.N < 1:
                raise StructuralInvalid("N positive integer", f"N={self.N}")
            object.__setattr__(self, "N", int(self.N))

    @property
    def J(self) -> int:
        return int(self.A.size)

    @property
    def AJ(self) -> int:
        return int(self.A[-1])

    @property
    def Lambda(self) -> float:
        return float(self.lam.sum())

    @property
    def rho(self) -> np.ndarray:
        return self.lam / self.mu

    @property
    def A_rho(self) -> float:
        return float(self.A @ self.rho)

    @property
    def Lambda_A(self) -> float:
        return float(self.lam @ (self.A - 1))

    def replace(self, **changes) -> "ModelParams":
        kw = dict(A=self.A, lam=self.lam, mu=self.mu, c=self.c, c0=self.c0, N=self.N)
        kw.update(changes)
        return ModelParams(**kw)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "A": self.A.tolist(),
            "lambda": self.lam.tolist(),
            "mu": self.mu.tolist(),
            "c": self.c,
            "c0": self.c0,
        }
        if self.N is not None:
            d["N"] = self.N
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelParams":
        if not isinstance(d, dict):
            raise ConfigError("model parameters must be a JSON object")
        required = ("A", "lambda", "mu", "c", "c0")
        missing = [k for k in required if k not in d]
        if missing:
            raise ConfigError(f"missing keys: {missing}")
        extra = set(d) - set(required) - {"N"}
        if extra:
            raise ConfigError(f"unknown keys: {sorted(extra)}")
        for k in ("A", "lambda", "mu"):
            if not isinstance(d[k], list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in d[k]
            ):
                raise ConfigError(f"'{k}' must be a list of numbers")
        if any(isinstance(v, float) and not v.is_integer() for v in d["A"]):
            raise ConfigError("'A' must contain integers")
        for k in ("c", "c0"):
            if not isinstance(d[k], (int, float)) or isinstance(d[k], bool):
                raise ConfigError(f"'{k}' must be a number")
        N = d.get("N")
        if N is not None and (not isinstance(N, int) or isinstance(N, bool)):
            raise ConfigError("'N' must be an integer")
        return cls(A=d["A"], lam=d["lambda"], mu=d["mu"], c=d["c"], c0=d["c0"], N=N)

    @classmethod
    def load(cls, path) -> "ModelParams":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class RegimeReport:
    Lambda: float
    rho: tuple
    Lambda_A: float
    A_rho: float
    R: bool  # <A,rho> > c and Lambda/mu1 < c
    R1: bool  # <A,rho> > c0
    R2: bool  # Lambda/mu1 < c0
    feasible: bool  # some capacity c could satisfy (R)
    messages: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        return {
            "Lambda": self.Lambda,
            "rho": list(self.rho),
            "Lambda_A": self.Lambda_A,
            "A_rho": self.A_rho,
            "R": self.R,
            "R1": self.R1,
            "R2": self.R2,
            "feasible": self.feasible,
            "messages": list(self.messages),
        }


def validate(params: ModelParams) -> RegimeReport:
    """Report which of the overload conditions (R), (R1), (R2) hold.

    Structural problems are raised by :class:`ModelParams` itself, so any
    instance reaching this function is structurally valid.
    """
    low = params.Lambda / params.mu[0]
    a_rho = params.A_rho
    msgs = []
    R = a_rho > params.c and low < params.c
    R1 = a_rho > params.c0
    R2 = low < params.c0
    feasible = a_rho > low
    if not feasible:
        msgs.append(
            f"regime infeasible: <A,rho>={a_rho:.6g} <= Lambda/mu1={low:.6g}, "
            "no capacity satisfies (R)"
        )
    if params.Lambda_A <= 0:
        msgs.append("Lambda_A=0: no class with A_j>1 has positive rate")
    if not R:
        msgs.append("condition (R) fails")
    if not R1:
        msgs.append("condition (R1) fails: <A,rho> <= c0")
    if not R2:
        msgs.append("condition (R2) fails: Lambda/mu1 >= c0")
    return RegimeReport(
        Lambda=params.Lambda,
        rho=tuple(params.rho.tolist()),
        Lambda_A=params.Lambda_A,
        A_rho=a_rho,
        R=bool(R),
        R1=bool(R1),
        R2=bool(R2),
        feasible=bool(feasible),
        messages=tuple(msgs),
    )


class Region(str, enum.Enum):
    DELTA0 = "Delta0"
    DELTA_MINUS = "DeltaMinus"
    DELTA_PLUS = "DeltaPlus"
    BELOW = "Interior-below"
    ABOVE = "Interior-above"

    @property
    def pi_neg_limit(self) -> Optional[float]:
        """Mass of the offset walk on the negative half-line off Delta0."""
        if self in (Region.DELTA_MINUS, Region.BELOW):
            return 1.0
        if self in (Region.DELTA_PLUS, Region.ABOVE):
            return 0.0
        return None


def on_hyperplane(params: ModelParams, occupancy: float) -> bool:
    return abs(occupancy - params.c0) <= HYPERPLANE_TOL * max(1.0, params.c0)


def classify(params: ModelParams, ell) -> Region:
    ell = np.asarray(ell, dtype=float)
    if ell.shape != (params.J,) or np.any(ell < 0):
        raise OutOfStateSpace(f"state must be a nonnegative vector of length {params.J}")
    occ = float(params.A @ ell)
    if occ > params.c * (1 + HYPERPLANE_TOL):
        raise OutOfStateSpace(f"occupancy {occ} exceeds capacity {params.c}")
    if not on_hyperplane(params, occ):
        return Region.BELOW if occ < params.c0 else Region.ABOVE
    up = float(params.A @ (params.lam - params.mu * ell))
    down = float(params.A @ (params.mu * ell))
    if up <= 0:
        return Region.DELTA_MINUS
    if down <= params.Lambda:
        return Region.DELTA_PLUS
    return Region.DELTA0


def pi_negative(params: ModelParams, ell) -> float:
    """Mass of the negative half-line under the offset walk's invariant law.

    Valid for states in Delta0, where it lies in (0, 1).
    """
    ell = np.asarray(ell, dtype=float)
    return float((params.A * params.mu * ell).sum() - params.Lambda) / params.Lambda_A


@dataclass(frozen=True)
class FixedPoint:
    ell: np.ndarray
    pi_minus: float


def fixed_point(params: ModelParams) -> FixedPoint:
    """Unique equilibrium of the fluid limit and the non-downgrade probability."""
    rep = validate(params)
    if not (rep.R1 and rep.R2):
        raise RegimeError(
            "fixed point requires (R1) and (R2): " + "; ".join(rep.messages)
        )
    low = params.Lambda / params.mu[0]
    pim = (params.c0 - low) / (params.A_rho - low)
    rho = params.rho
    ell = rho * pim
    ell[0] = params.c0 - pim * float(params.A[1:] @ rho[1:])
    ell.setflags(write=False)
    return FixedPoint(ell=ell, pi_minus=float(pim))
