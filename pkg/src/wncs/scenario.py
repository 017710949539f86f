"""Multi-loop experiment instances: types, JSON parsing and validation.

A scenario file is a JSON object::

    {
      "loops": [{"A": [[1.2]], "B": [[1]], "C": [[1]], "W": [[1]], "V": [[1]],
                 "Q": [[1]], "R": [[1]], "x0_mean": [0], "x0_cov": [[1]]}],
      "channels": 1,
      "q_bar": [[1.0]],
      "horizon": 10000,
      "seed": 42,
      "policy": "coil"
    }

Matrices are row-major nested arrays; a bare number is accepted as a 1x1
matrix. ``x0_mean`` defaults to zeros and ``x0_cov`` to the identity;
``seed`` defaults to 0 and ``policy`` to ``"coil"``.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from .errors import DimensionError, DomainError, ParseError

logger = logging.getLogger(__name__)

PSD_TOL = 1e-9
SEED_MAX = 2**64


class Policy(str, Enum):
    COIL = "coil"
    VOI = "voi"
    AOI = "aoi"
    ROUND_ROBIN = "round_robin"
    RANDOM = "random"
    ALWAYS = "always"

    @classmethod
    def parse(cls, value: str | Policy) -> Policy:
        if isinstance(value, Policy):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            names = ", ".join(p.value for p in cls)
            raise ParseError(f"unknown policy {value!r} (expected one of {names})") from None


@dataclass(frozen=True, eq=False)
class LoopSpec:
    """Plant, noise and cost matrices of one control loop."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    W: np.ndarray
    V: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x0_mean: np.ndarray
    x0_cov: np.ndarray

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def p(self) -> int:
        return self.C.shape[0]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LoopSpec):
            return NotImplemented
        return all(
            np.array_equal(getattr(self, name), getattr(other, name))
            for name in _LOOP_KEYS
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Scenario:
    loops: tuple[LoopSpec, ...]
    num_channels: int
    q_bar: np.ndarray
    horizon: int
    seed: int = 0
    policy: Policy = Policy.COIL

    @property
    def N(self) -> int:
        return len(self.loops)

    @property
    def M(self) -> int:
        return self.num_channels

    def replace(self, **changes: Any) -> Scenario:
        """Copy with some top-level fields changed, re-validated."""
        doc = scenario_to_dict(self)
        for key, value in changes.items():
            if key == "policy" and value is not None:
                doc["policy"] = Policy.parse(value).value
            elif key in ("horizon", "seed") and value is not None:
                doc[key] = value
            elif key == "q_bar" and value is not None:
                doc["q_bar"] = np.asarray(value, dtype=float).tolist()
            elif key == "num_channels" and value is not None:
                doc["channels"] = value
            elif value is not None:
                raise TypeError(f"cannot replace field {key!r}")
        return scenario_from_dict(doc)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Scenario):
            return NotImplemented
        return (
            self.loops == other.loops
            and self.num_channels == other.num_channels
            and np.array_equal(self.q_bar, other.q_bar)
            and self.horizon == other.horizon
            and self.seed == other.seed
            and self.policy == other.policy
        )

    __hash__ = None  # type: ignore[assignment]


_LOOP_KEYS = ("A", "B", "C", "W", "V", "Q", "R", "x0_mean", "x0_cov")


def _as_matrix(value: Any, name: str) -> np.ndarray:
    if isinstance(value, bool):
        raise ParseError(f"{name}: expected a number or nested array, got a boolean")
    if isinstance(value, (int, float)):
        arr = np.array([[float(value)]])
    else:
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{name}: not a rectangular numeric array ({exc})") from None
        if arr.ndim != 2:
            raise DimensionError(f"{name}: expected a 2-D matrix, got {arr.ndim}-D array")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: non-finite entry")
    return arr


def _as_vector(value: Any, name: str) -> np.ndarray:
    if isinstance(value, bool):
        raise ParseError(f"{name}: expected a numeric array")
    if isinstance(value, (int, float)):
        arr = np.array([float(value)])
    else:
        try:
            arr = np.array(value, dtype=float)
        except (TypeError, ValueError) as exc:
            raise ParseError(f"{name}: not a numeric array ({exc})") from None
        if arr.ndim != 1:
            raise DimensionError(f"{name}: expected a 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name}: non-finite entry")
    return arr


def _as_int(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{name}: expected an integer")
    if isinstance(value, float):
        if not value.is_integer():
            raise ParseError(f"{name}: expected an integer, got {value}")
        value = int(value)
    return value


def _symmetric_psd(mat: np.ndarray, name: str, *, definite: bool = False) -> np.ndarray:
    sym = 0.5 * (mat + mat.T)
    min_eig = float(np.linalg.eigvalsh(sym).min())
    if definite:
        if min_eig <= 0.0:
            raise DomainError(f"{name}: not positive definite (min eigenvalue {min_eig:.3g})")
    elif min_eig < -PSD_TOL:
        raise DomainError(f"{name}: not positive semi-definite (min eigenvalue {min_eig:.3g})")
    return sym


def _square(mat: np.ndarray, name: str, size: int) -> None:
    if mat.shape != (size, size):
        raise DimensionError(f"{name}: expected shape ({size}, {size}), got {mat.shape}")


def loop_from_dict(doc: Any, index: int = 0) -> LoopSpec:
    if not isinstance(doc, dict):
        raise ParseError(f"loops[{index}]: expected an object")
    missing = [k for k in ("A", "B", "C", "W", "V", "Q", "R") if k not in doc]
    if missing:
        raise ParseError(f"loops[{index}]: missing keys {missing}")
    tag = f"loops[{index}]"
    A = _as_matrix(doc["A"], f"{tag}.A")
    B = _as_matrix(doc["B"], f"{tag}.B")
    C = _as_matrix(doc["C"], f"{tag}.C")
    n = A.shape[0]
    _square(A, f"{tag}.A", n)
    if B.shape[0] != n:
        raise DimensionError(f"{tag}.B: expected {n} rows to match A, got shape {B.shape}")
    if C.shape[1] != n:
        raise DimensionError(f"{tag}.C: expected {n} columns to match A, got shape {C.shape}")
    m, p = B.shape[1], C.shape[0]

    W = _as_matrix(doc["W"], f"{tag}.W")
    V = _as_matrix(doc["V"], f"{tag}.V")
    Q = _as_matrix(doc["Q"], f"{tag}.Q")
    R = _as_matrix(doc["R"], f"{tag}.R")
    _square(W, f"{tag}.W", n)
    _square(V, f"{tag}.V", p)
    _square(Q, f"{tag}.Q", n)
    _square(R, f"{tag}.R", m)

    x0_mean = _as_vector(doc["x0_mean"], f"{tag}.x0_mean") if "x0_mean" in doc else np.zeros(n)
    x0_cov = _as_matrix(doc["x0_cov"], f"{tag}.x0_cov") if "x0_cov" in doc else np.eye(n)
    if x0_mean.shape != (n,):
        raise DimensionError(f"{tag}.x0_mean: expected length {n}, got {x0_mean.shape}")
    _square(x0_cov, f"{tag}.x0_cov", n)

    loop = LoopSpec(
        A=A,
        B=B,
        C=C,
        W=_symmetric_psd(W, f"{tag}.W"),
        V=_symmetric_psd(V, f"{tag}.V"),
        Q=_symmetric_psd(Q, f"{tag}.Q"),
        R=_symmetric_psd(R, f"{tag}.R", definite=True),
        x0_mean=x0_mean,
        x0_cov=_symmetric_psd(x0_cov, f"{tag}.x0_cov"),
    )
    if np.linalg.norm(A, 2) <= 1.0:
        logger.warning("%s: plant is not open-loop expanding (largest singular value of A <= 1)", tag)
    return loop


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, dict):
        raise ParseError("scenario document must be a JSON object")
    for key in ("loops", "channels", "q_bar", "horizon"):
        if key not in doc:
            raise ParseError(f"missing key {key!r}")
    if not isinstance(doc["loops"], list) or not doc["loops"]:
        raise ParseError("loops: expected a non-empty array")
    loops = tuple(loop_from_dict(d, i) for i, d in enumerate(doc["loops"]))

    M = _as_int(doc["channels"], "channels")
    if M < 1:
        raise DomainError(f"channels: must be >= 1, got {M}")
    q_bar = _as_matrix(doc["q_bar"], "q_bar")
    if q_bar.shape != (len(loops), M):
        raise DimensionError(f"q_bar: expected shape ({len(loops)}, {M}), got {q_bar.shape}")
    if np.any(q_bar < 0.0) or np.any(q_bar > 1.0):
        raise DomainError("q_bar: entries must lie in [0, 1]")

    horizon = _as_int(doc["horizon"], "horizon")
    if horizon < 1:
        raise DomainError(f"horizon: must be >= 1, got {horizon}")
    seed = _as_int(doc.get("seed", 0), "seed")
    if not 0 <= seed < SEED_MAX:
        raise DomainError("seed: must be an unsigned 64-bit integer")
    policy = Policy.parse(doc.get("policy", Policy.COIL.value))
    return Scenario(loops=loops, num_channels=M, q_bar=q_bar, horizon=horizon, seed=seed, policy=policy)


def parse_and_validate(text: str) -> Scenario:
    """Parse a JSON scenario document and check every invariant."""
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseError(f"malformed scenario document: {exc}") from None
    return scenario_from_dict(doc)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_and_validate(fh.read())


def scenario_to_dict(scenario: Scenario) -> dict:
    loops = []
    for loop in scenario.loops:
        loops.append({key: getattr(loop, key).tolist() for key in _LOOP_KEYS})
    return {
        "loops": loops,
        "channels": scenario.num_channels,
        "q_bar": scenario.q_bar.tolist(),
        "horizon": scenario.horizon,
        "seed": scenario.seed,
        "policy": scenario.policy.value,
    }


def dumps(scenario: Scenario) -> str:
    # repr-based float formatting in json round-trips exactly
    return json.dumps(scenario_to_dict(scenario), indent=2)


def scalar_loop(a: float, b: float = 1.0, c: float = 1.0, w: float = 1.0, v: float = 1.0,
                q: float = 1.0, r: float = 1.0, x0_mean: float = 0.0, x0_var: float = 1.0) -> LoopSpec:
    """Convenience constructor for a validated scalar loop."""
    return loop_from_dict({
        "A": a, "B": b, "C": c, "W": w, "V": v, "Q": q, "R": r,
        "x0_mean": [x0_mean], "x0_cov": x0_var,
    })


def make_scenario(loops, q_bar, horizon: int, seed: int = 0, policy: str | Policy = "coil") -> Scenario:
    q = np.atleast_2d(np.asarray(q_bar, dtype=float))
    doc = {
        "loops": [{key: getattr(lp, key).tolist() for key in _LOOP_KEYS} for lp in loops],
        "channels": q.shape[1],
        "q_bar": q.tolist(),
        "horizon": horizon,
        "seed": seed,
        "policy": Policy.parse(policy).value,
    }
    return scenario_from_dict(doc)

