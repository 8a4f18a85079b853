"""Core domain types: collusion channels, bias distributions, codes and scheme parameters.

All types are frozen dataclasses. Array-valued fields are copied on construction
and marked read-only, so instances can be shared freely between trial workers.
Every type has a ``to_dict``/``from_dict`` pair producing plain JSON-compatible
values; the CLI uses these for its output format.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

import numpy as np


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _binary(a: np.ndarray) -> bool:
    if a.dtype == np.bool_:
        return True
    if a.dtype == np.uint8:
        return bool(a.max() <= 1)
    return bool(np.isin(a, (0, 1)).all())


@dataclass(frozen=True)
class CollusionChannel:
    """Colluder-symmetric attack: ``theta[z] = P(Y = 1 | Z = z)`` for tally ``z``."""

    c: int
    theta: tuple[float, ...]

    def __post_init__(self):
        if not isinstance(self.c, (int, np.integer)) or self.c < 1:
            raise ValueError(f"coalition size must be a positive integer, got {self.c!r}")
        theta = tuple(float(t) for t in self.theta)
        if len(theta) != self.c + 1:
            raise ValueError(f"theta must have c+1 = {self.c + 1} entries, got {len(theta)}")
        for z, t in enumerate(theta):
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"theta[{z}] = {t} is outside [0, 1]")
        object.__setattr__(self, "c", int(self.c))
        object.__setattr__(self, "theta", theta)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.theta, dtype=float)

    @property
    def marking(self) -> bool:
        """True iff the channel satisfies the marking assumption."""
        return self.theta[0] == 0.0 and self.theta[-1] == 1.0

    @property
    def deterministic(self) -> bool:
        return all(t in (0.0, 1.0) for t in self.theta)

    @property
    def symmetric(self) -> bool:
        """Invariance under swapping the roles of 0 and 1 (``theta_z + theta_{c-z} = 1``)."""
        return all(a + b == 1.0 for a, b in zip(self.theta, reversed(self.theta)))

    def to_dict(self) -> dict[str, Any]:
        return {"c": self.c, "theta": list(self.theta)}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> CollusionChannel:
        return cls(c=int(d["c"]), theta=tuple(d["theta"]))


def validate_channel(theta, c: int) -> CollusionChannel:
    """Build a :class:`CollusionChannel`, raising ``ValueError`` on any invariant violation."""
    return CollusionChannel(c=c, theta=tuple(np.asarray(theta, dtype=float).ravel()))


@dataclass(frozen=True)
class FixedP:
    """Every column uses the same bias ``p``."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise ValueError(f"fixed bias must lie in (0, 1), got {self.p}")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "fixed", "p": self.p}


@dataclass(frozen=True)
class Arcsine:
    """Arcsine bias density restricted to ``[delta, 1 - delta]``; ``delta = 0`` means no cut-offs."""

    delta: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.delta < 0.5:
            raise ValueError(f"arcsine cut-off must lie in [0, 1/2), got {self.delta}")

    def to_dict(self) -> dict[str, Any]:
        return {"kind": "arcsine", "delta": self.delta}


BiasDistribution = Union[FixedP, Arcsine]


def bias_from_dict(d: dict[str, Any]) -> BiasDistribution:
    kind = d.get("kind")
    if kind == "fixed":
        return FixedP(float(d["p"]))
    if kind == "arcsine":
        return Arcsine(float(d.get("delta", 0.0)))
    raise ValueError(f"unknown bias distribution kind {kind!r}")


def parse_bias(text: str) -> BiasDistribution:
    """Parse ``fixed:<p>``, ``arcsine`` or ``arcsine:<delta>``."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "fixed":
        if not arg:
            raise ValueError("fixed bias needs a value, e.g. fixed:0.5")
        return FixedP(float(arg))
    if name == "arcsine":
        return Arcsine(float(arg) if arg else 0.0)
    raise ValueError(f"unknown bias distribution {text!r}")


@dataclass(frozen=True, eq=False)
class Code:
    """An ``n x ell`` binary fingerprinting code together with its column biases."""

    bits: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        biases = np.asarray(self.biases, dtype=float)
        if bits.ndim != 2:
            raise ValueError("code matrix must be two-dimensional")
        if biases.shape != (bits.shape[1],):
            raise ValueError(f"expected {bits.shape[1]} biases, got shape {biases.shape}")
        if bits.size and not _binary(bits):
            raise ValueError("code entries must be 0 or 1")
        if biases.size and not ((biases > 0.0) & (biases < 1.0)).all():
            raise ValueError("biases must lie strictly inside (0, 1)")
        object.__setattr__(self, "bits", _frozen_array(bits, np.uint8))
        object.__setattr__(self, "biases", _frozen_array(biases, float))

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def ell(self) -> int:
        return self.bits.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Code):
            return NotImplemented
        return np.array_equal(self.bits, other.bits) and np.array_equal(self.biases, other.biases)

    def to_dict(self) -> dict[str, Any]:
        return {"bits": self.bits.tolist(), "biases": self.biases.tolist()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Code:
        bits = np.asarray(d["bits"], dtype=np.uint8).reshape(len(d["bits"]), len(d["biases"]))
        return cls(bits=bits, biases=np.asarray(d["biases"], dtype=float))


@dataclass(frozen=True, eq=False)
class PirateOutput:
    y: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.y)
        if y.ndim != 1:
            raise ValueError("pirate output must be a vector")
        if y.size and not _binary(y):
            raise ValueError("pirate output entries must be 0 or 1")
        object.__setattr__(self, "y", _frozen_array(y, np.uint8))

    def __len__(self) -> int:
        return self.y.shape[0]

    def __eq__(self, other):
        if not isinstance(other, PirateOutput):
            return NotImplemented
        return np.array_equal(self.y, other.y)

    def to_dict(self) -> dict[str, Any]:
        return {"y": self.y.tolist()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> PirateOutput:
        return cls(np.asarray(d["y"], dtype=np.uint8))


@dataclass(frozen=True)
class SchemeParams:
    """Code length and accusation threshold produced by one of the parameter calculators.

    ``meta`` carries provenance flags, e.g. whether the threshold lives on the
    normalized score scale or whether the parameters rest on a heuristic.
    Deterministic-channel parameters use ``gamma = eps2 = 0``.
    """

    ell: int
    eta: float
    gamma: float
    eps1: float
    eps2: float
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if int(self.ell) != self.ell or self.ell < 1:
            raise ValueError(f"code length must be a positive integer, got {self.ell}")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma}")
        for name in ("eps1", "eps2"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        object.__setattr__(self, "ell", int(self.ell))
        object.__setattr__(self, "eta", float(self.eta))

    def to_dict(self) -> dict[str, Any]:
        return {
            "ell": self.ell,
            "eta": self.eta,
            "gamma": self.gamma,
            "eps1": self.eps1,
            "eps2": self.eps2,
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> SchemeParams:
        return cls(
            ell=int(d["ell"]),
            eta=float(d["eta"]),
            gamma=float(d["gamma"]),
            eps1=float(d["eps1"]),
            eps2=float(d["eps2"]),
            meta=dict(d.get("meta", {})),
        )
