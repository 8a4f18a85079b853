"""Named fingerprinting attacks and group-testing noise models, and how to apply them."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Iterable, Optional

import numpy as np

from .model import Code, CollusionChannel, PirateOutput


class AttackName(str, enum.Enum):
    INTERLEAVING = "interleaving"
    ALL1 = "all1"
    MAJORITY = "majority"
    MINORITY = "minority"
    COINFLIP = "coinflip"
    ADDITIVE = "additive"
    DILUTION = "dilution"


NOISY = (AttackName.ADDITIVE, AttackName.DILUTION)
FINGERPRINTING_ATTACKS = (
    AttackName.INTERLEAVING,
    AttackName.ALL1,
    AttackName.MAJORITY,
    AttackName.MINORITY,
    AttackName.COINFLIP,
)


@dataclass(frozen=True)
class Attack:
    """An attack name plus the noise rate ``r`` for the noisy group-testing models."""

    name: AttackName
    r: Optional[float] = None

    def __post_init__(self):
        name = AttackName(self.name)
        object.__setattr__(self, "name", name)
        if name in NOISY:
            if self.r is None or not 0.0 < self.r < 1.0:
                raise ValueError(f"{name.value} needs a noise rate r in (0, 1), got {self.r}")
        elif self.r is not None:
            raise ValueError(f"{name.value} takes no noise rate")

    def __str__(self) -> str:
        return self.name.value if self.r is None else f"{self.name.value}:{self.r:g}"

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name.value, "r": self.r}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Attack:
        return cls(AttackName(d["name"]), d.get("r"))


def parse_attack(text: str, r: Optional[float] = None) -> Attack:
    """Parse ``interleaving``, ``additive:0.1`` etc.; ``r`` fills in a missing noise rate."""
    name, _, arg = text.strip().lower().partition(":")
    attack_name = AttackName(name)
    if arg:
        r = float(arg)
    return Attack(attack_name, r if attack_name in NOISY else None)


def build_attack(attack: Attack | AttackName | str, c: int) -> CollusionChannel:
    """Return the collusion channel of a named attack for a coalition of size ``c``.

    Majority and minority voting are not defined by the case split at an exact
    tie ``z = c/2``; there the coalition flips a fair coin.
    """
    if not isinstance(attack, Attack):
        attack = parse_attack(attack.value if isinstance(attack, AttackName) else attack)
    if c < 1:
        raise ValueError(f"coalition size must be at least 1, got {c}")
    z = np.arange(c + 1)
    name, r = attack.name, attack.r
    if name is AttackName.INTERLEAVING:
        theta = z / c
    elif name is AttackName.ALL1:
        theta = (z > 0).astype(float)
    elif name is AttackName.MAJORITY:
        theta = np.where(2 * z > c, 1.0, np.where(2 * z == c, 0.5, 0.0))
    elif name is AttackName.MINORITY:
        theta = np.where(2 * z < c, 1.0, np.where(2 * z == c, 0.5, 0.0))
        theta[0], theta[c] = 0.0, 1.0
    elif name is AttackName.COINFLIP:
        theta = np.full(c + 1, 0.5)
        theta[0], theta[c] = 0.0, 1.0
    elif name is AttackName.ADDITIVE:
        theta = np.where(z > 0, 1.0, r)
    elif name is AttackName.DILUTION:
        theta = 1.0 - np.power(r, z)
        theta[0] = 0.0
    else:  # pragma: no cover - enum is exhaustive
        raise ValueError(f"unknown attack {attack}")
    return CollusionChannel(c=c, theta=tuple(theta))


def apply_channel(
    code: Code,
    coalition: Iterable[int],
    channel: CollusionChannel,
    rng: np.random.Generator,
) -> PirateOutput:
    coalition = np.asarray(list(coalition), dtype=np.intp)
    if coalition.size != channel.c:
        raise ValueError(f"coalition has {coalition.size} members, channel expects {channel.c}")
    if np.unique(coalition).size != coalition.size:
        raise ValueError("coalition members must be distinct")
    if coalition.size and (coalition.min() < 0 or coalition.max() >= code.n):
        raise ValueError("coalition index out of range for this code")
    tally = code.bits[coalition].sum(axis=0, dtype=np.intp)
    # u in [0, 1): theta = 0 never fires and theta = 1 always fires
    y = rng.random(code.ell) < channel.array[tally]
    return PirateOutput(y.astype(np.uint8))
