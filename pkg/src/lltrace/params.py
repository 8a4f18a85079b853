"""Scheme-parameter calculators: code length ``ell`` and threshold ``eta``.

The provable designs bound the false-positive and false-negative probabilities
with Markov's inequality on ``exp(alpha * S)`` and ``exp(-beta * S)``; with
``L = ln(#innocent candidates / eps1)`` and ``gamma = ln(1/eps2) / L`` the
choice ``alpha = 1 - sqrt(gamma)``, ``beta = sqrt(gamma)`` gives

    ell = sqrt(gamma) (1 + sqrt(gamma) - gamma) / (-ln M(1 - sqrt(gamma))) * L
    eta = (1 - gamma) * L

``_markov_design`` keeps ``alpha``/``beta`` as parameters for experimentation.
"""

from __future__ import annotations

import math
from typing import Optional

from .channels import Attack, AttackName, build_attack, parse_attack
from .model import SchemeParams
from .probability import JOINT, SIMPLE, PositionModel, log_moment_fn, position_model

LN2 = math.log(2.0)


def _check_eps(eps1: float, eps2: float) -> None:
    for name, v in (("eps1", eps1), ("eps2", eps2)):
        if not 0.0 < v < 1.0:
            raise ValueError(f"{name} must lie in (0, 1), got {v}")


def _ceil(x: float) -> int:
    # absorb rounding noise so exact integers (log2(4) = 2) are not bumped up
    return max(1, math.ceil(x - 1e-9))


def _markov_design(
    model: PositionModel,
    mode: str,
    log_candidates: float,
    eps1: float,
    eps2: float,
    alpha: Optional[float] = None,
    beta: Optional[float] = None,
) -> tuple[float, float, float]:
    """Return the real-valued ``(ell, eta, gamma)`` before ceiling."""
    big_l = log_candidates - math.log(eps1)
    gamma = math.log(1.0 / eps2) / big_l
    if not gamma < 1.0:
        raise ValueError(f"gamma = {gamma:.6g} >= 1: error budgets are incompatible with n")
    root = math.sqrt(gamma)
    alpha = 1.0 - root if alpha is None else alpha
    beta = root if beta is None else beta
    if not (0.0 < alpha < 1.0 and 0.0 < beta < 1.0):
        raise ValueError("alpha and beta must lie in (0, 1)")
    # innocent bound: M(alpha)^ell e^{-alpha eta} = eps1 / N; guilty: M(1-beta)^ell e^{beta eta} = eps2
    log_m_a = log_moment_fn(model, alpha, mode)
    log_m_b = log_moment_fn(model, 1.0 - beta, mode)
    if not (log_m_a < 0.0 and log_m_b < 0.0):
        raise ValueError("M(t) >= 1: the channel does not distinguish guilty from innocent")
    # solve the two linear equations in (ell, eta)
    a1, b1, r1 = log_m_a, -alpha, -big_l
    a2, b2, r2 = log_m_b, beta, -gamma * big_l
    det = a1 * b2 - a2 * b1
    ell = (r1 * b2 - r2 * b1) / det
    eta = (a1 * r2 - a2 * r1) / det
    return ell, eta, gamma


def _params(model, mode, log_candidates, eps1, eps2, meta) -> SchemeParams:
    _check_eps(eps1, eps2)
    ell, eta, gamma = _markov_design(model, mode, log_candidates, eps1, eps2)
    return SchemeParams(ell=_ceil(ell), eta=eta, gamma=gamma, eps1=eps1, eps2=eps2, meta=meta)


def simple_params(
    c: int, n: int, eps1: float, eps2: float, model: PositionModel, catch_all: bool = False
) -> SchemeParams:
    """Provable simple-decoder design: no innocent accused w.p. ``>= 1 - eps1``, some colluder caught w.p. ``>= 1 - eps2``.

    With ``catch_all=True`` the budget ``eps2`` is split over the ``c``
    colluders (the catch-all heuristic); ``meta['heuristic']`` records that the
    resulting guarantee is conjectural.
    """
    if model.c != c:
        raise ValueError(f"model is for c = {model.c}, not {c}")
    meta = {"rule": "simple", "p": model.p}
    if catch_all:
        catch_all_gamma(c, n, eps1, eps2)
        meta["heuristic"] = "catch-all conjecture"
        params = _params(model, SIMPLE, math.log(n), eps1, eps2 / c, meta)
        return SchemeParams(params.ell, params.eta, params.gamma, eps1, eps2, meta)
    return _params(model, SIMPLE, math.log(n), eps1, eps2, meta)


def joint_params(c: int, n: int, eps1: float, eps2: float, model: PositionModel) -> SchemeParams:
    """Provable joint-decoder design over all size-``c`` tuples (``n^c`` candidates)."""
    if model.c != c:
        raise ValueError(f"model is for c = {model.c}, not {c}")
    return _params(model, JOINT, c * math.log(n), eps1, eps2, {"rule": "joint", "p": model.p})


def deterministic_joint_params(c: int, n: int, eps1: float) -> SchemeParams:
    """Design for a deterministic channel at its balance bias.

    Every position halves the chance that an all-innocent tuple survives, while
    the all-guilty tuple always scores ``ell * ln 2``.
    """
    if not 0.0 < eps1 < 1.0:
        raise ValueError(f"eps1 must lie in (0, 1), got {eps1}")
    log2_candidates = c * math.log2(n) - math.log2(eps1)
    return SchemeParams(
        ell=_ceil(log2_candidates),
        eta=log2_candidates * LN2,
        gamma=0.0,
        eps1=eps1,
        eps2=0.0,
        meta={"rule": "joint", "deterministic": True},
    )


def catch_all_gamma(c: int, n: int, eps1: float, eps2: float) -> float:
    """``gamma' = ln(c/eps2) / ln(n/eps1)``; heuristic, not a proven bound."""
    gamma = math.log(c / eps2) / math.log(n / eps1)
    if gamma >= 1.0:
        raise ValueError(f"gamma' = {gamma:.6g} >= 1: error budgets are incompatible with n")
    return gamma


def binary_entropy(r: float) -> float:
    if r in (0.0, 1.0):
        return 0.0
    return -(r * math.log2(r) + (1.0 - r) * math.log2(1.0 - r))


def asymptotic_length(attack: Attack | AttackName | str, c: int, n: float, mode: str = SIMPLE, r=None) -> float:
    """Leading-order code length for large ``c`` and ``n``; correction terms are left out."""
    if not isinstance(attack, Attack):
        attack = parse_attack(attack.value if isinstance(attack, AttackName) else attack, r)
    name, r = attack.name, attack.r
    ln_n = math.log(n)
    if mode == SIMPLE:
        table = {
            AttackName.INTERLEAVING: lambda: 2 * c**2 * ln_n,
            AttackName.ALL1: lambda: c * ln_n / LN2**2,
            AttackName.MINORITY: lambda: c * ln_n / LN2**2,
            AttackName.MAJORITY: lambda: math.pi * c * ln_n,
            AttackName.COINFLIP: lambda: 4 * c * ln_n / LN2**2,
            AttackName.ADDITIVE: lambda: c * ln_n / (LN2**2 - r * LN2),
            AttackName.DILUTION: lambda: c * ln_n / LN2**2,
        }
    elif mode == JOINT:
        log2_n = ln_n / LN2
        table = {
            AttackName.INTERLEAVING: lambda: 2 * c**2 * ln_n,
            AttackName.ALL1: lambda: c * log2_n,
            AttackName.MAJORITY: lambda: c * log2_n,
            AttackName.MINORITY: lambda: c * log2_n,
            AttackName.COINFLIP: lambda: c * ln_n / math.log(1.25),
            AttackName.ADDITIVE: lambda: c * log2_n / (1.0 - 0.5 * binary_entropy(r)),
            AttackName.DILUTION: lambda: c * log2_n / (1.0 - 0.5 * LN2 * binary_entropy(r)),
        }
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if name not in table:  # pragma: no cover - both tables are exhaustive
        raise ValueError(f"no asymptotic length for {attack} in {mode} mode")
    return float(table[name]())


def universal_design(c: int, n: int, eps1: float, eps2: float) -> SchemeParams:
    """Code length for the universal interleaving decoder, with a normalized threshold.

    ``ell`` is the provable interleaving-attack length at ``p = 1/2``, on the
    conjecture that interleaving is the worst case for this decoder. ``eta`` is
    the normalized-score threshold ``Phi^{-1}(1 - eps1/n)``: compare it against
    scores standardized with the innocent mean and variance, not raw scores.
    """
    from .decoders import universal_threshold

    model = position_model(c, 0.5, build_attack(AttackName.INTERLEAVING, c))
    params = simple_params(c, n, eps1, eps2, model)
    meta = {
        "rule": "simple",
        "decoder": "interleaving-g",
        "threshold": "normalized",
        "conjecture": "interleaving is the worst-case attack",
        "design_bias": 0.5,
        "encoder": "arcsine",
        "raw_eta": params.eta,
    }
    return SchemeParams(
        ell=params.ell,
        eta=universal_threshold(n, eps1),
        gamma=params.gamma,
        eps1=eps1,
        eps2=eps2,
        meta=meta,
    )


__all__ = [
    "asymptotic_length",
    "binary_entropy",
    "catch_all_gamma",
    "deterministic_joint_params",
    "joint_params",
    "simple_params",
    "universal_design",
]
