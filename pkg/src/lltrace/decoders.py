"""Score functions, score aggregation, normalization and accusation.

Simple score functions have the signature ``score(x, y, p)`` and joint ones
``score(z, y, p)``; all broadcast over numpy arrays, so one call can evaluate a
whole code position vector. ``-inf`` is a legitimate score: it marks an outcome
that is impossible under the guilty hypothesis and is absorbing under
summation, so a single such position exonerates a user (or eliminates a tuple).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.stats import norm

from .model import Code, CollusionChannel, PirateOutput
from .probability import PositionModel, joint_tables, simple_tables

ScoreFunction = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

SIMPLE_DECODERS = ("llr", "interleaving-g", "oosterwijk-h", "emi-m")
JOINT_DECODERS = ("joint-llr", "joint-interleaving")
DECODERS = SIMPLE_DECODERS + JOINT_DECODERS

TUPLE_CAP = 5_000_000
_BLOCK_CELLS = 1 << 22


def _log(a):
    with np.errstate(divide="ignore"):
        return np.log(a)


def _bits(*arrays):
    return np.broadcast_arrays(*(np.asarray(a) for a in arrays))


# --- per-position score functions -------------------------------------------


def simple_llr(x, y, model: PositionModel):
    """``ln(f(x, y | H0) / f(x, y | H1))`` from the model's tables."""
    x, y = _bits(x, y)
    return _log(model.simple_h0[x, y]) - _log(model.simple_h1[x, y])


def interleaving_g(x, y, p, c: int):
    """Closed-form log-likelihood score against the interleaving attack."""
    x, y, p = _bits(x, y, p)
    p = p.astype(float)
    match1 = np.log1p((1.0 - p) / (c * p))
    match0 = np.log1p(p / (c * (1.0 - p)))
    mismatch = _log(1.0 - 1.0 / c) * np.ones_like(p)
    return np.where(x != y, mismatch, np.where(x == 1, match1, match0))


def oosterwijk_h(x, y, p):
    x, y, p = _bits(x, y, p)
    p = p.astype(float)
    return np.where(x != y, -1.0, np.where(x == 1, (1.0 - p) / p, p / (1.0 - p)))


def _emi(ratio, c: int, n: int):
    # only c == n can reach log1p(-1) = -inf
    with np.errstate(divide="ignore"):
        return np.log1p((c / n) * (ratio - 1.0))


def emi_bayes_m(x, y, model: PositionModel, n: int):
    """Bayesian approximation of the empirical mutual information score.

    Mixes the guilty and innocent likelihoods with prior guilt probability
    ``c/n``; stays finite where the log-likelihood score is ``-inf``.
    """
    if n < model.c:
        raise ValueError(f"n = {n} must be at least c = {model.c}")
    x, y = _bits(x, y)
    return _emi(model.simple_h0[x, y] / model.simple_h1[x, y], model.c, n)


def interleaving_m(x, y, p, n: int):
    """Closed form of :func:`emi_bayes_m` for the interleaving attack."""
    x, y, p = _bits(x, y, p)
    p = p.astype(float)
    match1 = np.log1p((1.0 - p) / (n * p))
    match0 = np.log1p(p / (n * (1.0 - p)))
    mismatch = math.log1p(-1.0 / n) * np.ones_like(p)
    return np.where(x != y, mismatch, np.where(x == 1, match1, match0))


def joint_llr(z, y, model: PositionModel):
    """``ln(f(y | z) / f(y | p))``: tuple-tally log-likelihood score."""
    z, y = _bits(z, y)
    return _log(model.joint_h0[z, y]) - _log(model.joint_h1[z, y])


def joint_interleaving(z, y, p, c: int):
    z, y, p = _bits(z, y, p)
    p = p.astype(float)
    frac = z / c
    return np.where(y == 1, _log(frac) - np.log(p), _log(1.0 - frac) - np.log1p(-p))


# --- score-function factories (vectorized over positions) -------------------


def _pick(tables: np.ndarray, a, y):
    a, y = _bits(a, y)
    return np.take_along_axis(
        np.take_along_axis(tables, a[..., None, None].astype(np.intp), axis=-2)[..., 0, :],
        y[..., None].astype(np.intp),
        axis=-1,
    )[..., 0]


def llr_score(channel: CollusionChannel) -> ScoreFunction:
    """Informed simple log-likelihood score for an arbitrary bias per position."""
    theta = channel.array

    def score(x, y, p):
        x, y, p = _bits(x, y, p)
        h0, h1 = simple_tables(theta, p)
        return _log(_pick(h0, x, y)) - _log(_pick(h1, x, y))

    return score


def emi_score(channel: CollusionChannel, n: int) -> ScoreFunction:
    theta, c = channel.array, channel.c
    if n < c:
        raise ValueError(f"n = {n} must be at least c = {c}")

    def score(x, y, p):
        x, y, p = _bits(x, y, p)
        h0, h1 = simple_tables(theta, p)
        return _emi(_pick(h0, x, y) / _pick(h1, x, y), c, n)

    return score


def joint_llr_score(channel: CollusionChannel) -> ScoreFunction:
    theta = channel.array

    def score(z, y, p):
        z, y, p = _bits(z, y, p)
        h0, h1 = joint_tables(theta, p)
        return _log(_pick(h0, z, y)) - _log(_pick(h1, z, y))

    return score


def make_score(
    name: str, c: int, channel: Optional[CollusionChannel] = None, n: Optional[int] = None
) -> ScoreFunction:
    """Build a score function from its CLI name."""
    if name in ("llr", "emi-m", "joint-llr") and channel is None:
        raise ValueError(f"decoder {name!r} is informed and needs the collusion channel")
    if name == "llr":
        return llr_score(channel)
    if name == "interleaving-g":
        return lambda x, y, p: interleaving_g(x, y, p, c)
    if name == "oosterwijk-h":
        return oosterwijk_h
    if name == "emi-m":
        if n is None:
            raise ValueError("decoder 'emi-m' needs the number of users n")
        return emi_score(channel, n)
    if name == "joint-llr":
        return joint_llr_score(channel)
    if name == "joint-interleaving":
        return lambda z, y, p: joint_interleaving(z, y, p, c)
    raise ValueError(f"unknown decoder {name!r}; choose from {', '.join(DECODERS)}")


# --- aggregation -------------------------------------------------------------


def position_values(score: ScoreFunction, y, p, symbols: int) -> np.ndarray:
    """Table ``V[a, i] = score(a, y_i, p_i)`` for ``a = 0..symbols-1``."""
    a = np.arange(symbols)[:, None]
    return np.asarray(score(a, np.asarray(y)[None, :], np.asarray(p)[None, :]), dtype=float)


def user_scores(code: Code, y: PirateOutput, score: ScoreFunction) -> np.ndarray:
    """Total score ``S_j = sum_i score(X[j, i], y_i, p_i)`` for every user."""
    if len(y) != code.ell:
        raise ValueError(f"pirate output has length {len(y)}, code has length {code.ell}")
    if code.ell == 0:
        return np.zeros(code.n)
    values = position_values(score, y.y, code.biases, 2)
    out = np.empty(code.n)
    step = max(1, _BLOCK_CELLS // code.ell)
    for start in range(0, code.n, step):
        block = code.bits[start : start + step].astype(bool)
        out[start : start + step] = np.where(block, values[1], values[0]).sum(axis=1)
    return out


def tuple_score_arrays(
    code: Code, y: PirateOutput, c: int, score: ScoreFunction, cap: int = TUPLE_CAP
) -> tuple[np.ndarray, np.ndarray]:
    """Scores of all size-``c`` tuples as ``(tuples[m, c], scores[m])`` in lexicographic order."""
    if len(y) != code.ell:
        raise ValueError(f"pirate output has length {len(y)}, code has length {code.ell}")
    count = math.comb(code.n, c)
    if count > cap:
        raise ValueError(f"C({code.n}, {c}) = {count} tuples exceeds the enumeration cap {cap}")
    tuples = np.fromiter(
        itertools.chain.from_iterable(itertools.combinations(range(code.n), c)),
        dtype=np.intp,
        count=count * c,
    ).reshape(count, c)
    scores = np.zeros(count)
    if code.ell == 0:
        return tuples, scores
    values = position_values(score, y.y, code.biases, c + 1)
    cols = np.arange(code.ell)
    step = max(1, _BLOCK_CELLS // (code.ell * c))
    for start in range(0, count, step):
        tally = code.bits[tuples[start : start + step]].sum(axis=1, dtype=np.intp)
        scores[start : start + step] = values[tally, cols].sum(axis=1)
    return tuples, scores


def tuple_scores(
    code: Code, y: PirateOutput, c: int, score: ScoreFunction, cap: int = TUPLE_CAP
) -> dict[tuple[int, ...], float]:
    tuples, scores = tuple_score_arrays(code, y, c, score, cap)
    return {tuple(int(j) for j in t): float(s) for t, s in zip(tuples, scores)}


# --- normalization and thresholds -------------------------------------------


def normalize_scores(raw, ell: int, mu1: float, var1: float) -> np.ndarray:
    """Standardize totals with the per-position innocent mean ``mu1`` and variance ``var1``."""
    if not var1 > 0:
        raise ValueError(f"innocent variance must be positive, got {var1}")
    return (np.asarray(raw, dtype=float) - ell * mu1) / math.sqrt(ell * var1)


def sample_innocent_moments(raw, ell: int) -> tuple[float, float]:
    """Per-position ``(mu1, var1)`` estimated from all user totals.

    With ``c << n`` almost every user is innocent, so the sample mean and
    variance of the totals, divided by ``ell``, estimate the innocent moments.
    Users at ``-inf`` are left out.
    """
    raw = np.asarray(raw, dtype=float)
    finite = raw[np.isfinite(raw)]
    if finite.size < 2:
        raise ValueError("need at least two finite scores to estimate moments")
    return float(finite.mean() / ell), float(finite.var(ddof=1) / ell)


def exact_innocent_moments(score: ScoreFunction, channel: CollusionChannel, p) -> tuple[float, float]:
    """Per-position ``(mu1, var1)`` averaged over the given biases, for a known channel.

    ``ell * mu1`` and ``ell * var1`` are then the exact mean and variance of an
    innocent user's total score over codes with these biases.
    """
    p = np.asarray(p, dtype=float)
    _, h1 = simple_tables(channel.array, p)
    s = np.stack([position_values(score, np.full(p.size, yv), p, 2) for yv in (0, 1)], axis=-1)
    s = np.moveaxis(s, 0, 1)  # (ell, x, y)
    live = h1 > 0
    if np.isneginf(s[live]).any():
        raise ValueError("score is -inf on an outcome an innocent user can produce")
    s = np.where(live, s, 0.0)
    mu = (h1 * s).sum(axis=(1, 2))
    var = (h1 * (s - mu[:, None, None]) ** 2).sum(axis=(1, 2))
    return float(mu.mean()), float(var.mean())


def universal_threshold(n: int, eps1: float) -> float:
    """Normalized threshold ``Phi^{-1}(1 - eps1/n)``."""
    tail = eps1 / n
    if not 0.0 < tail < 1.0:
        raise ValueError(f"eps1/n must lie in (0, 1), got {tail}")
    return float(norm.isf(tail))


# --- accusation --------------------------------------------------------------


@dataclass
class ScoreReport:
    raw_scores: Any
    threshold: float
    accused: tuple
    normalized_scores: Optional[np.ndarray] = None
    top_tuple: Optional[tuple[int, ...]] = None
    ambiguous: bool = False
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def accused_users(self) -> frozenset[int]:
        if self.top_tuple is None:
            return frozenset(self.accused)
        return frozenset(j for t in self.accused for j in t)


def _above(scores: np.ndarray, eta: float) -> np.ndarray:
    return (scores >= eta) & ~np.isneginf(scores)


def accuse(
    scores,
    eta: float,
    rule: str = "simple",
    normalized: Optional[Sequence[float]] = None,
    meta: Optional[Mapping[str, Any]] = None,
) -> ScoreReport:
    """Apply a threshold rule.

    ``simple``: accuse every user whose score (normalized score, if given)
    reaches ``eta``. ``joint-top``: ``scores`` maps tuples to scores; accuse
    every tuple reaching ``eta`` and report the best tuple (ties go to the
    lexicographically smallest). ``ambiguous`` is set when more than one tuple
    is accused, since their memberships then disagree.
    """
    meta = dict(meta or {})
    if rule == "simple":
        raw = np.asarray(scores, dtype=float)
        test = raw if normalized is None else np.asarray(normalized, dtype=float)
        accused = tuple(int(j) for j in np.flatnonzero(_above(test, eta)))
        return ScoreReport(
            raw_scores=raw,
            threshold=eta,
            accused=accused,
            normalized_scores=None if normalized is None else test,
            meta=meta,
        )
    if rule == "joint-top":
        tuples = sorted(scores)
        values = np.array([scores[t] for t in tuples], dtype=float)
        accused = tuple(t for t, ok in zip(tuples, _above(values, eta)) if ok)
        top = tuples[int(np.argmax(values))] if tuples else None
        return ScoreReport(
            raw_scores=dict(scores),
            threshold=eta,
            accused=accused,
            top_tuple=top,
            ambiguous=len(accused) > 1,
            meta=meta,
        )
    raise ValueError(f"unknown accusation rule {rule!r}")
