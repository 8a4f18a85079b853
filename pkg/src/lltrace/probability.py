"""Exact per-position probability engine.

For a fixed bias ``p`` and channel ``theta`` the four hypothesis tables are

* ``simple_h0[x, y]``: one colluder's symbol and the pirate output (user guilty),
* ``simple_h1[x, y]``: an innocent user's symbol and the pirate output,
* ``joint_h0[z, y]``: the coalition tally and the pirate output (tuple all guilty),
* ``joint_h1[z, y]``: an all-innocent tuple's tally and the pirate output.

Everything downstream (moment function, mutual information, score moments,
log-likelihood scores, code lengths) is a finite sum over one of these tables.
The table builders are vectorized over ``p`` so the decoders can evaluate a
different bias in every code position without Python loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Union

import numpy as np
from scipy.optimize import bisect, minimize_scalar
from scipy.special import expit, gammaln

from .model import CollusionChannel

SIMPLE = "simple"
JOINT = "joint"
MODES = (SIMPLE, JOINT)

_GRID_POINTS = 512
_GRID_LOGIT = 16.0


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be 'simple' or 'joint', got {mode!r}")
    return mode


def binom_pmf(k: int, p) -> np.ndarray:
    """Binomial(k, p) pmf over ``0..k`` in the last axis, computed in log-space."""
    p = np.asarray(p, dtype=float)[..., None]
    z = np.arange(k + 1)
    log_coef = gammaln(k + 1) - gammaln(z + 1) - gammaln(k - z + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_pmf = log_coef + np.where(z > 0, z * np.log(p), 0.0) + np.where(
            k - z > 0, (k - z) * np.log1p(-p), 0.0
        )
    return np.exp(log_pmf)


def simple_tables(theta, p) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(h0, h1)`` of shape ``p.shape + (2, 2)`` indexed ``[..., x, y]``."""
    theta = np.asarray(theta, dtype=float)
    c = theta.size - 1
    fx = binom_pmf(1, p)
    others = binom_pmf(c - 1, p)
    out1 = np.stack([others @ theta[:c], others @ theta[1:]], axis=-1)
    out0 = np.stack([others @ (1.0 - theta[:c]), others @ (1.0 - theta[1:])], axis=-1)
    h0 = fx[..., :, None] * np.stack([out0, out1], axis=-1)
    tally = binom_pmf(c, p)
    fy = np.stack([tally @ (1.0 - theta), tally @ theta], axis=-1)
    h1 = fx[..., :, None] * fy[..., None, :]
    return h0, h1


def joint_tables(theta, p) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(h0, h1)`` of shape ``p.shape + (c+1, 2)`` indexed ``[..., z, y]``."""
    theta = np.asarray(theta, dtype=float)
    c = theta.size - 1
    tally = binom_pmf(c, p)
    f_y_given_z = np.stack([1.0 - theta, theta], axis=-1)
    h0 = tally[..., :, None] * f_y_given_z
    fy = np.stack([tally @ (1.0 - theta), tally @ theta], axis=-1)
    h1 = tally[..., :, None] * fy[..., None, :]
    return h0, h1


@dataclass(frozen=True, eq=False)
class PositionModel:
    c: int
    p: float
    theta: np.ndarray
    tally_pmf: np.ndarray
    y_marginal: float
    simple_h0: np.ndarray
    simple_h1: np.ndarray
    joint_h0: np.ndarray
    joint_h1: np.ndarray

    def tables(self, mode: str) -> tuple[np.ndarray, np.ndarray]:
        if _check_mode(mode) == SIMPLE:
            return self.simple_h0, self.simple_h1
        return self.joint_h0, self.joint_h1


def position_model(c: int, p: float, channel: CollusionChannel) -> PositionModel:
    if not 0.0 < p < 1.0:
        raise ValueError(f"bias must lie in (0, 1), got {p}")
    if channel.c != c:
        raise ValueError(f"channel is for c = {channel.c}, not {c}")
    theta = channel.array
    s0, s1 = simple_tables(theta, p)
    j0, j1 = joint_tables(theta, p)
    tally = binom_pmf(c, p)
    arrays = [theta, tally, s0, s1, j0, j1]
    for a in arrays:
        a.setflags(write=False)
    return PositionModel(
        c=c,
        p=float(p),
        theta=theta,
        tally_pmf=tally,
        y_marginal=float(tally @ theta),
        simple_h0=s0,
        simple_h1=s1,
        joint_h0=j0,
        joint_h1=j1,
    )


_SERIES_CUTOFF = 1e-3


def _moment_gap(f0: np.ndarray, f1: np.ndarray, t: float) -> float:
    """``M(t) - 1`` for ``0 < t <= 1``, summed as non-positive per-cell terms.

    Each cell contributes ``f0^t f1^(1-t) - t f0 - (1-t) f1 <= 0`` (weighted
    AM-GM); the terms add up to ``M(t) - 1`` because both tables sum to one.
    With ``x = ln(f1/f0)`` and ``a = 1 - t`` a live cell is
    ``f0 * (expm1(a x) - a expm1(x))``, evaluated by its Taylor series for
    small ``|x|`` where the two exponentials would cancel.
    """
    a = 1.0 - t
    live = f0 > 0
    g0, g1 = f0[live], f1[live]
    with np.errstate(divide="ignore"):
        x = np.log(g1) - np.log(g0)
    small = np.abs(x) < _SERIES_CUTOFF
    xs = np.where(small, x, 0.0)
    series = xs * xs * ((a * a - a) / 2 + xs * ((a**3 - a) / 6 + xs * (a**4 - a) / 24))
    with np.errstate(invalid="ignore"):
        direct = np.expm1(a * x) - a * np.expm1(x)
    terms = np.minimum(g0 * np.where(small, series, direct), 0.0)
    return float(terms.sum() - a * f1[~live].sum())


def moment_fn(model: PositionModel, t: float, mode: str = SIMPLE) -> float:
    """``M(t) = sum f_H0^t f_H1^(1-t)`` over the outcome table of ``mode``.

    ``M(0)`` uses the convention ``0^0 = 1`` and equals ``sum f_H1``. For
    ``t > 0`` the value is ``1 + gap`` with a non-positive gap, so ``M <= 1``
    holds exactly in floating point as it does mathematically.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    f0, f1 = (a.ravel() for a in model.tables(mode))
    if t == 0.0:
        return float(f1.sum())
    return 1.0 + _moment_gap(f0, f1, t)


def log_moment_fn(model: PositionModel, t: float, mode: str = SIMPLE) -> float:
    """``ln M(t)``, negative whenever the gap is representable even if ``M`` rounds to 1."""
    if not 0.0 < t <= 1.0:
        return float(np.log(moment_fn(model, t, mode)))
    f0, f1 = (a.ravel() for a in model.tables(mode))
    return float(np.log1p(_moment_gap(f0, f1, t)))


def _kl_bits(f0: np.ndarray, f1: np.ndarray) -> np.ndarray:
    """KL(f0 || f1) in bits over the trailing table axes; 0 log 0 terms vanish."""
    # supp(f0) is inside supp(f1) by construction; f1 == 0 < f0 only after underflow
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where((f0 > 0) & (f1 > 0), f0 * (np.log2(f0) - np.log2(f1)), 0.0)
    return terms.sum(axis=(-2, -1))


def mutual_info_simple(model: PositionModel) -> float:
    """``I(X_1; Y | P = p)`` in bits."""
    return float(_kl_bits(model.simple_h0, model.simple_h1))


def mutual_info_joint(model: PositionModel) -> float:
    """``I(Z; Y | P = p)`` in bits (divide by ``c`` for the per-user rate)."""
    return float(_kl_bits(model.joint_h0, model.joint_h1))


def mutual_info_curve(channel: CollusionChannel, p, mode: str = SIMPLE) -> np.ndarray:
    """Mutual information (bits) for every bias in ``p``, vectorized."""
    builder = simple_tables if _check_mode(mode) == SIMPLE else joint_tables
    return _kl_bits(*builder(channel.array, np.asarray(p, dtype=float)))


def bias_grid(points: int = _GRID_POINTS) -> np.ndarray:
    """Grid on (0, 1) uniform in logit, dense near both endpoints."""
    return expit(np.linspace(-_GRID_LOGIT, _GRID_LOGIT, points))


def optimal_bias(c: int, channel: CollusionChannel, mode: str = SIMPLE) -> float:
    """Bias maximizing the mode's mutual information.

    A logit-spaced grid locates the best bracket and a bounded Brent/golden
    search refines it. For 0/1-symmetric channels the two mirror optima are
    equivalent; the one in ``(0, 1/2]`` is returned.
    """
    _check_mode(mode)
    if channel.c != c:
        raise ValueError(f"channel is for c = {channel.c}, not {c}")
    grid = bias_grid()
    values = mutual_info_curve(channel, grid, mode)
    k = int(np.argmax(values))
    lo = grid[k - 1] if k > 0 else grid[0] / 2
    hi = grid[k + 1] if k + 1 < grid.size else (1.0 + grid[-1]) / 2

    def objective(p):
        return -float(mutual_info_curve(channel, p, mode))

    res = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    p = float(res.x) if -res.fun >= values[k] else float(grid[k])
    if channel.symmetric:
        # the optimizer cannot resolve a flat maximum at 1/2 beyond ~1e-8
        if -objective(0.5) >= -objective(p) * (1.0 - 1e-10):
            return 0.5
        if p > 0.5:
            p = 1.0 - p
    return p


def deterministic_balance_bias(channel: CollusionChannel) -> float:
    """Bias ``p`` at which a deterministic channel outputs a 1 with probability exactly 1/2."""
    theta = channel.array
    if not channel.deterministic:
        raise ValueError("channel is not deterministic")
    if theta.min() == theta.max():
        raise ValueError("constant channel has no balance point")

    def excess(p):
        return float(binom_pmf(channel.c, p) @ theta) - 0.5

    lo, hi = 1e-12, 1.0 - 1e-12
    if np.all(np.diff(theta) >= 0) or np.all(np.diff(theta) <= 0):
        if excess(lo) * excess(hi) > 0:
            raise ValueError("no balance point in (0, 1)")
        return float(bisect(excess, lo, hi, xtol=1e-17, rtol=4 * np.finfo(float).eps))

    grid = np.concatenate([[lo], bias_grid(), [hi]])
    signs = np.sign([excess(p) for p in grid])
    roots = [
        float(bisect(excess, grid[i], grid[i + 1], xtol=1e-17, rtol=4 * np.finfo(float).eps))
        for i in range(grid.size - 1)
        if signs[i] * signs[i + 1] < 0
    ]
    roots += [float(grid[i]) for i in range(grid.size) if signs[i] == 0]
    if not roots:
        raise ValueError("no balance point in (0, 1)")
    target = optimal_bias(channel.c, channel, JOINT)
    return min(roots, key=lambda r: abs(r - target))


class ScoreMoments(NamedTuple):
    mu0: float
    mu1: float
    var0: float
    var1: float


ScoreFn = Union[Callable[[np.ndarray, np.ndarray], np.ndarray], np.ndarray]


def _score_table(model: PositionModel, score: ScoreFn, mode: str) -> np.ndarray:
    f0, _ = model.tables(mode)
    if callable(score):
        a, y = np.meshgrid(np.arange(f0.shape[0]), np.arange(2), indexing="ij")
        table = np.broadcast_to(np.asarray(score(a, y), dtype=float), f0.shape)
    else:
        table = np.asarray(score, dtype=float)
        if table.shape != f0.shape:
            raise ValueError(f"score table has shape {table.shape}, expected {f0.shape}")
    return table


def _moments(f: np.ndarray, s: np.ndarray) -> tuple[float, float]:
    live = f > 0
    if np.isneginf(s[live]).any():
        return -np.inf, np.inf
    mu = float(np.sum(f[live] * s[live]))
    var = float(np.sum(f[live] * (s[live] - mu) ** 2))
    return mu, var


def score_moments(model: PositionModel, score: ScoreFn, mode: str = SIMPLE) -> ScoreMoments:
    """Exact mean and variance of a per-position score under both hypotheses.

    ``score`` is either a callable ``score(a, y)`` evaluated on the outcome grid
    (``a`` is the user's symbol in simple mode, the tally in joint mode) or a
    precomputed table. A score of ``-inf`` on an outcome with positive
    probability gives mean ``-inf`` and infinite variance.
    """
    table = _score_table(model, score, mode)
    f0, f1 = model.tables(mode)
    mu0, var0 = _moments(f0, table)
    mu1, var1 = _moments(f1, table)
    return ScoreMoments(mu0, mu1, var0, var1)


class KLIndicator(NamedTuple):
    value: float
    indicator: float
    variance_term: bool


def kl_indicator(mu0: float, mu1: float, var0: float, var1: float) -> KLIndicator:
    """Gaussian divergence between guilty and innocent score distributions.

    ``indicator`` is the mean-separation term ``(mu0 - mu1)^2 / var1``;
    ``value`` adds the variance-mismatch term unless ``var0 <= 0``, in which
    case ``variance_term`` is False and ``value == indicator``.
    """
    if not var1 > 0:
        raise ValueError(f"innocent variance must be positive, got {var1}")
    indicator = (mu0 - mu1) ** 2 / var1
    if var0 <= 0:
        return KLIndicator(indicator, indicator, False)
    ratio = var0 / var1
    return KLIndicator(indicator + 0.5 * (ratio - 1.0 - np.log(ratio)), indicator, True)
