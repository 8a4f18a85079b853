"""Monte Carlo harness: encode, collude, decode, accuse; aggregate error rates.

Trial ``i`` of an experiment with master seed ``s`` draws all of its randomness
from ``SeedSequence(s, spawn_key=(i,))``, so results do not depend on the
order in which trials run or on how many worker processes share them.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Optional, Union

import numpy as np
from scipy.stats import kurtosis, norm, skew

from . import decoders
from .channels import Attack, apply_channel, build_attack
from .encoder import generate_code, sample_biases
from .model import (
    BiasDistribution,
    Code,
    CollusionChannel,
    SchemeParams,
    bias_from_dict,
)
from .probability import JOINT, SIMPLE

_REUSED_CODE_KEY = 2**63 - 1


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: who colludes how, which code and decoder, how many trials.

    ``threshold`` says whether ``eta`` applies to raw totals or to scores
    standardized with innocent moments; ``normalization`` picks how those
    moments are obtained (``sample``: from all user totals of the trial;
    ``exact``: from the known channel).
    """

    n: int
    c: int
    attack: Union[Attack, CollusionChannel]
    bias: BiasDistribution
    decoder: str
    ell: int
    eta: float
    mode: str = SIMPLE
    trials: int = 1
    seed: int = 0
    threshold: str = "raw"
    normalization: str = "sample"
    reuse_code: bool = False

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not 1 <= self.c <= self.n:
            raise ValueError(f"need 1 <= c <= n, got c={self.c}, n={self.n}")
        if self.ell < 1:
            raise ValueError(f"code length must be positive, got {self.ell}")
        if self.mode == SIMPLE:
            if self.decoder not in decoders.SIMPLE_DECODERS:
                raise ValueError(f"decoder {self.decoder!r} is not a simple decoder")
        elif self.mode == JOINT:
            if self.decoder not in decoders.JOINT_DECODERS:
                raise ValueError(f"decoder {self.decoder!r} is not a joint decoder")
            if self.threshold != "raw":
                raise ValueError("joint decoding uses raw thresholds only")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.threshold not in ("raw", "normalized"):
            raise ValueError(f"threshold must be 'raw' or 'normalized', got {self.threshold!r}")
        if self.normalization not in ("sample", "exact"):
            raise ValueError(f"normalization must be 'sample' or 'exact', got {self.normalization!r}")
        if isinstance(self.attack, CollusionChannel) and self.attack.c != self.c:
            raise ValueError("explicit channel has the wrong coalition size")

    @property
    def channel(self) -> CollusionChannel:
        if isinstance(self.attack, CollusionChannel):
            return self.attack
        return build_attack(self.attack, self.c)

    @classmethod
    def from_params(cls, params: SchemeParams, **kwargs) -> ExperimentConfig:
        threshold = "normalized" if params.meta.get("threshold") == "normalized" else "raw"
        kwargs.setdefault("threshold", threshold)
        return cls(ell=params.ell, eta=params.eta, **kwargs)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["attack"] = (
            {"channel": self.attack.to_dict()}
            if isinstance(self.attack, CollusionChannel)
            else self.attack.to_dict()
        )
        d["bias"] = self.bias.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> ExperimentConfig:
        d = dict(d)
        attack = d["attack"]
        d["attack"] = (
            CollusionChannel.from_dict(attack["channel"]) if "channel" in attack else Attack.from_dict(attack)
        )
        d["bias"] = bias_from_dict(d["bias"])
        return cls(**d)


@dataclass(eq=False)
class TrialOutcome:
    coalition: tuple[int, ...]
    accused: tuple[int, ...]
    fp: bool
    caught_one: bool
    caught_all: bool
    guilty_scores: tuple[float, ...]
    innocent_max: float
    innocent_mean: float
    all_guilty_score: Optional[float] = None
    innocent_tuple_accused: Optional[bool] = None
    mixed_tuple_accused: Optional[bool] = None
    exact_success: Optional[bool] = None
    ambiguous: Optional[bool] = None
    top_tuple: Optional[tuple[int, ...]] = None
    innocent_normalized: Optional[np.ndarray] = field(default=None, repr=False)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("innocent_normalized")
        return d


def trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _normalized(config: ExperimentConfig, raw, code: Code, score) -> np.ndarray:
    if config.normalization == "exact":
        mu1, var1 = decoders.exact_innocent_moments(score, config.channel, code.biases)
    else:
        mu1, var1 = decoders.sample_innocent_moments(raw, code.ell)
    return decoders.normalize_scores(raw, code.ell, mu1, var1)


def run_trial(
    config: ExperimentConfig,
    rng: np.random.Generator,
    code: Optional[Code] = None,
    keep_scores: bool = False,
) -> TrialOutcome:
    """Play one round of the game and score the distributor's accusation."""
    n, c = config.n, config.c
    channel = config.channel
    coalition = np.sort(rng.choice(n, size=c, replace=False))
    if code is None:
        code = generate_code(n, sample_biases(config.bias, config.ell, rng), rng)
    y = apply_channel(code, coalition, channel, rng)
    score = decoders.make_score(config.decoder, c, channel, n)
    guilty = np.zeros(n, dtype=bool)
    guilty[coalition] = True

    if config.mode == SIMPLE:
        raw = decoders.user_scores(code, y, score)
        normalized = None
        if config.threshold == "normalized" or keep_scores:
            normalized = _normalized(config, raw, code, score)
        report = decoders.accuse(
            raw, config.eta, normalized=normalized if config.threshold == "normalized" else None
        )
        hit = np.zeros(n, dtype=bool)
        hit[list(report.accused)] = True
        innocent = raw[~guilty]
        return TrialOutcome(
            coalition=tuple(int(j) for j in coalition),
            accused=report.accused,
            fp=bool((hit & ~guilty).any()),
            caught_one=bool((hit & guilty).any()),
            caught_all=bool(hit[guilty].all()),
            guilty_scores=tuple(float(s) for s in raw[guilty]),
            innocent_max=float(innocent.max()) if innocent.size else -math.inf,
            innocent_mean=float(innocent.mean()) if innocent.size else math.nan,
            innocent_normalized=normalized[~guilty] if keep_scores else None,
        )

    tuples, scores = decoders.tuple_score_arrays(code, y, c, score)
    above = (scores >= config.eta) & ~np.isneginf(scores)
    members_guilty = guilty[tuples]
    all_guilty = members_guilty.all(axis=1)
    all_innocent = ~members_guilty.any(axis=1)
    accused_tuples = tuples[above]
    accused_users = tuple(int(j) for j in np.unique(accused_tuples))
    g_idx = int(np.flatnonzero(all_guilty)[0])
    innocent_scores = scores[all_innocent]
    return TrialOutcome(
        coalition=tuple(int(j) for j in coalition),
        accused=accused_users,
        fp=bool((above & all_innocent).any()),
        caught_one=bool((above & ~all_innocent).any()),
        caught_all=bool(above[g_idx]),
        guilty_scores=(float(scores[g_idx]),),
        innocent_max=float(innocent_scores.max()) if innocent_scores.size else -math.inf,
        innocent_mean=float(innocent_scores.mean()) if innocent_scores.size else math.nan,
        all_guilty_score=float(scores[g_idx]),
        innocent_tuple_accused=bool((above & all_innocent).any()),
        mixed_tuple_accused=bool((above & ~all_innocent & ~all_guilty).any()),
        exact_success=bool(above[g_idx] and above.sum() == 1),
        ambiguous=bool(above.sum() > 1),
        top_tuple=tuple(int(j) for j in tuples[int(np.argmax(scores))]),
    )


# --- error estimation --------------------------------------------------------


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("need at least one trial")
    z = norm.isf((1.0 - confidence) / 2.0)
    phat = successes / trials
    denom = 1.0 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


_COUNTED = ("fp", "fn_catch_one", "fn_catch_all", "exact_success", "mixed_tuple_accused", "ambiguous")


@dataclass
class ErrorEstimate:
    trials: int
    counts: dict[str, int]
    rates: dict[str, float]
    intervals: dict[str, tuple[float, float]]

    @property
    def fp_rate(self) -> float:
        return self.rates["fp"]

    @property
    def fn_catch_one(self) -> float:
        return self.rates["fn_catch_one"]

    @property
    def fn_catch_all(self) -> float:
        return self.rates["fn_catch_all"]

    def upper(self, key: str) -> float:
        return self.intervals[key][1]

    def to_dict(self) -> dict[str, Any]:
        return {
            "trials": self.trials,
            "fp_rate": self.fp_rate,
            "fn_catch_one": self.fn_catch_one,
            "fn_catch_all": self.fn_catch_all,
            "counts": dict(self.counts),
            "rates": dict(self.rates),
            "intervals": {k: list(v) for k, v in self.intervals.items()},
        }


def _tally(outcome: TrialOutcome) -> dict[str, int]:
    counts = {
        "fp": int(outcome.fp),
        "fn_catch_one": int(not outcome.caught_one),
        "fn_catch_all": int(not outcome.caught_all),
    }
    for key in ("exact_success", "mixed_tuple_accused", "ambiguous"):
        value = getattr(outcome, key)
        if value is not None:
            counts[key] = int(value)
    return counts


def _reused_code(config: ExperimentConfig) -> Optional[Code]:
    if not config.reuse_code:
        return None
    rng = trial_rng(config.seed, _REUSED_CODE_KEY)
    return generate_code(config.n, sample_biases(config.bias, config.ell, rng), rng)


def _count_range(config: ExperimentConfig, start: int, stop: int) -> dict[str, int]:
    code = _reused_code(config)
    total: dict[str, int] = {}
    for i in range(start, stop):
        for key, v in _tally(run_trial(config, trial_rng(config.seed, i), code)).items():
            total[key] = total.get(key, 0) + v
    return total


def estimate_errors(config: ExperimentConfig, workers: int = 1) -> ErrorEstimate:
    """Aggregate ``config.trials`` independent trials into error rates with Wilson 95% intervals.

    ``fp`` is "some innocent user (joint: all-innocent tuple) accused",
    ``fn_catch_one`` "no colluder accused" and ``fn_catch_all`` "some colluder
    missed" (joint: the all-guilty tuple is below threshold).
    """
    if workers <= 1:
        counts = _count_range(config, 0, config.trials)
    else:
        bounds = np.linspace(0, config.trials, workers + 1).astype(int)
        counts = {}
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_count_range, [config] * workers, bounds[:-1], bounds[1:])
            for part in parts:
                for key, v in part.items():
                    counts[key] = counts.get(key, 0) + v
    counts = {k: counts[k] for k in _COUNTED if k in counts}
    rates = {k: v / config.trials for k, v in counts.items()}
    intervals = {k: wilson_interval(v, config.trials) for k, v in counts.items()}
    return ErrorEstimate(trials=config.trials, counts=counts, rates=rates, intervals=intervals)


# --- score distributions -----------------------------------------------------


@dataclass
class Histogram:
    centers: np.ndarray
    density: np.ndarray
    reference: np.ndarray
    samples: int
    skewness: float
    excess_kurtosis: float


def innocent_normalized_scores(config: ExperimentConfig) -> np.ndarray:
    """Normalized innocent totals pooled over all trials of a simple-mode experiment."""
    if config.mode != SIMPLE:
        raise ValueError("score histograms are defined for simple decoding only")
    code = _reused_code(config)
    parts = [
        run_trial(config, trial_rng(config.seed, i), code, keep_scores=True).innocent_normalized
        for i in range(config.trials)
    ]
    return np.concatenate(parts)


def histogram_density(values, bins: int, value_range=None) -> tuple[np.ndarray, np.ndarray]:
    density, edges = np.histogram(np.asarray(values, dtype=float), bins=bins, range=value_range, density=True)
    return 0.5 * (edges[:-1] + edges[1:]), density


def score_histogram(config: ExperimentConfig, bins: int, value_range=(-6.0, 6.0)) -> Histogram:
    """Binned density of normalized innocent scores with a standard normal overlay."""
    values = innocent_normalized_scores(config)
    centers, density = histogram_density(values, bins, value_range)
    return Histogram(
        centers=centers,
        density=density,
        reference=norm.pdf(centers),
        samples=values.size,
        skewness=float(skew(values)),
        excess_kurtosis=float(kurtosis(values, fisher=True)),
    )


__all__ = [
    "ErrorEstimate",
    "ExperimentConfig",
    "Histogram",
    "TrialOutcome",
    "estimate_errors",
    "histogram_density",
    "innocent_normalized_scores",
    "run_trial",
    "score_histogram",
    "trial_rng",
    "wilson_interval",
]
