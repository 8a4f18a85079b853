"""Log-likelihood decoders for collusion-resistant fingerprinting and noisy group testing."""

from .channels import Attack, AttackName, apply_channel, build_attack, parse_attack
from .decoders import accuse, make_score, tuple_scores, user_scores
from .encoder import generate_code, sample_biases
from .model import (
    Arcsine,
    Code,
    CollusionChannel,
    FixedP,
    PirateOutput,
    SchemeParams,
    parse_bias,
    validate_channel,
)
from .params import (
    asymptotic_length,
    deterministic_joint_params,
    joint_params,
    simple_params,
    universal_design,
)
from .probability import (
    deterministic_balance_bias,
    moment_fn,
    mutual_info_curve,
    optimal_bias,
    position_model,
)
from .sim import ExperimentConfig, estimate_errors, run_trial, score_histogram

__version__ = "0.1.0"

__all__ = [
    "Arcsine",
    "Attack",
    "AttackName",
    "Code",
    "CollusionChannel",
    "ExperimentConfig",
    "FixedP",
    "PirateOutput",
    "SchemeParams",
    "accuse",
    "apply_channel",
    "asymptotic_length",
    "build_attack",
    "deterministic_balance_bias",
    "deterministic_joint_params",
    "estimate_errors",
    "generate_code",
    "joint_params",
    "make_score",
    "moment_fn",
    "mutual_info_curve",
    "optimal_bias",
    "parse_attack",
    "parse_bias",
    "position_model",
    "run_trial",
    "sample_biases",
    "score_histogram",
    "simple_params",
    "tuple_scores",
    "universal_design",
    "user_scores",
    "validate_channel",
]
