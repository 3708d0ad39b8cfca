"""Tabular laboratory for control-endogenous latent-state discovery in
exogenous-noise block MDPs."""

from .analysis import (
    AnalysisReport,
    analyze,
    communicating_classes,
    diameter,
    max_finite_witness,
    periodicity,
    verify_dprime_theorem,
    witness_distance,
)
from .core import (
    Emission,
    Encoder,
    EndogenousDynamics,
    ExBmdp,
    ExogenousChain,
    compose,
    parse_env,
    serialize_env,
)
from .learning import (
    CountTables,
    DataParams,
    LearnResult,
    LossConfig,
    LossVariant,
    enumerate_encoders,
    eval_loss,
    exact_loss,
    fit_counts,
    learn,
    learn_exact,
    select_encoder,
)
from .sampling import (
    PER_CLASS,
    UNIFORM_OBS,
    TrajectoryDataset,
    sample_dataset,
    span_index,
)
from .validation import (
    Outcome,
    OutcomeKind,
    classify,
    induced_dynamics,
    minimal_size,
)
from .zoo import ZooEntry, random_exbmdp, zoo_build, zoo_names

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "CountTables",
    "DataParams",
    "Emission",
    "Encoder",
    "EndogenousDynamics",
    "ExBmdp",
    "ExogenousChain",
    "LearnResult",
    "LossConfig",
    "LossVariant",
    "Outcome",
    "OutcomeKind",
    "PER_CLASS",
    "TrajectoryDataset",
    "UNIFORM_OBS",
    "ZooEntry",
    "analyze",
    "classify",
    "communicating_classes",
    "compose",
    "diameter",
    "enumerate_encoders",
    "eval_loss",
    "exact_loss",
    "fit_counts",
    "induced_dynamics",
    "learn",
    "learn_exact",
    "max_finite_witness",
    "minimal_size",
    "parse_env",
    "periodicity",
    "random_exbmdp",
    "sample_dataset",
    "select_encoder",
    "serialize_env",
    "span_index",
    "verify_dprime_theorem",
    "witness_distance",
    "zoo_build",
    "zoo_names",
]
