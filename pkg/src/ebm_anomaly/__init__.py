"""Unsupervised anomaly detection with restricted and semi-restricted Boltzmann machines."""

__version__ = "0.1.0"

from .anomaly import AnomalyVerdict, Threshold, classify, fit_threshold
from .datagen import GenConfig, generate, split
from .energy import energy, free_energies, free_energy, log_partition_exact
from .evaluation import Metrics, SweepPlan, run_experiment, run_sweep, score
from .samplers import (
    SamplerConfig,
    SamplerKind,
    exact_distribution,
    sample_clamped,
    sample_unclamped,
)
from .training import TrainConfig, apply_update, kl_gradient, train
from .types import (
    BinaryState,
    BmTopology,
    Dataset,
    EncodedDataset,
    Laterals,
    ModelParams,
    SampleBatch,
    decode_point,
    encode_point,
    validate_params,
)
