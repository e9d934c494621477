"""Spatial covariance reconstruction and MUSIC DOA estimation for hybrid ULAs."""

from .array_model import (
    ArrayConfig,
    CovarianceEstimate,
    SnapshotBatch,
    SourceScene,
    generate_snapshots,
    steering_subvector,
    steering_vector,
    true_scm,
)
from .beam_sweep import (
    CorrelationSet,
    SweepPlan,
    combine,
    make_plan,
    measure_correlations,
    oracle_correlations,
    uniform_spatial_freq_plan,
    uniform_theta_plan,
)
from .metrics import TrialResult, aggregate, doa_mse, nse
from .music import estimate_doas, hermitian_eig, music_doas, noise_subspace, pseudospectrum
from .reconstruct import (
    IllConditionedError,
    assemble_overall,
    multiplication_count,
    reconstruct_scm,
    sample_average_scm,
)

__version__ = "0.1.0"
