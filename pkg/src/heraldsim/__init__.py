"""Simulation and estimation toolkit for feed-forward heralded-photon transmission measurement."""
__version__ = "0.1.0"

from .analytic import (
    MixtureState,
    PrecisionValue,
    SingularityError,
    advantage_ratio,
    binomial_pmf,
    degraded_precision,
    fock_precision,
    jakeman_condition,
    lossy_fock_state,
    shot_noise_precision,
    sweep_advantage_curve,
)
from .estimation import (
    CalibrationRecord,
    PrecisionReport,
    count_coincidences,
    estimate_transmission,
    g2_heralded,
    klyshko,
    precision_report,
    probe_photon_count,
)
from .model import (
    ConfigError,
    ExperimentConfig,
    TimeTagStream,
    TrialCounts,
    desk_config,
    load_config,
    paper_config,
    validate,
)
from .montecarlo import run_experiment, simulate_trial
