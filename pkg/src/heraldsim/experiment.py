"""End-to-end measurement recipes: calibrate at unit transmission, measure, sweep."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytic import advantage_ratio
from .estimation import (
    CalibrationRecord,
    G2Estimate,
    PrecisionReport,
    accidental_g2,
    calibrate,
    g2_from_trials,
    measure_heralding_fidelity,
    precision_report,
)
from .model import CurvePoint, ExperimentConfig, predicted_heralding_fidelity
from .montecarlo import run_experiment

# keeps the calibration run's random streams disjoint from the measurement's
_CALIBRATION_TAG = 0xCA11B


def calibration_seed(master_seed: int) -> int:
    return int(np.random.SeedSequence([master_seed, _CALIBRATION_TAG]).generate_state(1)[0])


def run_calibration(config: ExperimentConfig, workers: int = 1) -> CalibrationRecord:
    cal_cfg = config.with_transmission(1.0).with_seed(calibration_seed(config.master_seed))
    return calibrate(run_experiment(cal_cfg, workers=workers))


@dataclass(frozen=True)
class Measurement:
    trials: list
    calibration: CalibrationRecord
    report: PrecisionReport
    r_analytic: float


def analytic_advantage(config: ExperimentConfig) -> float:
    """Theory advantage at the config's setup efficiency and predicted eta_S."""
    return advantage_ratio(config.sample.transmission, config.idler_channel.setup_efficiency,
                           predicted_heralding_fidelity(config))


def measure(config: ExperimentConfig, calibration: CalibrationRecord | None = None,
            workers: int = 1) -> Measurement:
    if calibration is None:
        calibration = run_calibration(config, workers=workers)
    trials = run_experiment(config, workers=workers)
    darks = config.idler_detector.dark_rate * config.source.duration
    eta_s = measure_heralding_fidelity(trials, darks)
    report = precision_report(trials, calibration, config.idler_detector, eta_s)
    return Measurement(trials, calibration, report, analytic_advantage(config))


def sweep(config: ExperimentConfig, eta_grid, workers: int = 1) -> list:
    """Simulated and analytic advantage per transmission, sharing one calibration."""
    cal = run_calibration(config, workers=workers)
    rows = []
    for eta in eta_grid:
        m = measure(config.with_transmission(float(eta)), cal, workers=workers)
        rows.append((CurvePoint(eta=float(eta), r_analytic=m.r_analytic,
                                r_simulated=m.report.advantage, stderr=m.report.advantage_stderr,
                                n_trials=m.report.n_trials), m))
    return rows


@dataclass(frozen=True)
class G2Result:
    estimate: G2Estimate
    prediction: float


def measure_g2(config: ExperimentConfig, workers: int = 1) -> G2Result:
    """Heralded g2 behind a 50:50 splitter, plus the multi-pair accidental prediction."""
    if not config.hbt_mode:
        raise ValueError("g2 measurement needs hbt_mode enabled")
    trials = run_experiment(config, workers=workers)
    t = (config.idler_channel.setup_efficiency * config.sample.transmission
         * config.switch.on_state_transmission * config.idler_detector.efficiency)
    dark = config.idler_detector.dark_rate
    pred = accidental_g2(config.source.pair_rate, config.coincidence.window_s, t, (dark, dark))
    return G2Result(g2_from_trials(trials), pred)
