"""Estimators built on time tags and per-trial counts.

Covers the coincidence correlator, Klyshko efficiencies, the ratio
transmission estimator, per-probe-photon precision with its advantage over
the coherent baseline, and the heralded g2(0) from triple coincidences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .model import CoincidenceConfig, DetectorConfig, TimeTagStream, TrialCounts


class EmptyTrialError(ZeroDivisionError):
    """A ratio estimator was handed a zero denominator."""


class DegenerateVarianceError(ArithmeticError):
    """The transmission estimates do not vary, so precision is undefined."""


@dataclass(frozen=True)
class CalibrationRecord:
    eta_setup_measured: float
    n_trials: int
    stderr: float

    def __post_init__(self):
        if not 0.0 <= self.eta_setup_measured <= 1.0:
            raise ValueError("eta_setup_measured out of [0,1]")


@dataclass(frozen=True)
class PrecisionReport:
    eta_hat: float
    var_eta: float
    n_probe: float
    precision_per_photon: float
    advantage: float
    advantage_stderr: float
    eta_s: float
    n_trials: int

    def __post_init__(self):
        if not self.var_eta >= 0:
            raise ValueError("var_eta must be >= 0")
        if not self.n_probe > 0:
            raise ValueError("n_probe must be > 0")
        if not math.isfinite(self.advantage):
            raise ValueError("advantage must be finite")


def _times(stream):
    ts = stream.timestamps if isinstance(stream, TimeTagStream) else np.asarray(stream, dtype=np.float64)
    if ts.size > 1 and np.any(np.diff(ts) < 0):
        raise ValueError("time tags must be sorted ascending")
    return ts


def coincidence_mask(a, b, cfg: CoincidenceConfig) -> np.ndarray:
    """Boolean mask over ``a`` marking tags matched one-to-one with a tag of ``b``.

    A pair matches when ``-window/2 <= t_b - t_a - nominal_offset < window/2``;
    matching is greedy and earliest-first, which is optimal for equal-width
    windows.
    """
    ta, tb = _times(a), _times(b)
    if ta.size == 0 or tb.size == 0:
        return np.zeros(ta.size, dtype=bool)
    return kernels.coincidence_mask(ta, tb, cfg.nominal_offset_s, cfg.window_s / 2.0)


def count_coincidences(a, b, cfg: CoincidenceConfig) -> int:
    return int(np.count_nonzero(coincidence_mask(a, b, cfg)))


def window_mask(a, b, cfg: CoincidenceConfig) -> np.ndarray:
    """Mask over ``a`` of tags whose window holds at least one ``b`` tag.

    Unlike :func:`coincidence_mask` a ``b`` tag may serve several ``a`` tags.
    This is how a coincidence unit evaluates herald-gated windows, and it is
    what the triple-coincidence g2 needs: one-to-one matching would let a
    neighbouring herald claim an accidental photon and bias g2 low.
    """
    ta, tb = _times(a), _times(b)
    if ta.size == 0 or tb.size == 0:
        return np.zeros(ta.size, dtype=bool)
    lo = cfg.nominal_offset_s - cfg.window_s / 2.0
    hi = cfg.nominal_offset_s + cfg.window_s / 2.0
    idx = np.searchsorted(tb, ta + lo, side="left")
    has = idx < tb.size
    has[has] = (tb[idx[has]] - ta[has]) < hi
    return has


def count_triples(herald, idler_a, idler_b, cfg: CoincidenceConfig) -> tuple:
    """Return ``(n_sa, n_sb, n_sab)``: heralds with an A click, with a B click, and with both."""
    mask_a = window_mask(herald, idler_a, cfg)
    mask_b = window_mask(herald, idler_b, cfg)
    return (int(mask_a.sum()), int(mask_b.sum()), int(np.count_nonzero(mask_a & mask_b)))


def klyshko(n_coinc: float, n_singles: float) -> float:
    """Heralding (Klyshko) efficiency ``N_C / N_S``."""
    if n_singles <= 0:
        raise EmptyTrialError("no singles in the heralding channel")
    return n_coinc / n_singles


def calibrate(trials: Sequence[TrialCounts], subtract_darks: bool = True) -> CalibrationRecord:
    """Setup efficiency from a run at sample transmission 1 (ratio of mean counts)."""
    if len(trials) < 2:
        raise ValueError("calibration needs at least 2 trials")
    n_s = np.array([t.n_herald for t in trials], dtype=float)
    n_c = _coinc(trials, subtract_darks)
    if n_s.sum() <= 0:
        raise EmptyTrialError("calibration run recorded no heralds")
    eta = float(np.clip(n_c.sum() / n_s.sum(), 0.0, 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        per_trial = n_c[n_s > 0] / n_s[n_s > 0]
    stderr = float(per_trial.std(ddof=1) / math.sqrt(per_trial.size)) if per_trial.size > 1 else math.nan
    return CalibrationRecord(eta, len(trials), stderr)


def estimate_transmission(trial_klyshko: float, cal: CalibrationRecord) -> float:
    """Transmission as Klyshko efficiency over calibrated setup efficiency; not clamped."""
    if cal.eta_setup_measured <= 0:
        raise EmptyTrialError("calibration efficiency is zero")
    return trial_klyshko / cal.eta_setup_measured


def probe_photon_count(n_idler: float, eta_det: float, eta_hat: float, eta_s: float,
                       dark: float = 0.0) -> float:
    """Mean number of photons that probed the sample: ``N_I / (eta_det eta eta_S) - N_D``."""
    if eta_det <= 0 or eta_hat <= 0 or eta_s <= 0:
        raise ValueError("eta_det, eta_hat and eta_s must be > 0")
    return n_idler / (eta_det * eta_hat * eta_s) - dark


def measure_heralding_fidelity(trials: Sequence[TrialCounts], idler_darks_per_trial: float = 0.0) -> float:
    """eta_S as coincidences over dark-corrected idler singles, pooled over trials."""
    n_c = sum(t.n_coincidence for t in trials)
    n_i = sum(t.n_idler for t in trials) - idler_darks_per_trial * len(trials)
    if n_i <= 0:
        raise EmptyTrialError("no idler singles above the dark level")
    return n_c / n_i


def _coinc(trials, subtract_darks):
    n_c = np.array([t.n_coincidence for t in trials], dtype=float)
    if subtract_darks:
        n_c = n_c - np.array([t.dark_estimate for t in trials], dtype=float)
    return n_c


def _advantage(n_s, n_c, darks, cal, eta_det, eta_s):
    if np.any(n_s <= 0):
        raise EmptyTrialError("a trial recorded no heralds")
    eta_hat = (n_c / n_s) / cal.eta_setup_measured
    var = float(eta_hat.var(ddof=1))
    mean_eta = float(eta_hat.mean())
    if var <= 0:
        raise DegenerateVarianceError("transmission estimate has zero variance over trials")
    # the heralded idler detections feed the probe count; dividing by eta_S
    # then restores the leaked photons that also crossed the sample
    n_probe = probe_photon_count(float((n_c + darks).mean()), eta_det, mean_eta, eta_s,
                                 float(darks.mean()))
    if n_probe <= 0:
        raise DegenerateVarianceError("no probe photons after dark correction")
    precision = 1.0 / (var * n_probe)
    return mean_eta, var, n_probe, precision, precision * mean_eta


def precision_report(trials: Sequence[TrialCounts], cal: CalibrationRecord, det: DetectorConfig,
                     eta_s_measured: float, n_bins: int = 10,
                     subtract_darks: bool = True) -> PrecisionReport:
    """Per-probe-photon precision and empirical advantage over the coherent baseline.

    The advantage multiplies the precision by the mean estimate, i.e. divides
    by the coherent per-photon precision ``1/eta``. Its error bar is the
    standard error of the advantage recomputed on ``n_bins`` contiguous
    batches of trials.
    """
    if len(trials) < 2:
        raise ValueError("precision needs at least 2 trials")
    if cal.eta_setup_measured <= 0:
        raise EmptyTrialError("calibration efficiency is zero")
    n_s = np.array([t.n_herald for t in trials], dtype=float)
    n_c_raw = np.array([t.n_coincidence for t in trials], dtype=float)
    darks = np.array([t.dark_estimate for t in trials], dtype=float)
    if not subtract_darks:
        darks = np.zeros_like(darks)
    n_c = n_c_raw - darks

    mean_eta, var, n_probe, precision, adv = _advantage(n_s, n_c, darks, cal, det.efficiency,
                                                        eta_s_measured)
    bins = min(n_bins, len(trials) // 2)
    stderr = math.nan
    if bins >= 2:
        per_bin = [
            _advantage(n_s[idx], n_c[idx], darks[idx], cal, det.efficiency, eta_s_measured)[4]
            for idx in np.array_split(np.arange(len(trials)), bins)
        ]
        stderr = float(np.std(per_bin, ddof=1) / math.sqrt(bins))
    return PrecisionReport(mean_eta, var, n_probe, precision, adv, stderr, eta_s_measured, len(trials))


def g2_heralded(n_s: float, n_sa: float, n_sb: float, n_sab: float) -> float:
    """Heralded second-order correlation ``N_SAB N_S / (N_SA N_SB)``."""
    if n_sa <= 0 or n_sb <= 0:
        raise EmptyTrialError("g2 needs nonzero herald-A and herald-B coincidences")
    return n_sab * n_s / (n_sa * n_sb)


@dataclass(frozen=True)
class G2Estimate:
    g2: float
    stderr: float
    n_herald: int
    n_sa: int
    n_sb: int
    n_sab: int


def g2_from_trials(trials: Sequence[TrialCounts], n_bins: int = 10) -> G2Estimate:
    """Pooled g2 over all trials, with a binned-batch standard error."""
    arr = np.array([(t.n_herald, t.n_coinc_herald_a, t.n_coinc_herald_b, t.n_triple) for t in trials],
                   dtype=float).reshape(-1, 4)
    tot = arr.sum(axis=0)
    g2 = g2_heralded(*tot)
    bins = min(n_bins, len(trials))
    stderr = math.nan
    if bins >= 2:
        vals = []
        for chunk in np.array_split(arr, bins):
            s = chunk.sum(axis=0)
            if s[1] > 0 and s[2] > 0:
                vals.append(g2_heralded(*s))
        if len(vals) >= 2:
            stderr = float(np.std(vals, ddof=1) / math.sqrt(len(vals)))
    return G2Estimate(g2, stderr, *(int(x) for x in tot))


def fano_factor_conditional(n_singles: Sequence[float], n_coinc: Sequence[float]) -> float:
    """Fano factor of coincidences given heralds, ``Var(N_C | N_S) / E[N_C | N_S]``.

    Uses the pooled ratio as the conditional success probability, so for
    binomial thinning the result estimates ``1 - eta_I``.
    """
    n_s = np.asarray(n_singles, dtype=float)
    n_c = np.asarray(n_coinc, dtype=float)
    if n_s.size < 2 or n_s.sum() <= 0:
        raise ValueError("need at least 2 trials with heralds")
    p = n_c.sum() / n_s.sum()
    expected = p * n_s
    resid = n_c - expected
    # one degree of freedom spent on p
    return float((resid ** 2).sum() / expected.sum() * n_s.size / (n_s.size - 1))


def accidental_g2(pair_rate: float, window_s: float, idler_transmission: Optional[float] = None,
                  dark_rates: tuple = (0.0, 0.0)) -> float:
    """First-order g2 from CW multi-pair accidentals: ``2 * pair_rate * window``.

    With ``idler_transmission`` given, idler dark counts are added to the
    accidental rate on each splitter output.
    """
    g2 = 2.0 * pair_rate * window_s
    if idler_transmission:
        half = idler_transmission / 2.0
        g2 += window_s * (dark_rates[0] + dark_rates[1]) / half
    return g2
