"""Event-based Monte Carlo of the feed-forward heralded transmission experiment.

One trial is one integration period. Pair emission is a homogeneous Poisson
process (CW pump). The herald arm thins and detects the signal photons; each
herald click opens the switch for a fixed window after an electronic
latency. The idler arm is delayed, thinned by the setup efficiency, gated
by the switch, thinned by the sample and detected. Detector clicks then go
through the coincidence correlator.

Every random draw of a trial comes from a generator keyed on
``(master_seed, trial_index)``, so a trial is reproducible in isolation.
"""
from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Union

import numpy as np

from . import kernels
from .estimation import coincidence_mask, count_triples
from .model import (
    Channel,
    ConfigError,
    DetectorConfig,
    ExperimentConfig,
    TimeTagStream,
    TrialCounts,
    validate,
)


@dataclass(frozen=True)
class RngStream:
    """Independent random stream for one trial of one seeded experiment."""

    seed: int
    stream_id: int

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


RngLike = Union[RngStream, np.random.Generator]


def _gen(rng: RngLike) -> np.random.Generator:
    return rng.generator() if isinstance(rng, RngStream) else rng


@dataclass(frozen=True)
class GateSchedule:
    """Sorted, disjoint half-open ``[open, close)`` switch windows."""

    opens: np.ndarray
    closes: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.opens, dtype=np.float64)
        c = np.asarray(self.closes, dtype=np.float64)
        if o.shape != c.shape:
            raise ValueError("opens and closes differ in length")
        if np.any(c <= o):
            raise ValueError("every interval needs close > open")
        if o.size > 1 and np.any(o[1:] <= c[:-1]):
            raise ValueError("intervals must be sorted and disjoint")
        object.__setattr__(self, "opens", o)
        object.__setattr__(self, "closes", c)

    @property
    def intervals(self):
        return list(zip(self.opens.tolist(), self.closes.tolist()))

    @property
    def open_time(self) -> float:
        return float((self.closes - self.opens).sum())

    def contains(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=np.float64)
        k = np.searchsorted(self.opens, t, side="right") - 1
        inside = k >= 0
        inside[inside] = t[inside] < self.closes[k[inside]]
        return inside


def generate_pair_emissions(rate: float, duration: float, rng: RngLike) -> np.ndarray:
    """Emission times of a homogeneous Poisson process on ``[0, duration)``.

    Draws the Poisson count and then sorted uniform times, which is the same
    process as summing exponential gaps.
    """
    if not rate > 0 or not duration > 0:
        raise ValueError("rate and duration must be > 0")
    g = _gen(rng)
    n = g.poisson(rate * duration)
    return np.sort(g.uniform(0.0, duration, n))


def thin(events, p: float, rng: RngLike) -> np.ndarray:
    """Keep each event independently with probability ``p``; order is preserved."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"survival probability {p} out of [0,1]")
    ev = np.asarray(events, dtype=np.float64)
    return ev[_gen(rng).random(ev.size) < p]


def build_gate_schedule(herald_clicks, latency: float, width: float) -> GateSchedule:
    clicks = np.asarray(herald_clicks, dtype=np.float64)
    if clicks.size > 1 and np.any(np.diff(clicks) < 0):
        raise ValueError("herald clicks must be sorted")
    opens, closes = kernels.merge_gates(clicks, latency, width)
    return GateSchedule(opens, closes)


def apply_switch(idler_arrivals, schedule: GateSchedule, on_trans: float, leakage: float,
                 enabled: bool, rng: RngLike) -> np.ndarray:
    """Pass arrivals through the switch.

    Enabled: inside an open window the pass probability is ``on_trans``,
    otherwise ``leakage``. Disabled: the switch sits open and every arrival
    passes with ``on_trans``.
    """
    t = np.asarray(idler_arrivals, dtype=np.float64)
    u = _gen(rng).random(t.size)
    if not enabled:
        return t[u < on_trans]
    p = np.where(schedule.contains(t), on_trans, leakage)
    return t[u < p]


def detect(arrivals, det: DetectorConfig, duration: float, rng: RngLike,
           channel: Channel = Channel.IDLER) -> TimeTagStream:
    """Click/no-click detector with efficiency, Poisson darks and dead time.

    Clicks outside ``[0, duration]`` are not recorded.
    """
    g = _gen(rng)
    photons = thin(arrivals, det.efficiency, g)
    n_dark = g.poisson(det.dark_rate * duration) if det.dark_rate > 0 else 0
    darks = g.uniform(0.0, duration, n_dark)
    clicks = np.sort(np.concatenate([photons, darks]))
    clicks = clicks[(clicks >= 0.0) & (clicks <= duration)]
    clicks = kernels.dead_time_filter(clicks, det.dead_time_s)
    return TimeTagStream(channel, clicks)


def _jittered_setup(config: ExperimentConfig, g: np.random.Generator) -> float:
    s = config.idler_channel.setup_efficiency
    if config.jitter_std <= 0:
        return s
    # log-normal with unit mean and relative std jitter_std
    sigma = math.sqrt(math.log1p(config.jitter_std ** 2))
    factor = math.exp(sigma * g.standard_normal() - sigma * sigma / 2.0)
    return min(max(s * factor, 0.0), 1.0)


def simulate_trial(config: ExperimentConfig, trial_index: int, keep_streams: bool = False):
    """Simulate one integration period.

    Returns ``(TrialCounts, streams)`` where ``streams`` is a dict of
    :class:`TimeTagStream` by channel when ``keep_streams`` is set, else None.
    """
    g = RngStream(config.master_seed, trial_index).generator()
    src, ch, sw = config.source, config.idler_channel, config.switch
    T = src.duration

    pairs = generate_pair_emissions(src.pair_rate, T, g)

    herald = detect(thin(pairs, src.signal_channel_efficiency, g), config.herald_detector, T, g,
                    Channel.HERALD)

    setup = _jittered_setup(config, g)
    idler = thin(pairs + ch.delay_s, setup, g)
    schedule = build_gate_schedule(herald.timestamps, sw.electronic_latency_s, sw.gate_width_s)
    idler = apply_switch(idler, schedule, sw.on_state_transmission, sw.off_state_leakage,
                         sw.enabled, g)
    idler = thin(idler, config.sample.transmission, g)

    cc = config.coincidence
    if config.hbt_mode:
        to_a = g.random(idler.size) < 0.5
        det_a = detect(idler[to_a], config.idler_detector, T, g, Channel.IDLER)
        det_b = detect(idler[~to_a], config.idler_detector, T, g, Channel.IDLER_B)
        n_sa, n_sb, n_sab = count_triples(herald, det_a, det_b, cc)
    else:
        det_a = detect(idler, config.idler_detector, T, g, Channel.IDLER)
        det_b = None
        n_sa = n_sb = n_sab = 0
    n_c = int(coincidence_mask(herald, det_a, cc).sum())

    counts = TrialCounts(
        n_herald=len(herald),
        n_idler=len(det_a),
        n_idler_b=len(det_b) if det_b is not None else 0,
        n_coincidence=n_c,
        n_coinc_herald_a=n_sa,
        n_coinc_herald_b=n_sb,
        n_triple=n_sab,
        dark_estimate=config.idler_detector.dark_rate * cc.window_s * len(herald),
    )
    streams = None
    if keep_streams:
        streams = {Channel.HERALD: herald, Channel.IDLER: det_a}
        if det_b is not None:
            streams[Channel.IDLER_B] = det_b
    return counts, streams


def _require_valid(config: ExperimentConfig):
    report = validate(config)
    if not report.ok:
        raise ConfigError("invalid config: " + "; ".join(report.violations))


def _trial_counts(args):
    config, idx = args
    return simulate_trial(config, idx)[0]


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list:
    """Run ``config.repetitions`` trials with stream ids ``0 .. repetitions-1``.

    Results are ordered by trial index regardless of ``workers``.
    """
    _require_valid(config)
    jobs = [(config, i) for i in range(config.repetitions)]
    if workers <= 1:
        return [_trial_counts(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_trial_counts, jobs, chunksize=max(1, len(jobs) // (8 * workers))))


# ------------------------------------------------------------ debug export

def write_time_tags(streams: Iterable[TimeTagStream], fh: io.TextIOBase) -> None:
    """Write ``channel_id<TAB>time_seconds`` lines merged in time order."""
    streams = list(streams)
    if not streams:
        return
    times = np.concatenate([s.timestamps for s in streams])
    labels = np.concatenate([np.full(len(s), i) for i, s in enumerate(streams)])
    order = np.argsort(times, kind="stable")
    names = [s.channel_id.value for s in streams]
    for t, k in zip(times[order].tolist(), labels[order].tolist()):
        fh.write(f"{names[k]}\t{t!r}\n")


def read_time_tags(fh: io.TextIOBase) -> dict:
    """Inverse of :func:`write_time_tags`; returns streams keyed by :class:`Channel`."""
    buckets: dict = {}
    for lineno, line in enumerate(fh, 1):
        line = line.strip()
        if not line:
            continue
        try:
            name, value = line.split("\t")
            channel = Channel(name)
            t = float(value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: malformed time tag {line!r}") from exc
        buckets.setdefault(channel, []).append(t)
    return {ch: TimeTagStream(ch, np.array(ts)) for ch, ts in buckets.items()}
