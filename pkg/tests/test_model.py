from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heraldsim.model import (
    Channel,
    ConfigError,
    ExperimentConfig,
    SampleConfig,
    TimeTagStream,
    TrialCounts,
    desk_config,
    dumps_config,
    load_config,
    loads_config,
    paper_config,
    predicted_heralding_fidelity,
    save_config,
    solve_operating_point,
    validate,
)


def test_default_configs_validate_clean():
    for cfg in (ExperimentConfig(), paper_config(), desk_config()):
        rep = validate(cfg)
        assert rep.violations == ()
        assert rep.warnings == ()


def test_transmission_out_of_range():
    cfg = replace(paper_config(), sample=SampleConfig(transmission=1.3))
    assert "sample.transmission out of [0,1]" in validate(cfg).violations


def test_delay_before_gate_warns():
    cfg = paper_config()
    cfg = replace(cfg, idler_channel=replace(cfg.idler_channel, delay_s=0.0),
                  switch=replace(cfg.switch, electronic_latency_s=600e-9, gate_width_s=1e-6))
    rep = validate(cfg)
    assert rep.ok
    assert "heralded photon precedes gate opening" in rep.warnings


@pytest.mark.parametrize("change, fragment", [
    (dict(repetitions=1), "repetitions"),
    (dict(master_seed=None), "master_seed missing"),
    (dict(jitter_std=-0.1), "jitter_std"),
])
def test_named_violations(change, fragment):
    rep = validate(replace(paper_config(), **change))
    assert any(fragment in v for v in rep.violations)


@given(eta=st.floats(-2, 3, allow_nan=False), s=st.floats(-1, 2, allow_nan=False),
       rate=st.floats(-10, 1e6, allow_nan=False))
def test_validate_is_pure_and_reports(eta, s, rate):
    cfg = paper_config()
    cfg = replace(cfg, sample=SampleConfig(eta),
                  idler_channel=replace(cfg.idler_channel, setup_efficiency=s),
                  source=replace(cfg.source, pair_rate=rate))
    first, second = validate(cfg), validate(cfg)
    assert first == second
    broken = not (0 <= eta <= 1) or not (0 <= s <= 1) or not rate > 0
    assert (len(first.violations) > 0) == broken


def test_operating_point_solver_hits_targets():
    cfg = paper_config()
    assert predicted_heralding_fidelity(cfg) == pytest.approx(0.90, abs=1e-12)
    # detected idler rate at eta=1: heralded share over eta_S
    a, s = 0.38, 0.38
    heralded = cfg.source.pair_rate * a * s
    assert heralded / 0.90 == pytest.approx(14e3, rel=1e-12)
    assert predicted_heralding_fidelity(cfg.with_switch(False)) == pytest.approx(0.38)


def test_solver_rejects_unreachable_target():
    with pytest.raises(ConfigError):
        # gates alone already leak more than eta_S=0.999 allows
        solve_operating_point(14e3, 0.999, signal_efficiency=0.38, setup_efficiency=0.38,
                              gate_width_s=1e-6)


def test_toml_roundtrip(tmp_path):
    cfg = paper_config(hbt_mode=True, jitter_std=0.02)
    path = tmp_path / "c.toml"
    save_config(cfg, path)
    assert load_config(path) == cfg
    assert loads_config(dumps_config(cfg)) == cfg


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="unknown key source.colour"):
        loads_config("[source]\ncolour = 1\n")
    with pytest.raises(ConfigError, match="unknown key"):
        loads_config("bogus = 3\n")
    with pytest.raises(ConfigError):
        loads_config("[switch]\nenabled = 1\n")
    with pytest.raises(ConfigError):
        loads_config("repetitions = 2.5\n")


def test_missing_seed_stays_missing():
    cfg = loads_config("[sample]\ntransmission = 0.5\n")
    assert cfg.master_seed is None
    assert cfg.sample.transmission == 0.5


def test_shipped_config_files_parse():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.toml"))
    assert files
    for f in files:
        cfg = load_config(f)
        assert validate(cfg).ok, f


def test_time_tag_stream_invariants():
    TimeTagStream(Channel.HERALD, np.array([0.1, 0.2]))
    with pytest.raises(ValueError):
        TimeTagStream(Channel.HERALD, np.array([0.2, 0.1]))
    with pytest.raises(ValueError):
        TimeTagStream(Channel.HERALD, np.array([0.2, 0.2]))


def test_trial_counts_invariants():
    TrialCounts(10, 5, 0, 5, 0, 0, 0)
    with pytest.raises(ValueError):
        TrialCounts(10, 5, 0, 6, 0, 0, 0)
    with pytest.raises(ValueError):
        TrialCounts(10, 5, 5, 5, 3, 2, 3)
