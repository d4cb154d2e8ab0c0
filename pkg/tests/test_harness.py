import math

import numpy as np
import pytest

from mmwave_pgp.harness import (
    ScenarioConfig,
    aggregate,
    emit,
    parse_config,
    preset,
    read_records,
    run_scenario,
)
from mmwave_pgp.harness.cli import main
from mmwave_pgp.harness.config import dump_config
from mmwave_pgp.harness.report import gaussian_violations
from mmwave_pgp.harness.runner import RECORD_FIELDS, RunRecord, run_trial


def small(**kw):
    base = dict(name="tiny", M=4, trials=2, snr_db=(0.0, 20.0), seed=3)
    base.update(kw)
    return ScenarioConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(snr_db=())
    with pytest.raises(ValueError):
        ScenarioConfig(trials=0)
    with pytest.raises(ValueError):
        ScenarioConfig(modes=("XX",))
    with pytest.raises(ValueError):
        ScenarioConfig(precoders=("MMSE",))
    with pytest.raises(ValueError):
        preset("scenario9")


def test_presets_match_reference_settings():
    s1, s2 = preset("scenario1"), preset("scenario2")
    assert (s1.n_ue, s1.r_i, s1.r_o, s1.M, s1.n_ux * s1.n_uz, s1.L) == (10, 1.0, 5.0, 16, 100, 10)
    assert (s2.n_ue, s2.r_o) == (20, 20.0)
    assert s1.nlos_boost_db == 13.0 and s1.trials == 20


def test_parse_config_roundtrip():
    text = """
    preset = scenario2   # start from the long-range cell
    trials = 3
    snr_db = 0, 10,20
    modes = TG, SG
    gaussian = no
    """
    cfg = parse_config(text)
    assert cfg.n_ue == 20 and cfg.trials == 3
    assert cfg.snr_db == (0.0, 10.0, 20.0)
    assert cfg.modes == ("TG", "SG") and cfg.mode_for(3) == "SG"
    assert cfg.gaussian is False
    assert parse_config(dump_config(cfg)) == cfg
    with pytest.raises(ValueError, match="unknown key"):
        parse_config("bogus = 1")
    with pytest.raises(ValueError, match="expected"):
        parse_config("trials 3")
    with pytest.raises(ValueError, match="snr_db"):
        parse_config("snr_db = ")


def test_run_records_and_invariants():
    res = run_scenario(small(), threads=1)
    assert not res.failures
    recs = res.records
    kinds = {r.kind for r in recs}
    assert {"ZFP", "ZF_PGP", "VAAC_PGP", "ZFP_GAUSS", "ZF_PGP_GAUSS", "VAAC_PGP_GAUSS"} <= kinds
    keys = [(r.seed, r.ue, r.snr0_db, r.kind) for r in recs]
    assert len(keys) == len(set(keys))
    for t in res.trials:
        assert all(ok for _, ok in t.audits)
        ues = {r.ue for r in t.records if r.kind == "ZFP" and r.snr0_db == 0.0}
        assert ues == set(range(10))
    assert not gaussian_violations(recs)
    assert all(0 <= r.mi <= 2 * 2 + 1e-9 for r in recs if not r.kind.endswith("GAUSS"))


def test_jsdm_records_carry_mai():
    cfg = small(modes=("JSDM_FA",), precoders=("ZFP", "ZF_PGP"), trials=1)
    res = run_scenario(cfg, threads=1)
    assert not res.failures
    mai = [r.mai_power for r in res.records if r.kind == "ZF_PGP"]
    assert any(p > 0 for p in mai)
    assert {r.subgroup for r in res.records} <= {0, 1}


def test_opgpa_pass():
    cfg = small(opgpa_is=(1.0, 2.0), trials=1)
    res = run_scenario(cfg, threads=1, opgpa_only=True)
    assert res.opgpa and not res.failures
    for row in res.opgpa:
        assert row.snr_opgpa_db <= row.snr_nopgpa_db + 1e-9
        assert abs(row.mi_min - row.I_S) <= 0.01 and abs(row.mi_max - row.I_S) <= 0.01
    ks = [r.k_m for r in res.records if r.kind == "OPGPA_IS1"]
    assert ks and all(k > 0 for k in ks)


def test_failed_trial_is_reported(monkeypatch):
    import mmwave_pgp.harness.runner as runner

    def boom(*a, **k):
        raise np.linalg.LinAlgError("synthetic")

    monkeypatch.setattr(runner, "zfp_mi", boom)
    t = run_trial(small(trials=1), 0)
    assert t.failure is not None and "synthetic" in t.failure.error
    assert t.records == []


def test_determinism_byte_identical(tmp_path):
    cfg = small(trials=1, snr_db=(10.0,))
    a, b = tmp_path / "a", tmp_path / "b"
    emit(run_scenario(cfg, threads=1), a)
    emit(run_scenario(cfg, threads=1), b)
    for f in sorted(a.iterdir()):
        assert f.read_bytes() == (b / f.name).read_bytes(), f.name


def test_emit_files_and_readback(tmp_path):
    cfg = small()
    res = run_scenario(cfg, threads=1)
    files = {p.name for p in emit(res, tmp_path)}
    assert {"records.csv", "summary.json", "config.txt"} <= files
    assert any(f.startswith("fig_tiny_G2_ZF_PGP") for f in files)
    header = (tmp_path / "records.csv").read_text().splitlines()[0]
    assert header.split(",") == list(RECORD_FIELDS)
    back = read_records(tmp_path / "records.csv")
    assert len(back) == len(res.records)
    for r0, r1 in zip(res.records, back):
        assert r0.kind == r1.kind and r0.ue == r1.ue
        assert r1.mi == pytest.approx(r0.mi, rel=1e-5, abs=1e-12)


def test_emit_rejects_bad_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    res = run_scenario(small(trials=1, snr_db=(0.0,)), threads=1)
    with pytest.raises(OSError, match="file"):
        emit(res, blocker / "sub")


def test_aggregate_single_ue():
    r = RunRecord(7, "G1", 0, 0, 30.0, "ZF_PGP", 5.5, 5.5)
    s = aggregate([r], area=math.pi * 24, operating_snr_db=30.0)
    assert s.se_median == pytest.approx(5.5)
    assert s.seua == pytest.approx(5.5 / (math.pi * 24))
    with pytest.raises(ValueError):
        aggregate([], 1.0, 30.0)


def test_aggregate_sums_over_groups():
    recs = [
        RunRecord(1, "G1", 0, 0, 30.0, "ZF_PGP", 1.0, 1.0),
        RunRecord(1, "G2", 0, 1, 30.0, "ZF_PGP", 2.0, 2.0),
        RunRecord(2, "G1", 0, 0, 30.0, "ZF_PGP", 3.0, 3.0),
        RunRecord(2, "G2", 0, 1, 20.0, "ZF_PGP", 9.0, 9.0),
    ]
    s = aggregate(recs, 1.0, 30.0)
    assert s.se_by_seed == {1: 3.0, 2: 3.0}
    assert s.curves[("G1", "ZF_PGP")] == [(30.0, 2.0, 2.0, 2)]


def test_cli_run_and_report(tmp_path, capsys):
    cfg_file = tmp_path / "c.txt"
    cfg_file.write_text("M = 4\ntrials = 1\nsnr_db = 10\nname = cli\n")
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_file), "--out", str(out), "--threads", "1"]) == 0
    assert (out / "records.csv").exists()
    assert main(["report", "--in", str(out)]) == 0
    text = capsys.readouterr().out
    assert "SE (ZF_PGP" in text


def test_cli_sweep_opgpa(tmp_path, capsys):
    cfg_file = tmp_path / "c.txt"
    cfg_file.write_text("M = 4\ntrials = 1\n")
    out = tmp_path / "o"
    rc = main(["sweep-opgpa", "--config", str(cfg_file), "--is-grid", "1,2",
               "--out", str(out), "--threads", "1"])
    assert rc == 0
    lines = (out / "fig_opgpa.csv").read_text().splitlines()
    assert lines[0] == "I_S,snr_opgpa_db,snr_nopgpa_db,savings_db,n_groups"
    assert len(lines) == 3


def test_cli_errors(tmp_path, capsys):
    assert main(["report", "--in", str(tmp_path / "missing")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("snr_db =\n")
    assert main(["run", "--config", str(bad)]) == 2
    assert "snr_db" in capsys.readouterr().err
