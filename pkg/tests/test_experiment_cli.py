from __future__ import annotations

import csv
import io
import json
import math

import pytest

from sykent.cli import EXIT_CONFIG, EXIT_IO, EXIT_OK, main
from sykent.experiment import (
    COLUMNS,
    ConfigError,
    ExperimentConfig,
    ResultSet,
    RmSettings,
    emit_results,
    gate_count_report,
    oracle_curves,
    parse_config,
    results_csv,
    run_experiment,
    with_overrides,
)
from sykent.mitigation import MitigationConfig
from sykent.noise import NoiseModel
from sykent.protocols import RM, SWAP_MBI

SMALL = {
    "times": [2.0, 4.0],
    "shots": 2000,
    "rm": {"n_unitaries": 20, "shots_per_unitary": 256},
}


def small_config(**overrides) -> ExperimentConfig:
    return ExperimentConfig.from_dict({**SMALL, **overrides})


def read_rows(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


# --- configuration ---------------------------------------------------------------


def test_defaults_mirror_reference_run():
    cfg = ExperimentConfig()
    assert cfg.times == (2.0, 4.0, 6.0, 8.0, 10.0)
    assert [cfg.steps(t) for t in cfg.times] == [1, 2, 3, 4, 5]
    assert cfg.subsystems == ((0,), (0, 1))
    assert cfg.protocols == (SWAP_MBI, RM)
    assert (cfg.rm.n_unitaries, cfg.executor.pack_size) == (150, 5)
    assert cfg.syk.n_qubits == 3


@pytest.mark.parametrize(
    "cfg",
    [
        ExperimentConfig(),
        small_config(noise=NoiseModel(0.005, readout_flip=(0.01, 0.02)).to_dict(),
                     mitigation=MitigationConfig(zne_fit="exponential").to_dict()),
        small_config(protocol="rm", subsystems=[[1], [0, 2]], master_seed=9),
    ],
)
def test_config_round_trip(cfg):
    again = parse_config(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()


def test_empty_config_is_default():
    assert parse_config("") == ExperimentConfig()
    assert parse_config("{}") == ExperimentConfig()


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ('{\n  "shots": 10,\n  "times": [2, 3]\n}', 3, "multiple of trotter_dt"),
        ('{\n  "times": [2],\n\n  "subsystems": [[0, 1, 2]]\n}', 4, "proper subset"),
        ('{\n  "protocol": "magic"\n}', 2, "protocol"),
        ('{\n  "shots": 1,\n  "colour": 3\n}', 3, "unknown key"),
        ('{\n  "shots": 1,\n  "noise": null,\n  "mitigation": {"pauli_twirls": 2}\n}', 4, "requires a noise model"),
        ('{\n  "syk": {"n_majorana": 6,\n   "flavour": 1}\n}', 2, "unknown field"),
        ('{\n  "shots": 1,,\n}', 2, "invalid JSON"),
        ('{\n  "times": [-2]\n}', 2, "nonnegative"),
    ],
)
def test_config_errors_are_line_precise(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text, "exp.json")
    msg = str(info.value)
    assert msg.startswith(f"exp.json:{line}:")
    assert fragment in msg


def test_with_overrides():
    cfg = with_overrides(ExperimentConfig(), seed=5, output_dir="out", workers=3)
    assert (cfg.master_seed, cfg.output_dir, cfg.executor.worker_count) == (5, "out", 3)
    with pytest.raises(ValueError):
        with_overrides(ExperimentConfig(), workers=0)


# --- driver ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "overrides, settings",
    [
        ({}, 1),
        ({"noise": {"two_qubit_depolarizing": 0.01}}, 2),
        ({"protocol": "swap_mbi", "noise": {"two_qubit_depolarizing": 0.01},
          "mitigation": {"zne_factors": [1, 3], "pauli_twirls": 2}}, 3),
    ],
)
def test_row_count_is_cartesian(overrides, settings):
    cfg = small_config(**overrides)
    res = run_experiment(cfg)
    assert len(res.rows) == len(cfg.times) * len(cfg.subsystems) * len(cfg.protocols) * settings


def test_labels_per_setting():
    cfg = small_config(protocol="swap_mbi", noise={"two_qubit_depolarizing": 0.01},
                       mitigation={"zne_factors": [1, 3], "pauli_twirls": 2})
    labels = {(r.noise_label, r.mitigation_label) for r in run_experiment(cfg).rows}
    assert labels == {("none", "none"), ("p2=0.01", "none"), ("p2=0.01", "zne1-3/linear+pt2+ro")}


def test_t2_l1_row_has_measured_and_exact(tmp_path):
    paths = emit_results(run_experiment(small_config()), tmp_path)
    rows = read_rows(paths["results"].read_text())
    assert list(rows[0]) == list(COLUMNS)
    (row,) = [r for r in rows if r["t"] == "2" and r["L"] == "1" and r["protocol"] == SWAP_MBI]
    assert math.isfinite(float(row["S2"])) and math.isfinite(float(row["S2_exact"]))
    assert float(row["S2_exact"]) > 0


def test_emitted_files(tmp_path):
    res = run_experiment(small_config())
    paths = emit_results(res, tmp_path / "nested")
    resolved = json.loads(paths["config"].read_text())
    assert resolved["initial_state"] == "all-zeros product state"
    assert parse_config(paths["config"].read_text()) == res.config
    counts = json.loads(paths["gate_counts"].read_text())
    assert counts["2"]["trotter_steps"] == 1
    assert counts["circuits_per_time_point"]["rm"] == 20


def test_rerun_is_byte_identical(tmp_path):
    cfg = small_config(noise={"two_qubit_depolarizing": 0.01, "readout_flip": [0.01, 0.01]})
    a = emit_results(run_experiment(cfg), tmp_path / "a")
    b = emit_results(run_experiment(cfg), tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes()


def test_emit_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_results(ResultSet(ExperimentConfig()), tmp_path)


def test_time_zero_has_zero_entropy():
    cfg = small_config(times=[0.0, 2.0], subsystems=[[0], [1], [0, 1], [1, 2]])
    for o in oracle_curves(cfg):
        if o.t == 0:
            assert o.s2_exact == 0.0 and o.s2_exact_trotter == 0.0 and o.svn_exact == 0.0
    rows = [r for r in run_experiment(cfg).rows if r.t == 0]
    assert rows and all(r.estimate.purity == pytest.approx(1.0) for r in rows if r.protocol == SWAP_MBI)


def test_default_gate_counts_shape():
    report = gate_count_report(ExperimentConfig())
    assert [report[k]["trotter_steps"] for k in ("2", "4", "6", "8", "10")] == [1, 2, 3, 4, 5]
    depth = [report[k]["state_preparation"]["depth"] for k in ("2", "4", "6", "8", "10")]
    assert depth == [depth[0] * r for r in range(1, 6)]


def test_noiseless_swap_tracks_exact_trotter():
    """At 10^5 shots the noiseless swap test sits within 3 sigma of the exact-Trotterized purity at every point."""
    cfg = ExperimentConfig(protocol="swap_mbi", shots=100_000)
    res = run_experiment(cfg)
    assert len(res.rows) == 10
    for r in res.rows:
        exact_purity = math.exp(-r.s2_exact_trotter)
        assert abs(r.estimate.purity - exact_purity) <= 3 * r.estimate.purity_std_error


def test_no_silent_negative_entropies():
    cfg = ExperimentConfig(noise=NoiseModel(0.01, readout_flip=(0.02, 0.02)), shots=4000,
                           rm=RmSettings(60, 512))
    for r in run_experiment(cfg).rows:
        est = r.estimate
        if est.defined and math.isfinite(est.std_error):
            assert est.renyi2 >= -3 * est.std_error
        else:
            assert math.isnan(est.renyi2)


def test_undefined_rows_are_flagged_not_dropped():
    csv_text = results_csv(run_experiment(small_config()).rows)
    assert all(r["defined"] in ("true", "false") for r in read_rows(csv_text))


# --- command line ---------------------------------------------------------------------


def write_config(tmp_path, data) -> str:
    path = tmp_path / "exp.json"
    path.write_text(json.dumps(data, indent=2))
    return str(path)


def test_cli_run(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out), "--seed", "3", "--workers", "1"]) == EXIT_OK
    assert (out / "results.csv").exists()
    assert json.loads((out / "config.resolved.json").read_text())["master_seed"] == 3
    assert "results:" in capsys.readouterr().out


@pytest.mark.parametrize("command, name", [("oracle", "oracle.csv"), ("counts", "gate_counts.json")])
def test_cli_partial_commands(tmp_path, command, name):
    cfg = write_config(tmp_path, SMALL)
    assert main([command, cfg, "--output-dir", str(tmp_path / "o")]) == EXIT_OK
    assert (tmp_path / "o" / name).stat().st_size > 0


def test_cli_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path, {"shots": 10, "times": [3]})
    assert main(["run", cfg]) == EXIT_CONFIG
    err = capsys.readouterr().err
    assert err.startswith("sykent: config error:") and "exp.json:3:" in err


def test_cli_bad_override(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    assert main(["run", cfg, "--workers", "0"]) == EXIT_CONFIG


def test_cli_missing_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == EXIT_IO
    assert "io error" in capsys.readouterr().err


def test_cli_unwritable_output(tmp_path, capsys):
    cfg = write_config(tmp_path, SMALL)
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["counts", cfg, "--output-dir", str(blocker / "sub")]) == EXIT_IO
    assert "io error" in capsys.readouterr().err
