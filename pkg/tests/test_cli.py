import csv
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from staircase_ttd.cli import EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK, EXIT_VALIDATION, PATTERN_HEADER, main
from staircase_ttd.codebook import StaircaseParams, build_profile, codebook_from_dict, codebook_to_dict
from staircase_ttd.config import ConfigError, parse_config
from staircase_ttd.wavefield import DelayPhaseProfile


def scenario(**over):
    cfg = {
        "scenario": "k3",
        "grid": {"f_c": 60e9, "bw": 2e9, "m_tot": 4096},
        "array": {"n_t": 32},
        "design": {"k_users": 3, "theta_1_deg": -30, "theta_2_deg": 45},
        "link": {"snr_db": 10},
        "sweep": {"variable": "SNR", "values": [0, 10], "sector_samples": 3},
        "output": {"dir": "o", "freq_count": 16, "angle_grid_size": 512},
    }
    for key, val in over.items():
        if val is None:
            cfg.pop(key)
        else:
            cfg[key] = val
    return cfg


def write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def run(tmp_path, command, cfg, *extra):
    out = tmp_path / "out"
    return main([command, "--config", write(tmp_path, cfg), "--out", str(out), *extra]), out


def test_design_writes_codebook_and_report(tmp_path):
    rc, out = run(tmp_path, "design", scenario())
    assert rc == EXIT_OK
    report = json.loads((out / "design_report.json").read_text())
    assert report["d_required"] == pytest.approx(3.2773, abs=1e-4)
    assert report["feasible"] is True
    book = json.loads((out / "codebook.json").read_text())
    assert len(book["delays_s"]) == 32 and book["formulation"] == "Modulo"


def test_design_infeasible_exit_code(tmp_path, capsys):
    rc, out = run(tmp_path, "design", scenario(array={"n_t": 4}))
    assert rc == EXIT_INFEASIBLE
    err = capsys.readouterr().err
    assert "ceil(D)=4" in err and "N_T=4" in err
    assert json.loads((out / "design_report.json").read_text())["feasible"] is False


def test_missing_key_names_path(tmp_path, capsys):
    cfg = scenario(grid={"bw": 2e9, "m_tot": 4096})
    rc, _ = run(tmp_path, "design", cfg)
    assert rc == EXIT_INPUT
    assert "grid.f_c" in capsys.readouterr().err


@pytest.mark.parametrize("bad, where", [
    ({"grid": {"f_c": 1e9, "bw": 2e9, "m_tot": 16}}, "grid"),
    ({"array": {"n_t": "many"}}, "array.n_t"),
    ({"design": {"k_users": 3, "theta_1_deg": 10, "theta_2_deg": 10}}, "design"),
    ({"bogus": {}}, "bogus"),
])
def test_parse_config_errors(bad, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(scenario(**bad))


def test_unreadable_config(tmp_path):
    assert main(["design", "--config", str(tmp_path / "nope.json")]) == EXIT_INPUT
    (tmp_path / "broken.json").write_text("{")
    assert main(["design", "--config", str(tmp_path / "broken.json")]) == EXIT_INPUT


def test_bad_arguments_exit_input(tmp_path):
    assert main(["frobnicate"]) == EXIT_INPUT
    assert main(["design", "--config", write(tmp_path, scenario()), "--seed", "-1"]) == EXIT_INPUT


def test_pattern_of_zero_codebook(tmp_path):
    zero = codebook_to_dict(StaircaseParams(1, 0, 0, 0, 0, "UniformInteger"), DelayPhaseProfile.zeros(32))
    book = tmp_path / "zero.json"
    book.write_text(json.dumps(zero))
    rc, out = run(tmp_path, "pattern", scenario(), "--codebook", str(book))
    assert rc == EXIT_OK
    rows = list(csv.reader(open(out / "pattern.csv")))
    assert tuple(rows[0]) == PATTERN_HEADER
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    assert data.shape == (16 * 512, 4)
    for m in np.unique(data[:, 0]):
        block = data[data[:, 0] == m]
        assert block[np.argmax(block[:, 3]), 2] == 0.0
        assert block[:, 3].max() == pytest.approx(10 * math.log10(32))


def test_pattern_size_mismatch(tmp_path):
    book = tmp_path / "b.json"
    book.write_text(json.dumps(codebook_to_dict(StaircaseParams(1, 0, 0, 0, 0, "UniformInteger"),
                                                DelayPhaseProfile.zeros(16))))
    rc, _ = run(tmp_path, "pattern", scenario(), "--codebook", str(book))
    assert rc == EXIT_INFEASIBLE


def test_corrupted_codebook(tmp_path):
    book = tmp_path / "b.json"
    book.write_text('{"n_t": 32}')
    assert run(tmp_path, "validate", scenario(), "--codebook", str(book))[0] == EXIT_INPUT
    assert run(tmp_path, "validate", scenario())[0] == EXIT_INPUT  # --codebook missing


def _designed(tmp_path, cfg):
    rc, out = run(tmp_path, "design", cfg)
    assert rc == EXIT_OK
    return out, str(out / "codebook.json")


def test_map_reports_integer_discrepancy(tmp_path):
    cfg = scenario(design={"k_users": 3, "theta_1_deg": -30, "theta_2_deg": 45,
                           "formulation": "UniformInteger"})
    out, book = _designed(tmp_path, cfg)
    assert run(tmp_path, "map", cfg, "--codebook", book)[0] == EXIT_OK
    disc = json.loads((out / "discrepancy.json").read_text())
    assert disc["d"] == 4
    assert disc["mapping_discrepancy"][1] == pytest.approx(0.1036, abs=1e-4)
    rows = list(csv.reader(open(out / "beam_map.csv")))
    assert len(rows) == 17


def test_validate_modulo_design(tmp_path):
    cfg = scenario()
    out, book = _designed(tmp_path, cfg)
    assert run(tmp_path, "validate", cfg, "--codebook", book)[0] == EXIT_OK
    checks = {c["name"]: c for c in json.loads((out / "validation.json").read_text())["checks"]}
    assert checks["factorization_identity"]["status"] == "skipped"
    assert checks["filter_centre_tracks_lobes"]["status"] == "pass"
    assert checks["design_hits_predicted"]["status"] == "pass"


def test_validate_integer_design(tmp_path):
    cfg = scenario(design={"k_users": 3, "theta_1_deg": -30, "theta_2_deg": 45,
                           "formulation": "UniformInteger"})
    out, book = _designed(tmp_path, cfg)
    assert run(tmp_path, "validate", cfg, "--codebook", book)[0] == EXIT_OK
    checks = {c["name"]: c for c in json.loads((out / "validation.json").read_text())["checks"]}
    assert checks["factorization_identity"]["status"] == "pass"
    assert checks["factorization_identity"]["measured"] <= 1e-9


def test_validate_flags_tampered_profile(tmp_path):
    cfg = scenario()
    out, book = _designed(tmp_path, cfg)
    data = json.loads(open(book).read())
    data["phases_rad"][5] += 0.5
    (tmp_path / "t.json").write_text(json.dumps(data))
    assert run(tmp_path, "validate", cfg, "--codebook", str(tmp_path / "t.json"))[0] == EXIT_VALIDATION


def test_sweep_is_deterministic(tmp_path):
    cfg = scenario(grid={"f_c": 60e9, "bw": 2e9, "m_tot": 512})
    a, out_a = run(tmp_path, "sweep", cfg)
    first = (out_a / "sweep.csv").read_bytes()
    b, _ = run(tmp_path, "sweep", cfg)
    assert a == b == EXIT_OK
    assert (out_a / "sweep.csv").read_bytes() == first
    rows = list(csv.reader(open(out_a / "sweep.csv")))
    assert len(rows) == 1 + 2 * 4


def test_sweep_infeasible(tmp_path):
    cfg = scenario(array={"n_t": 4}, design=None,
                   sweep={"variable": "K", "values": [5], "sector_samples": 2})
    assert run(tmp_path, "sweep", cfg)[0] == EXIT_INFEASIBLE


def test_codebook_round_trip_through_cli(tmp_path):
    _, book = _designed(tmp_path, scenario())
    params, profile = codebook_from_dict(json.loads(open(book).read()))
    rebuilt = build_profile(params, 32)
    assert np.array_equal(rebuilt.delays, profile.delays)
    assert np.array_equal(rebuilt.phases, profile.phases)


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "staircase_ttd", "design", "--config",
                           write(tmp_path, scenario()), "--out", str(tmp_path / "x")],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "D=3.27" in proc.stdout
