import json
import math

import numpy as np
import pytest

from bectransfer import cli, experiments, phase_space
from bectransfer.config import default_config_text, parse_config

BASE = default_config_text()
SWEEP = '\n[sweep]\nparameter = "Delta_c_in_units_of_kappa"\nvalues = [0.1, 0.5, 1.0]\n'


def write(tmp_path, text, name="run.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


@pytest.fixture(scope="module")
def transfer_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("transfer")
    assert cli.main(["transfer", "--out", str(out)]) == 0
    return out


def test_derive_and_units(capsys):
    code, cap = run(capsys, "derive")
    assert code == 0
    data = json.loads(cap.out)
    assert set(data["units"]) <= set(data["derived"])
    assert data["derived"]["Omega_2"] == pytest.approx(9.129e4, rel=1e-3)
    assert data["warnings"] == []


def test_steady_match_spectrum(capsys, tmp_path):
    code, cap = run(capsys, "steady", "--out", str(tmp_path))
    assert code == 0 and json.loads(cap.out)["Phi_ss"] < 0
    assert (tmp_path / "steady.json").exists()
    code, cap = run(capsys, "match")
    m = json.loads(cap.out)
    assert code == 0 and abs(m["residual"]) <= 1e-9 * 2 * math.pi * 16e3
    code, cap = run(capsys, "spectrum")
    spec = json.loads(cap.out)
    assert code == 0 and len(spec["eigenvalues"]) == 6 and set(spec["eigenvalues"][0]) == {"re", "im"}
    assert spec["stable"] is False
    code, cap = run(capsys, "spectrum", "--compensate")
    assert json.loads(cap.out)["stable"] is True


def test_transfer_outputs(transfer_dir):
    rep = json.loads((transfer_dir / "fidelity.json").read_text())
    for key in ("trace_overlap", "normalized_overlap", "overlap_vs_ideal", "normalized_overlap_vs_ideal"):
        assert 0 < rep[key] < 1
    N22 = np.array(rep["N22"])
    assert N22[1, 1] / N22[0, 0] == pytest.approx(rep["xi_ratio_squared"], rel=1e-9)
    assert rep["transfer_map"] == "M^T"
    assert {"Omega_ST", "D_chi", "t_transfer"} <= set(rep["derived"])
    for name in ("W_in.csv", "W_out.csv", "W_in.pgm", "W_out.pgm", "W_in.ppm", "W_out.ppm"):
        assert (transfer_dir / name).stat().st_size > 0
    # the uncompensated mean-field fixed point is unstable at the default pump strength
    assert any(w["kind"] == "mean_field_instability" for w in rep["warnings"])


def test_transfer_files_round_trip(transfer_dir):
    cfg = parse_config(BASE)
    p, _ = experiments.resolve_params(cfg)
    res = experiments.compute_transfer(p, cfg.experiment)
    W_out = phase_space.read_csv(transfer_dir / "W_out.csv")
    W_in = phase_space.read_csv(transfer_dir / "W_in.csv")
    assert W_out.spec == res.grid and np.array_equal(W_out.values, res.W_out.values)
    assert np.array_equal(W_in.values, res.W_in.values)
    rep = json.loads((transfer_dir / "fidelity.json").read_text())
    assert rep["overlap_vs_ideal"] == res.metrics["overlap_vs_ideal"]
    assert rep["N22"] == res.N22.tolist()


def test_transfer_noise_off(tmp_path, capsys):
    cfg = write(tmp_path, BASE.replace('noise = "symmetrized"', 'noise = "off"'))
    code, _ = run(capsys, "transfer", "--config", cfg, "--out", str(tmp_path / "o"))
    rep = json.loads((tmp_path / "o" / "fidelity.json").read_text())
    assert code == 0
    assert rep["overlap_vs_ideal"] == pytest.approx(1.0, abs=1e-3)
    assert rep["normalized_overlap_vs_ideal"] == pytest.approx(1.0, abs=1e-3)


def test_transfer_mismatch_warning(tmp_path, capsys):
    text = BASE.replace('match = "g"', 'match = "none"').replace("g_times_2pi_hz = 1e6", "g_times_2pi_hz = 5.9e6")
    cfg = write(tmp_path, text)
    code, cap = run(capsys, "transfer", "--config", cfg, "--out", str(tmp_path / "o"))
    assert code == 0
    warn = [w for w in json.loads(cap.out)["warnings"] if w["kind"] == "frequency_mismatch"]
    assert warn and warn[0]["Omega_prime_residual"] != 0


def test_transfer_numerical_failure(tmp_path, capsys):
    text = BASE.replace("eta_mag_in_units_of_kappa = 3.9", "eta_mag_in_units_of_kappa = 10").replace(
        "Delta_c_in_units_of_kappa = 0.1", "Delta_c_in_units_of_kappa = 1.0").replace('match = "g"', 'match = "none"')
    text = text.replace("g_times_2pi_hz = 1e6", "g_times_2pi_hz = 6048473.052273621")
    out = tmp_path / "o"
    code, cap = run(capsys, "transfer", "--config", write(tmp_path, text), "--out", str(out))
    assert code == 2
    report = json.loads(cap.out)
    assert report["error"] == "SteadyStateError" and "last_Phi" in report
    assert json.loads((out / "error.json").read_text()) == report


def test_config_errors_exit_1(tmp_path, capsys):
    code, cap = run(capsys, "derive", "--config", write(tmp_path, ""))
    assert code == 1 and "physical.m_m" in cap.err
    code, _ = run(capsys, "derive", "--config", str(tmp_path / "missing.toml"))
    assert code == 1
    code, cap = run(capsys, "sweep", "--config", write(tmp_path, BASE + '\n[sweep]\nparameter = "nope"\nvalues = [1]\n'))
    assert code == 1 and "non-existent" in cap.err
    code, _ = run(capsys, "sweep")
    assert code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["transfer", "--grid", "lots"])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        cli.main(["nonsense"])
    assert info.value.code == 1


def test_sweep_single_point_matches_transfer(tmp_path, capsys):
    text = BASE.replace("Delta_c_in_units_of_kappa = 0.1", "Delta_c_in_units_of_kappa = 0.5")
    cfg = write(tmp_path, text + '\n[sweep]\nparameter = "Delta_c_in_units_of_kappa"\nvalues = [0.5]\n')
    assert run(capsys, "transfer", "--config", cfg, "--out", str(tmp_path / "t"))[0] == 0
    assert run(capsys, "sweep", "--config", cfg, "--out", str(tmp_path / "s"))[0] == 0
    rep = json.loads((tmp_path / "t" / "fidelity.json").read_text())
    (row,) = experiments.read_sweep_csv(tmp_path / "s" / "sweep.csv")
    for key in ("trace_overlap", "normalized_overlap", "overlap_vs_ideal", "normalized_overlap_vs_ideal"):
        assert row[key] == rep[key]
    assert row["Omega_ST"] == rep["derived"]["Omega_ST"]
    assert [row["N22_xx"], row["N22_xp"], row["N22_pp"]] == [rep["N22"][0][0], rep["N22"][0][1], rep["N22"][1][1]]


def test_sweep_optimize_refines(tmp_path, capsys):
    text = BASE + '\n[sweep]\nparameter = "Delta_c_in_units_of_kappa"\nvalues = [0.5, 1.0, 2.0]\noptimize = true\nrefine_iterations = 6\n'
    out = tmp_path / "s"
    assert run(capsys, "sweep", "--config", write(tmp_path, text), "--out", str(out), "--grid", "161x161")[0] == 0
    rows = experiments.read_sweep_csv(out / "sweep.csv")
    assert [r["refined"] for r in rows] == [0, 0, 0, 1]
    assert [r["index"] for r in rows] == [0, 1, 2, 3]
    best = max(r["overlap_vs_ideal"] for r in rows[:3])
    assert rows[-1]["overlap_vs_ideal"] >= best


def test_golden_section_finds_maximum():
    seen = experiments.golden_section_max(lambda v: -(v - 0.3) ** 2, 0.0, 1.0, 40)
    assert max(seen, key=lambda s: s[1])[0] == pytest.approx(0.3, abs=1e-6)


def test_oracle_check_passes_and_hooks(tmp_path, capsys):
    code, cap = run(capsys, "oracle-check", "--out", str(tmp_path))
    report = json.loads(cap.out)
    assert code == 0 and report["passed"] and len(report["checks"]) >= 9
    assert (tmp_path / "oracle_report.json").exists()
    code, cap = run(capsys, "oracle-check", "--tolerance-scale", "1e-30", "--cases", "5")
    assert code == 2 and not json.loads(cap.out)["passed"]
    code, cap = run(capsys, "oracle-check", "--fock-dim", "41")
    assert code == 1 and "exceeds" in cap.err


def test_render_subcommand(tmp_path, capsys, transfer_dir):
    out = tmp_path / "w.pgm"
    code, _ = run(capsys, "render", "--input", str(transfer_dir / "W_out.csv"), "--out", str(out), "--gray")
    assert code == 0 and out.read_text().startswith("P2")


def test_seed_flag_changes_ensemble(tmp_path, capsys):
    text = BASE.replace("fock_dim = 30", "fock_dim = 30\nsde_paths = 64")
    cfg = write(tmp_path, text)
    for seed, name in ((1, "a"), (1, "b"), (2, "c")):
        assert run(capsys, "transfer", "--config", cfg, "--out", str(tmp_path / name), "--seed", str(seed),
                   "--grid", "129x129", "--span", "20")[0] == 0
    a, b, c = ((tmp_path / n / "ensemble.csv").read_bytes() for n in "abc")
    assert a == b and a != c
