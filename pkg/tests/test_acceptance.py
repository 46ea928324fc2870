"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Tolerances are pinned here and nowhere else.
"""
import dataclasses
import filecmp
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bectransfer import cli, experiments, fock, phase_space
from bectransfer.config import ExperimentConfig, default_config_text
from bectransfer.full_model import (
    FullModel,
    beat_frequency,
    compensate_static_shift,
    fixed_point,
    integrate,
    linearized_spectrum,
    mechanical_splitting,
    spring_frequencies,
)
from bectransfer.gaussian import J, noise_covariance, propagator, sde_trajectory
from bectransfer.params import derive, match_frequencies, paper_defaults

from .conftest import ACCEPTANCE_LINES, symmetric_config

ALGEBRA_TOL = 1e-10
ALGEBRA_CASES = 100
NOISELESS_TOL = 1e-3
ORACLE_TOL = 1e-3
FOCK_DIM = 30
SDE_PATHS = 10_000
SDE_STEPS = 200
SDE_REL_TOL = 0.05
SDE_SIGNIFICANT = 0.05  # elements below this fraction of max |N| are not compared
STRETCH_TOL = 1e-9
SPLITTING_REL_TOL = 0.02
KAPPA_OVER_RATE_MIN = 100.0
RECOIL_KHZ, RECOIL_TOL_KHZ = 14.5, 0.1
TARGET_FIDELITY, REPRODUCED_WITHIN = 0.67, 0.15
SWEEP_DETUNINGS = (0.1, 0.5, 1.0, 2.0, 4.0)


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def matched():
    return derive(match_frequencies(paper_defaults(), "g"))


# 1 ------------------------------------------------------------------ algebra

rates = st.floats(-1e5, 1e5).filter(lambda w: abs(w) > 1.0)
times = st.floats(0.0, 1e-4)
couplings = st.floats(-1e3, 1e3)
worst_algebra = {"symplectic": 0.0, "group": 0.0, "composition": 0.0, "rank": 0.0}


@settings(max_examples=ALGEBRA_CASES, deadline=None, derandomize=True)
@given(rates, couplings, couplings, times, times)
def _algebra_case(W, xi2, xim, t1, t2):
    D = 1e-5
    S1, S2 = propagator(W, t1), propagator(W, t2)
    N1 = noise_covariance(W, xi2, xim, D, t1)
    N2 = noise_covariance(W, xi2, xim, D, t2)
    N12 = noise_covariance(W, xi2, xim, D, t1 + t2)
    scale = max(1.0, np.abs(N12).max())
    sv = np.linalg.svd(N12, compute_uv=False)
    errs = {
        "symplectic": np.abs(S1 @ J @ S1.T - J).max(),
        "group": np.abs(S1 @ S2 - propagator(W, t1 + t2)).max(),
        "composition": np.abs(S2 @ N1 @ S2.T + N2 - N12).max() / scale,
        "rank": sv[2] / max(sv[0], 1e-300),
    }
    for k, v in errs.items():
        worst_algebra[k] = max(worst_algebra[k], float(v))
    assert max(errs.values()) <= ALGEBRA_TOL


def test_criterion_01_channel_algebra():
    try:
        _algebra_case()
    except AssertionError:
        record(1, False, "a randomized case exceeded the tolerance (see the falsifying example)")
        raise
    detail = ", ".join(f"{k} {v:.1e}" for k, v in worst_algebra.items())
    ok = max(worst_algebra.values()) <= ALGEBRA_TOL
    record(1, ok, f"worst over {ALGEBRA_CASES} cases: {detail} (tol {ALGEBRA_TOL:g})")
    assert ok


# 2 ------------------------------------------------------------ noiseless cat


def test_criterion_02_noiseless_transfer():
    grid = phase_space.DEFAULT_GRID
    assert (grid.n_x, grid.n_p) == (256, 256)
    W = phase_space.wigner_state("cat", grid, alpha=2.0)
    out = phase_space.apply_channel_wigner(W, math.pi / 2, np.zeros((2, 2)))
    ideal = W.with_values(experiments.rotated_cat(grid, 2.0, math.pi / 2))
    ov = phase_space.overlap_fidelity(out, ideal).normalized_overlap
    ok = abs(ov - 1.0) <= NOISELESS_TOL
    record(2, ok, f"overlap vs rotated cat {ov:.9f} (tol {NOISELESS_TOL:g})")
    assert ok


# 3 -------------------------------------------------------------------- oracle


def test_criterion_03_fock_oracle(matched):
    theta = matched.Omega_ST * matched.t_transfer
    grid = phase_space.DEFAULT_GRID
    W_ps = phase_space.apply_channel_wigner(phase_space.wigner_state("cat", grid, alpha=2.0), theta, np.zeros((2, 2)))
    rho_2 = fock.transfer_via_fock(fock.ket_to_dm(fock.cat_state_fock(2.0, FOCK_DIM)), theta)
    with pytest.warns(UserWarning):
        # dim 30 reaches |x| ~ 11 while the grid stops at 8; the cat itself does not
        W_fock = fock.wigner_from_fock(rho_2, grid)
    err = np.abs(W_fock.values - W_ps.values).max()
    ok = err <= ORACLE_TOL
    record(3, ok, f"max |W_fock - W_phase_space| = {err:.2e} at dim {FOCK_DIM} (tol {ORACLE_TOL:g})")
    assert ok


# 4 --------------------------------------------------------------- Monte Carlo


def test_criterion_04_monte_carlo(matched):
    d = matched
    t = d.t_transfer
    ens = sde_trajectory(d, 2024, t / SDE_STEPS, t, SDE_PATHS, record_every=SDE_STEPS)
    N = noise_covariance(d.Omega_ST, d.xi_2, d.xi_m, d.D_eff(), t)
    rep = experiments.covariance_error(ens.cov[-1], N, significant=SDE_SIGNIFICANT)
    ok = rep["max_rel_error"] <= SDE_REL_TOL
    record(4, ok, f"{SDE_PATHS} paths, max relative covariance error {rep['max_rel_error']:.4f} (tol {SDE_REL_TOL:g})")
    assert ok


# 5 ----------------------------------------------------------- momentum stretch


def test_criterion_05_momentum_stretch(matched):
    d = matched
    worst = 0.0
    for conv in ("symmetrized", "raw"):
        N = noise_covariance(d.Omega_ST, d.xi_2, d.xi_m, d.D_eff(conv), d.t_transfer)
        worst = max(worst, abs(N[1, 1] / N[0, 0] / (d.xi_2 / d.xi_m) ** 2 - 1.0))
    ok = worst <= STRETCH_TOL
    record(5, ok, f"N_pp/N_xx vs (xi_2/xi_m)^2 = {(d.xi_2 / d.xi_m) ** 2:.6f}, relative error {worst:.1e} (tol {STRETCH_TOL:g})")
    assert ok


# 6 --------------------------------------------------------- adiabatic elimination


def test_criterion_06_normal_mode_splitting():
    p = symmetric_config(0.5)
    d = derive(p)
    pc = compensate_static_shift(p)
    wm, _ = spring_frequencies(p)
    assert p.kappa >= KAPPA_OVER_RATE_MIN * abs(d.Omega_ST)
    split = mechanical_splitting(linearized_spectrum(pc, phi0=d.Phi_ss), wm)
    s_ref = fixed_point(pc, phi0=d.Phi_ss)
    s0 = s_ref.copy()
    s0[4] += 1.0
    T = 3 * math.pi / abs(d.Omega_ST)
    ts = np.linspace(0, T, int(T * wm / (2 * math.pi) * 40) + 1)
    beat = beat_frequency(integrate(s0, FullModel.from_params(pc), T, tol=1e-9, t_eval=ts), s_ref, 2 * math.pi / wm)
    target = 2 * abs(d.Omega_ST)
    r_split, r_beat = split / target, beat / target
    ok = abs(r_split - 1) <= SPLITTING_REL_TOL and abs(r_beat - 1) <= SPLITTING_REL_TOL
    record(6, ok, f"splitting/2|Omega_ST| = {r_split:.4f}, beat/2|Omega_ST| = {r_beat:.4f} "
                  f"at kappa/|Omega_ST| = {p.kappa / abs(d.Omega_ST):.0f} (tol {SPLITTING_REL_TOL:g})")
    assert ok


# 7 ------------------------------------------------------------------ recoil


def test_criterion_07_recoil_frequency():
    khz = derive(paper_defaults()).Omega_2 / (2 * math.pi) / 1e3
    ok = abs(khz - RECOIL_KHZ) <= RECOIL_TOL_KHZ
    record(7, ok, f"Omega_2/2pi = {khz:.4f} kHz (target {RECOIL_KHZ} +/- {RECOIL_TOL_KHZ})")
    assert ok


# 8 ------------------------------------------------------------ fidelity table


def test_criterion_08_fidelity_table(matched):
    p = match_frequencies(paper_defaults(), "g")
    rows = experiments.comparison_table(p, ExperimentConfig())
    keys = ("trace_overlap", "normalized_overlap", "overlap_vs_ideal", "normalized_overlap_vs_ideal")
    print(f"\n{'convention':12s} {'D_eff':>12s} " + " ".join(f"{k:>28s}" for k in keys))
    for r in rows:
        print(f"{r['convention']:12s} {r['D_eff']:12.5e} " + " ".join(f"{r[k]:28.4f}" for k in keys))
    noisy = [r for r in rows if r["convention"] != "off"]
    in_range = all(0 < r[k] < 1 for r in noisy for k in keys)
    ordered = sorted(rows, key=lambda r: r["D_eff"])
    assert [r["convention"] for r in ordered] == ["off", "symmetrized", "raw"]
    monotone = all(
        a[k] > b[k] for a, b in zip(ordered, ordered[1:]) for k in ("overlap_vs_ideal", "normalized_overlap_vs_ideal")
    )
    summary = experiments.reproduction_summary(rows)
    ok = in_range and monotone and len(rows) == 3
    best = min((abs(r[k] - TARGET_FIDELITY), r["convention"], k, r[k]) for r in noisy for k in keys)
    verdict = "reproduced" if summary["reproduced"] else "not reproduced (documented discrepancy)"
    record(8, ok, f"metrics in (0,1): {in_range}, monotone in D_eff: {monotone}; closest to {TARGET_FIDELITY}: "
                  f"{best[1]} {best[2]} = {best[3]:.4f} -> {verdict}")
    assert summary["reproduced"] == (best[0] <= REPRODUCED_WITHIN)
    assert ok


# 9 ---------------------------------------------------------------- detuning sweep


def test_criterion_09_monotone_detuning_sweep():
    base = match_frequencies(paper_defaults(), "g")
    exp = ExperimentConfig()
    fid = []
    for r in SWEEP_DETUNINGS:
        res = experiments.compute_transfer(dataclasses.replace(base, Delta_c=r * base.kappa), exp)
        fid.append(res.metrics["overlap_vs_ideal"])
    ok = all(b > a for a, b in zip(fid, fid[1:]))
    record(9, ok, "overlap_vs_ideal at Delta_c/kappa " + ", ".join(f"{r}: {f:.4f}" for r, f in zip(SWEEP_DETUNINGS, fid)))
    assert ok


# 10 -------------------------------------------------------------- determinism


def test_criterion_10_determinism(tmp_path):
    text = default_config_text().replace("fock_dim = 30", "fock_dim = 30\nsde_paths = 256")
    text += '\n[sweep]\nparameter = "Delta_c_in_units_of_kappa"\nvalues = [0.5, 1.0, 2.0, 4.0]\n'
    cfg = tmp_path / "run.toml"
    cfg.write_text(text)
    outs = {}
    for jobs in (1, 8):
        for cmd in ("sweep", "transfer"):
            out = tmp_path / f"{cmd}-{jobs}"
            code = cli.main([cmd, "--config", str(cfg), "--out", str(out), "--seed", "11",
                             "--jobs", str(jobs), "--grid", "161x161"])
            assert code == 0
            outs[cmd, jobs] = out
    compared, differing = 0, []
    for cmd in ("sweep", "transfer"):
        a, b = outs[cmd, 1], outs[cmd, 8]
        names = sorted(f.name for f in a.iterdir())
        assert names == sorted(f.name for f in b.iterdir())
        for name in names:
            compared += 1
            if not filecmp.cmp(a / name, b / name, shallow=False):
                differing.append(f"{cmd}/{name}")
    ok = not differing
    record(10, ok, f"--jobs 1 vs --jobs 8: {compared} files compared, differing: {differing or 'none'}")
    assert ok
