"""End-to-end runs behind the command line: transfer, sweeps and the oracle suite."""
from __future__ import annotations

import csv
import dataclasses
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import fock, full_model, gaussian, phase_space
from .config import ConfigError, ExperimentConfig, RunConfig, split_unit, to_si
from .params import (
    DERIVED_UNITS,
    DerivedParams,
    PhysicalParams,
    SteadyStateError,
    derive,
    match_frequencies,
    steady_state,
)
from .phase_space import GridSpec, WignerGrid

TARGET_FIDELITY = 0.67
REPRODUCED_WITHIN = 0.15
# grid spacing of the default 256-point grid on [-8, 8]
BASE_SPACING = 16.0 / 255.0
# automatic grids stop growing here; wider spans then get coarser spacing
MAX_AUTO_POINTS = 2049


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dump_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_json_safe(obj), fh, indent=2, allow_nan=False)
        fh.write("\n")


# ------------------------------------------------------------------ parameters


def resolve_params(cfg: RunConfig) -> Tuple[PhysicalParams, List[dict]]:
    """Physical parameters after the optional frequency match, plus warnings."""
    p = cfg.physical()
    exp = cfg.experiment
    if exp.match != "none":
        bracket = None
        if exp.match_lo is not None or exp.match_hi is not None:
            if exp.match_lo is None or exp.match_hi is None:
                raise ConfigError("give both experiment.match_lo and experiment.match_hi")
            bracket = (exp.match_lo, exp.match_hi)
        p = match_frequencies(p, exp.match, bracket)
    return p, mismatch_warnings(derive(p), exp.mismatch_tolerance)


def mismatch_warnings(d: DerivedParams, tolerance: float) -> List[dict]:
    residual = d.frequency_mismatch
    if abs(residual) <= tolerance * d.Omega_m:
        return []
    return [
        {
            "kind": "frequency_mismatch",
            "message": "shifted frequencies Omega_m' and Omega_2' differ; transfer is incomplete",
            "Omega_prime_residual": residual,
            "Omega_m_shift": d.Omega_m_shift,
            "Omega_2_shift": d.Omega_2_shift,
            "tolerance": tolerance * d.Omega_m,
        }
    ]


def stability_report(p: PhysicalParams) -> Tuple[dict, List[dict]]:
    """Linear stability of the mean-field model, as given and shift-compensated."""
    d = derive(p)
    out, notes = {}, []
    for name, q, seed in (
        ("as_given", p, 0.0),
        ("shift_compensated", full_model.compensate_static_shift(p), d.Phi_ss),
    ):
        try:
            spec = full_model.linearized_spectrum(q, phi0=seed)
        except SteadyStateError as exc:
            out[name] = {"converged": False, "error": str(exc)}
            continue
        out[name] = {
            "converged": True,
            "stable": spec.stable,
            "max_real_part": float(spec.eigenvalues.real.max()),
        }
        if not spec.stable:
            notes.append(
                {
                    "kind": "mean_field_instability",
                    "branch": name,
                    "message": "linearized three-mode model has a growing eigenmode",
                    "max_real_part": float(spec.eigenvalues.real.max()),
                }
            )
    return out, notes


# ------------------------------------------------------------------ transfer


def channel_noise(d: DerivedParams, D_eff: float) -> Tuple[float, np.ndarray]:
    """Phase-space rotation angle and BEC-block noise at the transfer time."""
    ch = gaussian.transfer_channel(d, D_eff=D_eff)
    theta = d.Omega_ST * ch.t
    return theta, ch.N[:2, :2].copy()


def noise_D_eff(d: DerivedParams, noise: str) -> float:
    return 0.0 if noise == "off" else d.D_eff(noise)


def auto_grid(
    exp: ExperimentConfig,
    N22: np.ndarray,
    grid: Optional[Tuple[int, int]] = None,
    span: Optional[float] = None,
) -> GridSpec:
    """Square grid holding the input and output states and the noise kernel.

    Without an explicit ``span`` the half-width is the larger of 8 and
    2|alpha| + 5 sigma_out (and 5 sigma of the kernel); the point count then
    grows with the span so the spacing stays at the default one, up to
    ``MAX_AUTO_POINTS`` per axis.
    """
    n_x, n_p = grid if grid is not None else exp.grid
    if span is None:
        span = exp.span
    if span is None:
        lam = float(np.linalg.eigvalsh(N22).max()) if np.any(N22) else 0.0
        width = math.sqrt(2 * exp.nbar + 1 + max(lam, 0.0))
        need = max(8.0, 2 * abs(exp.alpha) + 5 * width, 5 * math.sqrt(max(lam, 0.0)) * 1.001)
        span = float(math.ceil(need))
        if grid is None:
            want = min(int(math.ceil(2 * span / BASE_SPACING)) + 1, MAX_AUTO_POINTS)
            n_x, n_p = max(n_x, want), max(n_p, want)
    return GridSpec(-span, span, n_x, -span, span, n_p)


def initial_wigner(exp: ExperimentConfig, grid: GridSpec) -> WignerGrid:
    return phase_space.wigner_state(exp.state, grid, alpha=exp.alpha, nbar=exp.nbar)


def overlap_metrics(W_out: WignerGrid, W_in: WignerGrid, W_ideal: WignerGrid) -> Dict[str, float]:
    vs_in = phase_space.overlap_fidelity(W_out, W_in)
    vs_ideal = phase_space.overlap_fidelity(W_out, W_ideal)
    return {
        "trace_overlap": vs_in.trace_overlap,
        "normalized_overlap": vs_in.normalized_overlap,
        "overlap_vs_ideal": vs_ideal.trace_overlap,
        "normalized_overlap_vs_ideal": vs_ideal.normalized_overlap,
    }


@dataclass
class TransferResult:
    params: PhysicalParams
    derived: DerivedParams
    grid: GridSpec
    theta: float
    N22: np.ndarray
    W_in: WignerGrid
    W_ideal: WignerGrid
    W_out: WignerGrid
    metrics: Dict[str, float]


def compute_transfer(
    p: PhysicalParams,
    exp: ExperimentConfig,
    grid: Optional[Tuple[int, int]] = None,
    span: Optional[float] = None,
) -> TransferResult:
    """Propagate the configured initial state through the channel at t_transfer."""
    d = derive(p)
    theta, N22 = channel_noise(d, noise_D_eff(d, exp.noise))
    spec = auto_grid(exp, N22, grid, span)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        W_in = initial_wigner(exp, spec)
    W_ideal = phase_space.apply_channel_wigner(W_in, theta, np.zeros((2, 2)))
    W_out = phase_space.apply_channel_wigner(W_in, theta, N22)
    return TransferResult(p, d, spec, theta, N22, W_in, W_ideal, W_out, overlap_metrics(W_out, W_in, W_ideal))


def comparison_table(
    p: PhysicalParams, exp: ExperimentConfig, grid=None, span=None
) -> List[dict]:
    """All overlap metrics under each noise convention, on one common grid."""
    d = derive(p)
    conventions = [("off", 0.0), ("symmetrized", d.D_eff("symmetrized")), ("raw", d.D_eff("raw"))]
    _, widest = channel_noise(d, conventions[-1][1])
    spec = auto_grid(exp, widest, grid, span)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        W_in = initial_wigner(exp, spec)
    rows = []
    W_ideal = None
    for name, D in conventions:
        theta, N22 = channel_noise(d, D)
        if W_ideal is None:
            W_ideal = phase_space.apply_channel_wigner(W_in, theta, np.zeros((2, 2)))
        W_out = phase_space.apply_channel_wigner(W_in, theta, N22)
        rows.append({"convention": name, "D_eff": D, "N22": N22, **overlap_metrics(W_out, W_in, W_ideal)})
    return rows


def reproduction_summary(rows: Sequence[dict]) -> dict:
    keys = ("trace_overlap", "normalized_overlap", "overlap_vs_ideal", "normalized_overlap_vs_ideal")
    hits = [
        {"convention": r["convention"], "metric": k, "value": r[k]}
        for r in rows
        if r["convention"] != "off"
        for k in keys
        if abs(r[k] - TARGET_FIDELITY) <= REPRODUCED_WITHIN
    ]
    return {"target_value": TARGET_FIDELITY, "window": REPRODUCED_WITHIN, "reproduced": bool(hits), "matches": hits}


def steady_record(p: PhysicalParams) -> dict:
    ss = steady_state(p)
    return {
        "a_s_re": ss.a_s.real,
        "a_s_im": ss.a_s.imag,
        "Phi_ss": ss.Phi_ss,
        "x_m": ss.x_m,
        "x_2": ss.x_2,
        "n_cav": ss.n_cav,
        "iterations": ss.iterations,
        "phase_shift_negligible": ss.phase_shift_negligible,
    }


def run_transfer(
    cfg: RunConfig,
    out_dir: str,
    grid: Optional[Tuple[int, int]] = None,
    span: Optional[float] = None,
    seed: Optional[int] = None,
    jobs: int = 1,
) -> dict:
    """Full pipeline; writes W_in.csv, W_out.csv, fidelity.json and renders.

    Raises SteadyStateError when the mean-field fixed point does not converge.
    """
    exp = cfg.experiment
    p, notes = resolve_params(cfg)
    steady = steady_record(p)
    stability, unstable = stability_report(p)
    notes = notes + unstable
    res = compute_transfer(p, exp, grid, span)
    table = comparison_table(p, exp, grid, span)
    d = res.derived
    os.makedirs(out_dir, exist_ok=True)
    phase_space.write_csv(os.path.join(out_dir, "W_in.csv"), res.W_in)
    phase_space.write_csv(os.path.join(out_dir, "W_out.csv"), res.W_out)
    for name, W in (("W_in", res.W_in), ("W_out", res.W_out)):
        phase_space.render(os.path.join(out_dir, f"{name}.pgm"), W, color=False)
        phase_space.render(os.path.join(out_dir, f"{name}.ppm"), W, color=True)

    report = {
        **res.metrics,
        "fidelity": res.metrics["overlap_vs_ideal"],
        "noise_convention": exp.noise,
        "D_eff": noise_D_eff(d, exp.noise),
        "N22": res.N22,
        "N22_ratio_pp_over_xx": res.N22[1, 1] / res.N22[0, 0] if res.N22[0, 0] else None,
        "xi_ratio_squared": (d.xi_2 / d.xi_m) ** 2,
        "theta": res.theta,
        # quarter-period map on (x2, p2, xm, pm): M for Omega_ST > 0, its transpose otherwise
        "transfer_map": "M" if d.Omega_ST > 0 else "M^T",
        "state": {"kind": exp.state, "alpha": exp.alpha, "nbar": exp.nbar},
        "grid": dataclasses.asdict(res.grid),
        "physical": dataclasses.asdict(p),
        "derived": d.to_dict(),
        "derived_units": DERIVED_UNITS,
        "steady_state": steady,
        "stability": stability,
        "comparison": table,
        "target_comparison": reproduction_summary(table),
        "warnings": notes,
    }
    if exp.sde_paths > 0:
        report["sde"] = run_sde_check(d, exp, out_dir, seed if seed is not None else exp.seed, jobs)
    dump_json(os.path.join(out_dir, "fidelity.json"), report)
    return report


def run_sde_check(d: DerivedParams, exp: ExperimentConfig, out_dir: Optional[str], seed: int, jobs: int) -> dict:
    """Monte-Carlo ensemble to t_transfer; relative error of the covariance vs N(t)."""
    D = noise_D_eff(d, exp.noise)
    t = d.t_transfer
    ens = gaussian.sde_trajectory(
        d, seed, t / exp.sde_steps, t, exp.sde_paths, D_eff=D, record_every=exp.sde_steps, jobs=jobs
    )
    ens.t[-1] = t
    if out_dir is not None:
        gaussian.write_ensemble_csv(os.path.join(out_dir, "ensemble.csv"), ens)
    N = gaussian.noise_covariance(d.Omega_ST, d.xi_2, d.xi_m, D, t)
    return {"paths": exp.sde_paths, "steps": exp.sde_steps, "seed": seed, **covariance_error(ens.cov[-1], N)}


def covariance_error(est: np.ndarray, exact: np.ndarray, significant: float = 0.05) -> dict:
    """Worst relative error over elements above ``significant`` x the largest one."""
    scale = float(np.abs(exact).max())
    if scale == 0:
        return {"max_rel_error": float(np.abs(est).max()), "elements": 0}
    mask = np.abs(exact) >= significant * scale
    rel = np.abs(est - exact)[mask] / np.abs(exact)[mask]
    return {"max_rel_error": float(rel.max()), "elements": int(mask.sum())}


# ------------------------------------------------------------------ sweep


def sweep_columns(parameter: str) -> List[str]:
    derived = [f.name for f in dataclasses.fields(DerivedParams)]
    return (
        ["index", "refined", parameter]
        + derived
        + ["N22_xx", "N22_xp", "N22_pp"]
        + ["trace_overlap", "normalized_overlap", "overlap_vs_ideal", "normalized_overlap_vs_ideal"]
        + ["span", "n_x", "n_p", "steady_converged", "Phi_ss_self_consistent"]
    )


def sweep_point(base: PhysicalParams, parameter: str, value: float, exp, grid=None, span=None) -> dict:
    name, form = split_unit(parameter)
    p = dataclasses.replace(base, **{name: to_si((form, value), base.kappa)})
    res = compute_transfer(p, exp, grid, span)
    try:
        phi_sc, converged = steady_state(p).Phi_ss, True
    except SteadyStateError:
        phi_sc, converged = math.nan, False
    row = {parameter: value, **dataclasses.asdict(res.derived)}
    row.update(N22_xx=res.N22[0, 0], N22_xp=res.N22[0, 1], N22_pp=res.N22[1, 1])
    row.update(res.metrics)
    row.update(span=res.grid.x_max, n_x=res.grid.n_x, n_p=res.grid.n_p)
    row.update(steady_converged=int(converged), Phi_ss_self_consistent=phi_sc)
    return row


def golden_section_max(f, lo: float, hi: float, iterations: int):
    """Maximise a unimodal ``f`` on [lo, hi]; returns every (x, f(x)) evaluated."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    e = a + inv_phi * (b - a)
    fc, fe = f(c), f(e)
    seen = [(c, fc), (e, fe)]
    for _ in range(iterations):
        if fc >= fe:
            b, e, fe = e, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
            seen.append((c, fc))
        else:
            a, c, fc = c, e, fe
            e = a + inv_phi * (b - a)
            fe = f(e)
            seen.append((e, fe))
    return seen


def run_sweep(
    cfg: RunConfig,
    out_path: str,
    grid: Optional[Tuple[int, int]] = None,
    span: Optional[float] = None,
    jobs: int = 1,
) -> List[dict]:
    """One row per sweep value (in order), plus a refined row when optimizing.

    The frequency match, if requested, runs once on the base parameters; the
    matched value then stays fixed across the sweep.
    """
    sw = cfg.sweep
    if sw is None:
        raise ConfigError("missing required table [sweep]")
    base, _ = resolve_params(cfg)
    exp = cfg.experiment

    def point(v):
        return sweep_point(base, sw.parameter, v, exp, grid, span)

    if jobs > 1 and len(sw.values) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(point, sw.values))
    else:
        rows = [point(v) for v in sw.values]
    for i, r in enumerate(rows):
        r.update(index=i, refined=0)

    if sw.optimize and rows:
        fid = [r["overlap_vs_ideal"] for r in rows]
        best = int(np.argmax(fid))
        vals = list(sw.values)
        lo = vals[max(best - 1, 0)]
        hi = vals[min(best + 1, len(vals) - 1)]
        cache: Dict[float, dict] = {}

        def objective(v):
            if v not in cache:
                cache[v] = point(v)
            return cache[v]["overlap_vs_ideal"]

        candidates = [(vals[best], fid[best])]
        if lo != hi:
            candidates += golden_section_max(objective, min(lo, hi), max(lo, hi), sw.refine_iterations)
        v_best, _ = max(candidates, key=lambda c: c[1])
        refined = dict(rows[best]) if v_best == vals[best] else dict(cache[v_best])
        refined.update(index=len(rows), refined=1)
        rows.append(refined)

    write_sweep_csv(out_path, sw.parameter, rows)
    return rows


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_sweep_csv(path, parameter: str, rows: Sequence[dict]) -> None:
    cols = sweep_columns(parameter)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in cols])


def read_sweep_csv(path) -> List[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for r in reader:
            row = {}
            for k, v in r.items():
                row[k] = int(v) if k in ("index", "refined", "n_x", "n_p", "steady_converged") else float(v)
            out.append(row)
    return out


# ------------------------------------------------------------------ oracle suite


def rotated_cat(grid: GridSpec, alpha: float, theta: float) -> np.ndarray:
    """Even-cat Wigner function rotated by ``theta``, evaluated pointwise."""
    X, P = grid.mesh()
    c, s = math.cos(theta), math.sin(theta)
    x, p = c * X + s * P, -s * X + c * P
    norm = 2.0 * (1.0 + math.exp(-2.0 * alpha * alpha))
    W = (
        np.exp(-0.5 * ((x - 2 * alpha) ** 2 + p * p))
        + np.exp(-0.5 * ((x + 2 * alpha) ** 2 + p * p))
        + 2.0 * np.exp(-0.5 * (x * x + p * p)) * np.cos(2 * alpha * p)
    )
    return W / (2 * math.pi * norm)


def _check(name: str, value: float, tolerance: float, scale: float) -> dict:
    tol = tolerance * scale
    return {"name": name, "value": float(value), "tolerance": tol, "passed": bool(value <= tol)}


def oracle_check(
    cfg: RunConfig,
    tolerance_scale: float = 1.0,
    cases: int = 100,
    jobs: int = 1,
    seed: Optional[int] = None,
) -> dict:
    """Cross-module invariants at the configured sizes, as a pass/fail report.

    Raises fock.SizeError when ``experiment.fock_dim`` exceeds ``fock_max_dim``.
    """
    exp = cfg.experiment
    if exp.fock_dim > exp.fock_max_dim:
        raise fock.SizeError(f"fock_dim = {exp.fock_dim} exceeds the cap fock_max_dim = {exp.fock_max_dim}")
    seed = exp.seed if seed is None else seed
    p, _ = resolve_params(cfg)
    d = derive(p)
    rng = np.random.default_rng(seed)
    checks = []

    # channel algebra over random times and couplings
    sym = grp = comp = rank = 0.0
    for _ in range(cases):
        W = rng.uniform(-2, 2) * abs(d.Omega_ST)
        xi2, xim = rng.normal(size=2) * abs(d.xi_m)
        D = rng.uniform(0.1, 2) * d.D_chi
        t1, t2 = rng.uniform(0, 2, size=2) * d.t_transfer
        S1, S2 = gaussian.propagator(W, t1), gaussian.propagator(W, t2)
        sym = max(sym, np.abs(S1 @ gaussian.J @ S1.T - gaussian.J).max())
        grp = max(grp, np.abs(S1 @ S2 - gaussian.propagator(W, t1 + t2)).max())
        N1 = gaussian.noise_covariance(W, xi2, xim, D, t1)
        N2 = gaussian.noise_covariance(W, xi2, xim, D, t2)
        N12 = gaussian.noise_covariance(W, xi2, xim, D, t1 + t2)
        comp = max(comp, np.abs(S2 @ N1 @ S2.T + N2 - N12).max() / max(np.abs(N12).max(), 1e-300))
        sv = np.linalg.svd(N12, compute_uv=False)
        rank = max(rank, sv[2] / sv[0] if sv[0] else 0.0)
    checks += [
        _check("symplectic S J S^T = J", sym, 1e-10, tolerance_scale),
        _check("group law S(t1) S(t2) = S(t1+t2)", grp, 1e-10, tolerance_scale),
        _check("noise composition (relative)", comp, 1e-10, tolerance_scale),
        _check("rank(N) <= 2 (sigma_3 / sigma_1)", rank, 1e-10, tolerance_scale),
    ]

    ch = gaussian.transfer_channel(d, D_eff=d.D_eff("symmetrized"))
    ratio = ch.N[1, 1] / ch.N[0, 0]
    target = (d.xi_2 / d.xi_m) ** 2
    checks.append(_check("momentum stretch N_pp/N_xx = (xi_2/xi_m)^2 (relative)",
                         abs(ratio / target - 1.0), 1e-9, tolerance_scale))

    theta = d.Omega_ST * d.t_transfer
    grid = phase_space.DEFAULT_GRID
    W_cat = phase_space.wigner_state("cat", grid, alpha=2.0)
    W_ps = phase_space.apply_channel_wigner(W_cat, theta, np.zeros((2, 2)))
    W_ideal = W_cat.with_values(rotated_cat(grid, 2.0, theta))
    ov = phase_space.overlap_fidelity(W_ps, W_ideal).normalized_overlap
    checks.append(_check("noiseless cat transfer overlap |1 - F|", abs(1.0 - ov), 1e-3, tolerance_scale))

    dim = exp.fock_dim
    rho_m = fock.ket_to_dm(fock.cat_state_fock(2.0, dim))
    rho_2 = fock.transfer_via_fock(rho_m, theta, exp.fock_max_dim)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        W_fock = fock.wigner_from_fock(rho_2, grid)
    checks.append(_check(f"Fock (dim={dim}) vs phase-space Wigner, max abs",
                         np.abs(W_fock.values - W_ps.values).max(), 1e-3, tolerance_scale))

    mdim = min(dim, 16)
    worst = 0.0
    for _ in range(3):
        a = complex(*rng.uniform(-0.4, 0.4, size=2))
        rho1 = fock.gaussian_state_fock(a, rng.uniform(0, 0.3), rng.uniform(0, 2 * math.pi),
                                        rng.uniform(0, 0.2), mdim)
        rho1 = rho1 / np.trace(rho1).real
        mean1, cov1 = fock.quadrature_moments(rho1, n_modes=1)
        angle = rng.uniform(-math.pi, math.pi)
        vac = np.zeros((mdim, mdim), dtype=complex)
        vac[0, 0] = 1.0
        rho12 = fock.evolve_beamsplitter(np.kron(vac, rho1), -angle, exp.fock_max_dim)
        mean2, cov2 = fock.quadrature_moments(rho12)
        cov0 = np.eye(4)
        cov0[2:, 2:] = cov1
        st = gaussian.QuadratureState(np.r_[0.0, 0.0, mean1], cov0)
        pred = gaussian.apply_channel_moments(st, gaussian.GaussianChannel(gaussian.propagator(1.0, angle), np.zeros((4, 4)), angle))
        worst = max(worst, np.abs(pred.mean - mean2).max(), np.abs(pred.cov - cov2).max())
    checks.append(_check("Fock vs channel first and second moments", worst, 1e-6, tolerance_scale))

    n_paths = exp.sde_paths or 10_000
    ens = gaussian.sde_trajectory(d, seed, d.t_transfer / exp.sde_steps, d.t_transfer, n_paths,
                                  D_eff=d.D_eff("symmetrized"), record_every=exp.sde_steps, jobs=jobs)
    err = covariance_error(ens.cov[-1], ch.N)["max_rel_error"]
    checks.append(_check(f"Monte-Carlo covariance ({n_paths} paths) vs N(t), relative", err, 0.05, tolerance_scale))

    return {"passed": all(c["passed"] for c in checks), "tolerance_scale": tolerance_scale,
            "seed": seed, "fock_dim": dim, "checks": checks}
