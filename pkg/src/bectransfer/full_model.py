"""Mean-field dynamics of the cavity + mirror + BEC side mode before elimination.

State vector: (Re a, Im a, x2, p2, xm, pm) with the mean-field closure
<a^dagger a> -> |<a>|^2 and the combined phase shift Phi = -xi_m xm + xi_2 x2.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import integrate as sp_integrate

from .gaussian import propagator
from .params import PhysicalParams, derive, steady_state


class BlowUpError(RuntimeError):
    def __init__(self, t: float):
        super().__init__(f"cavity amplitude diverged (|a| > 1e6) at t = {t:.6e} s")
        self.t = t


@dataclass(frozen=True)
class FullModel:
    kappa: float
    Delta_tilde: float
    eta: float
    Omega_m: float
    Omega_2: float
    xi_m: float
    xi_2: float
    damping: float = 0.0

    @classmethod
    def from_params(cls, p: PhysicalParams, damping: float = 0.0) -> "FullModel":
        d = derive(p)
        return cls(p.kappa, d.Delta_tilde, p.eta_mag, p.Omega_m, d.Omega_2, d.xi_m, d.xi_2, damping)


def rhs(s: np.ndarray, m: FullModel) -> np.ndarray:
    """Time derivative of the mean-field state.

    ``m.damping`` adds a velocity damping -gamma p_j to both oscillators; it
    only serves to relax trajectories onto the fixed point.
    """
    ar, ai, x2, p2, xm, pm = s
    phi = -m.xi_m * xm + m.xi_2 * x2
    det = m.Delta_tilde + phi
    n = ar * ar + ai * ai
    half_k = 0.5 * m.kappa
    return np.array(
        [
            det * ai - half_k * ar + m.eta,
            -det * ar - half_k * ai,
            m.Omega_2 * p2,
            -m.Omega_2 * x2 - 2.0 * m.xi_2 * n - m.damping * p2,
            m.Omega_m * pm,
            -m.Omega_m * xm + 2.0 * m.xi_m * n - m.damping * pm,
        ]
    )


def jacobian(s: np.ndarray, m: FullModel) -> np.ndarray:
    ar, ai, x2, p2, xm, pm = s
    det = m.Delta_tilde - m.xi_m * xm + m.xi_2 * x2
    hk = 0.5 * m.kappa
    J = np.zeros((6, 6))
    J[0] = [-hk, det, m.xi_2 * ai, 0.0, -m.xi_m * ai, 0.0]
    J[1] = [-det, -hk, -m.xi_2 * ar, 0.0, m.xi_m * ar, 0.0]
    J[2, 3] = m.Omega_2
    J[3] = [-4.0 * m.xi_2 * ar, -4.0 * m.xi_2 * ai, -m.Omega_2, -m.damping, 0.0, 0.0]
    J[4, 5] = m.Omega_m
    J[5] = [4.0 * m.xi_m * ar, 4.0 * m.xi_m * ai, 0.0, 0.0, -m.Omega_m, -m.damping]
    return J


def fixed_point(p: PhysicalParams, phi0: float = 0.0) -> np.ndarray:
    """Mean-field steady state as a FullState vector (momenta vanish)."""
    ss = steady_state(p, phi0=phi0)
    return np.array([ss.a_s.real, ss.a_s.imag, ss.x_2, 0.0, ss.x_m, 0.0])


def compensate_static_shift(p: PhysicalParams) -> PhysicalParams:
    """Shift the input detuning so the effective detuning at the fixed point is Delta_tilde.

    The static radiation-pressure displacements shift the cavity by Phi_ss;
    offsetting Delta_c by -Phi_ss prepares the system so that the linearized
    dynamics see exactly the detuning and photon number used by ``derive``.
    That fixed point is reached by seeding the search with
    ``phi0 = derive(p).Phi_ss``.
    """
    d = derive(p)
    return dataclasses.replace(p, Delta_c=p.Delta_c - d.Phi_ss)


class TimeSeries(NamedTuple):
    t: np.ndarray
    y: np.ndarray  # shape (len(t), 6)


def integrate(
    s0: np.ndarray,
    model: FullModel,
    t_end: float,
    tol: float = 1e-9,
    t_eval: Optional[np.ndarray] = None,
    method: str = "RK45",
) -> TimeSeries:
    """Adaptive Dormand-Prince 4(5) integration with dense output at ``t_eval``."""
    if not (1e-12 <= tol <= 1e-4):
        raise ValueError("tol must lie in [1e-12, 1e-4]")

    def blow_up(t, s):
        return 1e12 - (s[0] * s[0] + s[1] * s[1])

    blow_up.terminal = True
    sol = sp_integrate.solve_ivp(
        lambda t, s: rhs(s, model),
        (0.0, t_end),
        np.asarray(s0, dtype=float),
        method=method,
        t_eval=t_eval,
        rtol=tol,
        atol=tol,
        events=blow_up,
        dense_output=False,
    )
    if sol.status == 1:
        raise BlowUpError(float(sol.t_events[0][0]))
    if sol.status != 0:
        raise RuntimeError(f"integration failed: {sol.message}")
    return TimeSeries(sol.t, sol.y.T)


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    stable: bool


def linearized_spectrum(p: PhysicalParams, damping: float = 0.0, phi0: float = 0.0) -> Spectrum:
    """Eigenvalues of the Jacobian at the mean-field fixed point, sorted by imaginary part.

    ``phi0`` seeds the fixed-point search and selects the branch when several exist.
    """
    model = FullModel.from_params(p, damping)
    lam = np.linalg.eigvals(jacobian(fixed_point(p, phi0), model))
    lam = lam[np.lexsort((lam.real, lam.imag))]
    return Spectrum(lam, bool(np.all(lam.real <= 0)))


def mechanical_splitting(spec: Spectrum, center: float) -> float:
    """Gap between the two positive-frequency eigenvalues closest to ``center``."""
    lam = spec.eigenvalues
    pos = lam[lam.imag > 0]
    near = pos[np.argsort(np.abs(pos.imag - center))[:2]]
    return float(abs(near[0].imag - near[1].imag))


def beat_frequency(series: TimeSeries, s_ref: np.ndarray, smooth_period: float) -> float:
    """Energy-exchange frequency between the two oscillators.

    Uses the imbalance (dx2^2 + dp2^2) - (dxm^2 + dpm^2) of the deviations
    from ``s_ref``, box-filtered over ``smooth_period`` to remove the ripple at
    twice the carrier. Consecutive zero crossings are spaced by pi divided by
    the beat (normal-mode splitting) frequency; the spacing comes from a
    least-squares line through the crossing times.
    """
    t, y = series
    dev = y - s_ref
    e2 = dev[:, 2] ** 2 + dev[:, 3] ** 2
    em = dev[:, 4] ** 2 + dev[:, 5] ** 2
    sig = e2 - em
    dt = t[1] - t[0]
    w = max(1, int(round(smooth_period / dt)))
    kernel = np.ones(w) / w
    smooth = np.convolve(sig, kernel, mode="valid")
    ts = t[: len(smooth)] + 0.5 * (w - 1) * dt
    idx = np.nonzero(np.sign(smooth[:-1]) * np.sign(smooth[1:]) < 0)[0]
    if len(idx) < 3:
        raise ValueError(f"only {len(idx)} zero crossings; integrate longer")
    tc = ts[idx] - smooth[idx] * (ts[idx + 1] - ts[idx]) / (smooth[idx + 1] - smooth[idx])
    slope = np.polyfit(np.arange(len(tc)), tc, 1)[0]
    return math.pi / slope


def demodulate(t: np.ndarray, x: np.ndarray, omega: float, window: float, step: Optional[float] = None):
    """Sliding-window least-squares fit x ~ X cos(omega t) + P sin(omega t).

    Returns window centres and the fitted slowly varying quadratures, i.e. the
    interaction-picture (x, p) of an oscillator with carrier ``omega``.
    """
    step = window / 4 if step is None else step
    centres, X, P = [], [], []
    start = t[0]
    while start + window <= t[-1] + 1e-15:
        sel = (t >= start) & (t <= start + window)
        A = np.column_stack([np.cos(omega * t[sel]), np.sin(omega * t[sel])])
        coef, *_ = np.linalg.lstsq(A, x[sel], rcond=None)
        centres.append(start + 0.5 * window)
        X.append(coef[0])
        P.append(coef[1])
        start += step
    return np.array(centres), np.array(X), np.array(P)


def first_moment_deviation(
    p: PhysicalParams,
    amplitude: float = 1.0,
    rate: Optional[float] = None,
    carrier: Optional[float] = None,
    window_periods: float = 10.0,
    tol: float = 1e-9,
) -> float:
    """RMS deviation between demodulated full-model and effective-model trajectories.

    The mirror starts displaced by ``amplitude`` from the fixed point of the
    shift-compensated system; the run covers one transfer period plus one
    window. ``rate`` is the beamsplitter rate of the prediction (default
    ``Omega_ST``) and ``carrier`` the demodulation frequency (default the
    shifted mirror frequency). Deviations are relative to ``amplitude``.
    """
    d = derive(p)
    rate = d.Omega_ST if rate is None else rate
    carrier = d.Omega_m_shift if carrier is None else carrier
    pc = compensate_static_shift(p)
    model = FullModel.from_params(pc)
    s_ref = fixed_point(pc, phi0=d.Phi_ss)
    s0 = s_ref.copy()
    s0[4] += amplitude
    window = window_periods * 2 * math.pi / carrier
    t_end = math.pi / (2 * abs(rate)) + window
    t_eval = np.linspace(0.0, t_end, int(t_end * carrier / (2 * math.pi) * 40) + 1)
    series = integrate(s0, model, t_end, tol=tol, t_eval=t_eval)
    dev = series.y - s_ref
    out = []
    for j in (2, 4):
        c, X, P = demodulate(series.t, dev[:, j], carrier, window)
        out.append((X, P))
    c_sel = c <= math.pi / (2 * abs(rate)) + 0.5 * window
    pred = np.array([propagator(rate, tc) @ np.array([0.0, 0.0, amplitude, 0.0]) for tc in c[c_sel]])
    got = np.column_stack([out[0][0], out[0][1], out[1][0], out[1][1]])[c_sel]
    return float(np.sqrt(np.mean(np.sum((got - pred) ** 2, axis=1))) / amplitude)


def spring_frequencies(p: PhysicalParams) -> "tuple[float, float]":
    """Small-oscillation frequencies (mirror, BEC) of the mean-field model.

    In the bad-cavity limit the optical spring turns ``Omega_j`` into
    ``sqrt(Omega_j * Omega_j')``, i.e. half the shift quoted by ``derive``.
    """
    d = derive(p)
    return (
        math.sqrt(d.Omega_m * d.Omega_m_shift),
        math.sqrt(d.Omega_2 * d.Omega_2_shift),
    )


def stability_boundary(p: PhysicalParams, lo: float, hi: float, rtol: float = 1e-6) -> float:
    """Pump amplitude ``eta_mag`` at which the linearized spectrum turns unstable.

    ``lo`` must be stable and ``hi`` unstable; plain bisection on the flag.
    """

    def stable(eta):
        return linearized_spectrum(dataclasses.replace(p, eta_mag=eta)).stable

    if not stable(lo) or stable(hi):
        raise ValueError("bracket must run from a stable to an unstable pump amplitude")
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
