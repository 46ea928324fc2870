import dataclasses
import math

import numpy as np
import pytest

from bectransfer.full_model import (
    BlowUpError,
    FullModel,
    beat_frequency,
    compensate_static_shift,
    demodulate,
    first_moment_deviation,
    fixed_point,
    integrate,
    jacobian,
    linearized_spectrum,
    mechanical_splitting,
    rhs,
    spring_frequencies,
    stability_boundary,
)
from bectransfer.params import derive, paper_defaults, steady_state

from .conftest import symmetric_config


def decoupled(p):
    return dataclasses.replace(FullModel.from_params(p), xi_m=0.0, xi_2=0.0)


def test_undriven_origin_is_fixed_point():
    m = FullModel.from_params(dataclasses.replace(paper_defaults(), eta_mag=0.0))
    assert not rhs(np.zeros(6), m).any()


def test_decoupled_cavity_matches_closed_form():
    p = paper_defaults()
    m = decoupled(p)
    lam = complex(0.5 * p.kappa, p.Delta_c)
    a_ss = p.eta_mag / lam
    a0 = 3.0 - 2.0j
    t = np.linspace(0, 4 / p.kappa, 50)
    ser = integrate(np.array([a0.real, a0.imag, 0, 0, 0, 0]), m, t[-1], tol=1e-12, t_eval=t)
    exact = a_ss + (a0 - a_ss) * np.exp(-lam * t)
    got = ser.y[:, 0] + 1j * ser.y[:, 1]
    assert np.abs(got - exact).max() <= 1e-8 * max(1.0, abs(a_ss))


def test_ring_down_envelope():
    p = dataclasses.replace(paper_defaults(), eta_mag=0.0)
    m = decoupled(p)
    t = np.linspace(0, 10 / p.kappa, 40)
    ser = integrate(np.array([1.0, 0, 0, 0, 0, 0]), m, t[-1], tol=1e-12, t_eval=t)
    amp = np.hypot(ser.y[:, 0], ser.y[:, 1])
    assert np.abs(amp - np.exp(-0.5 * p.kappa * t)).max() <= 1e-8


def test_harmonic_oscillator_energy_drift():
    p = dataclasses.replace(paper_defaults(), eta_mag=0.0)
    m = decoupled(p)
    periods = 100
    ser = integrate(np.array([0, 0, 1.0, 0, 0.5, -0.5]), m, periods * 2 * math.pi / p.Omega_m, tol=1e-12)
    y = ser.y
    for j in (2, 4):
        e = y[:, j] ** 2 + y[:, j + 1] ** 2
        assert np.abs(e / e[0] - 1).max() <= 1e-8


def test_tolerance_range_and_blow_up():
    m = FullModel.from_params(paper_defaults())
    with pytest.raises(ValueError):
        integrate(np.zeros(6), m, 1e-6, tol=1e-3)
    with pytest.raises(ValueError):
        integrate(np.zeros(6), m, 1e-6, tol=1e-13)
    # negative cavity damping makes the field grow without bound
    grow = dataclasses.replace(m, kappa=-1e8)
    with pytest.raises(BlowUpError) as info:
        integrate(np.array([1.0, 0, 0, 0, 0, 0]), grow, 1e-5)
    assert 0 < info.value.t < 1e-5


def test_steady_state_is_fixed_point(matched_defaults):
    m = FullModel.from_params(matched_defaults)
    assert np.abs(rhs(fixed_point(matched_defaults), m)).max() <= 1e-10 * matched_defaults.kappa


def test_jacobian_matches_finite_differences(matched_defaults):
    m = FullModel.from_params(matched_defaults, damping=3.0)
    s = fixed_point(matched_defaults) + np.array([0.1, -0.2, 0.3, 0.4, -0.5, 0.6])
    J = jacobian(s, m)
    num = np.empty((6, 6))
    for k in range(6):
        h = 1e-6 * max(1.0, abs(s[k]))
        e = np.zeros(6)
        e[k] = h
        num[:, k] = (rhs(s + e, m) - rhs(s - e, m)) / (2 * h)
    assert np.abs(J - num).max() <= 1e-6 * np.abs(J).max()


def test_uncoupled_spectrum():
    p = paper_defaults(g=0.0)
    p = dataclasses.replace(p, m_m=1e40)  # xi_m -> 0
    d = derive(p)
    lam = linearized_spectrum(p).eigenvalues
    expected = [complex(-p.kappa / 2, s * d.Delta_tilde) for s in (1, -1)]
    expected += [s * 1j * p.Omega_m for s in (1, -1)] + [s * 1j * d.Omega_2 for s in (1, -1)]
    for z in expected:
        assert np.abs(lam - z).min() <= 1e-6 * abs(z)
    assert np.all(np.diff(lam.imag) >= 0)


def test_spectrum_closed_under_conjugation(matched_defaults):
    lam = linearized_spectrum(matched_defaults).eigenvalues
    for z in lam:
        assert np.abs(lam - np.conj(z)).min() <= 1e-9 * np.abs(lam).max()


def test_blue_detuned_probe_flagged(matched_defaults):
    flipped = dataclasses.replace(matched_defaults, Delta_c=-matched_defaults.Delta_c)
    spec = linearized_spectrum(flipped)
    assert not spec.stable
    assert spec.eigenvalues.real.max() > 0
    # without intrinsic mechanical damping even a weak pump destabilizes this side
    assert not linearized_spectrum(dataclasses.replace(flipped, eta_mag=0.1 * matched_defaults.kappa)).stable


def test_stability_boundary_regression(matched_defaults):
    # red side: the static shift drags the effective detuning across zero
    k = matched_defaults.kappa
    eta_c = stability_boundary(matched_defaults, 1.0 * k, 2.0 * k)
    assert eta_c / k == pytest.approx(1.1624169, rel=1e-5)
    with pytest.raises(ValueError):
        stability_boundary(matched_defaults, 2.0 * k, 3.0 * k)


def test_shift_compensation_restores_operating_point(matched_defaults):
    d = derive(matched_defaults)
    pc = compensate_static_shift(matched_defaults)
    ss = steady_state(pc, phi0=d.Phi_ss)
    assert pc.Delta_c + ss.Phi_ss == pytest.approx(d.Delta_tilde, rel=1e-9)
    assert ss.n_cav == pytest.approx(d.n_cav, rel=1e-9)
    assert linearized_spectrum(pc, phi0=d.Phi_ss).stable


def test_spring_frequencies_are_geometric_means():
    p = symmetric_config()
    d = derive(p)
    wm, w2 = spring_frequencies(p)
    assert wm == pytest.approx(math.sqrt(d.Omega_m * d.Omega_m_shift), rel=1e-15)
    assert wm == w2


def test_demodulate_recovers_quadratures():
    w = 2 * math.pi * 10.0
    t = np.linspace(0, 5, 5001)
    x = 0.7 * np.cos(w * t) - 0.2 * np.sin(w * t)
    c, X, P = demodulate(t, x, w, window=1.0)
    assert np.allclose(X, 0.7, atol=1e-10) and np.allclose(P, -0.2, atol=1e-10)


# -------- adiabatic elimination against the mean-field model (documentary)


@pytest.fixture(scope="module")
def beat_run():
    p = symmetric_config(0.5)
    d = derive(p)
    pc = compensate_static_shift(p)
    wm, _ = spring_frequencies(p)
    s_ref = fixed_point(pc, phi0=d.Phi_ss)
    s0 = s_ref.copy()
    s0[4] += 1.0
    T = 3 * math.pi / abs(d.Omega_ST)
    ts = np.linspace(0, T, int(T * wm / (2 * math.pi) * 40) + 1)
    series = integrate(s0, FullModel.from_params(pc), T, tol=1e-9, t_eval=ts)
    return p, d, pc, wm, s_ref, series


def test_normal_mode_splitting_equals_omega_st(beat_run):
    # the energy-consistent optical spring gives a splitting of |Omega_ST|,
    # half the 2|Omega_ST| implied by the effective Hamiltonian
    p, d, pc, wm, s_ref, series = beat_run
    assert p.kappa >= 100 * abs(d.Omega_ST)
    split = mechanical_splitting(linearized_spectrum(pc, phi0=d.Phi_ss), wm)
    assert split == pytest.approx(abs(d.Omega_ST), rel=0.02)
    beat = beat_frequency(series, s_ref, 2 * math.pi / wm)
    assert beat == pytest.approx(split, rel=1e-3)


def test_first_moments_follow_half_rate_beamsplitter():
    p = symmetric_config(0.5)
    d = derive(p)
    wm, _ = spring_frequencies(p)
    assert first_moment_deviation(p, rate=-0.5 * d.Omega_ST, carrier=wm) <= 0.05


@pytest.mark.xfail(strict=True, reason="effective model rate Omega_ST and carrier Omega' disagree with the "
                   "mean-field model (factor 2 and sign in the optical-spring potential)")
def test_first_moments_follow_effective_model_as_stated():
    p = symmetric_config(0.5)
    assert first_moment_deviation(p) <= 0.05
