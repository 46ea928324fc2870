"""Physical inputs and every derived quantity of the reduced BEC-mirror model.

All frequencies are angular (rad/s) and all inputs are SI scalars. The pump
phase is fixed to zero, so only ``|eta|`` enters.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Optional, Tuple

from scipy import constants

HBAR = constants.hbar
C_LIGHT = constants.c
TWO_PI = 2.0 * math.pi


class ParameterError(ValueError):
    """Invalid physical input."""


class SteadyStateError(RuntimeError):
    """Mean-field fixed-point iteration did not converge."""

    def __init__(self, message: str, last: "SteadyState"):
        super().__init__(message)
        self.last = last


class BracketError(ValueError):
    """Root-finding bracket does not enclose a sign change."""

    def __init__(self, message: str, samples: Tuple[Tuple[float, float], ...] = ()):
        super().__init__(message)
        self.samples = samples


@dataclass(frozen=True)
class PhysicalParams:
    """Raw experimental inputs.

    ``Delta_c`` is read as the atom-shifted detuning when
    ``detuning_is_effective`` is true, otherwise as the bare laser-cavity
    detuning to which ``g**2 N_a / (2 Delta_a)`` is added.
    """

    m_m: float
    Omega_m: float
    L: float
    kappa: float
    Delta_c: float
    eta_mag: float
    lambda_l: float
    m_a: float
    N_a: int
    Delta_a: float
    g: float
    detuning_is_effective: bool = True

    def __post_init__(self):
        for name in ("m_m", "Omega_m", "L", "kappa", "lambda_l", "m_a"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive and finite, got {value!r}")
        for name in ("Delta_c", "eta_mag", "Delta_a", "g"):
            if not math.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if int(self.N_a) != self.N_a or self.N_a < 1:
            raise ParameterError(f"N_a must be an integer >= 1, got {self.N_a!r}")
        if self.eta_mag < 0:
            raise ParameterError("eta_mag must be >= 0")
        if self.Delta_a == 0:
            raise ParameterError("Delta_a = 0: the excited state cannot be adiabatically eliminated")


def paper_defaults(g: float = TWO_PI * 1e6, detuning_is_effective: bool = True) -> PhysicalParams:
    """Reference parameter set (6 ng mirror at 16 kHz, 25 000 Rb-87 atoms).

    ``g`` is not fixed by the experiment; pick it with :func:`match_frequencies`.
    """
    kappa = 2.6e7
    return PhysicalParams(
        m_m=6e-12,
        Omega_m=TWO_PI * 16e3,
        L=195e-6,
        kappa=kappa,
        Delta_c=0.1 * kappa,
        eta_mag=3.9 * kappa,
        lambda_l=794.98e-9,
        m_a=1.4432e-25,
        N_a=25000,
        Delta_a=-TWO_PI * 127e9,
        g=g,
        detuning_is_effective=detuning_is_effective,
    )


# SI unit of every DerivedParams field, emitted alongside the JSON record.
DERIVED_UNITS = {
    "xi": "rad/(s*m)",
    "x_zp": "m",
    "x_zp_full": "m",
    "xi_m": "rad/s",
    "xi_2": "rad/s",
    "Omega_2": "rad/s",
    "Delta_tilde": "rad/s",
    "n_cav": "1",
    "Phi_ss": "rad/s",
    "Omega_m_shift": "rad/s",
    "Omega_2_shift": "rad/s",
    "Omega_ST": "rad/s",
    "D_chi": "rad/s",
    "t_transfer": "s",
}


@dataclass(frozen=True)
class DerivedParams:
    """Effective parameters of the reduced two-oscillator model.

    ``x_zp`` is sqrt(hbar / (2 m Omega)), the width that multiplies ``xi`` to
    give ``xi_m``; ``x_zp_full`` is the sqrt(hbar / (m Omega)) variant used to
    quote the cat amplitude. ``Phi_ss`` is the linear-response phase shift
    evaluated at the closed-form photon number ``n_cav`` (which assumes a
    vanishing shift); use :func:`steady_state` for the self-consistent value.
    ``t_transfer`` is infinite when ``Omega_ST == 0``.
    """

    xi: float
    x_zp: float
    x_zp_full: float
    xi_m: float
    xi_2: float
    Omega_m: float
    Omega_2: float
    kappa: float
    Delta_tilde: float
    n_cav: float
    Phi_ss: float
    Omega_m_shift: float
    Omega_2_shift: float
    Omega_ST: float
    D_chi: float
    t_transfer: float

    @property
    def frequency_mismatch(self) -> float:
        return self.Omega_m_shift - self.Omega_2_shift

    def D_eff(self, convention: str = "symmetrized") -> float:
        """White-noise strength used for the classical quadrature SDE."""
        if convention == "symmetrized":
            return 0.5 * self.D_chi
        if convention == "raw":
            return self.D_chi
        raise ValueError(f"unknown noise convention {convention!r}")

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if math.isinf(out["t_transfer"]):
            out["t_transfer"] = None
        return out


def derive(p: PhysicalParams) -> DerivedParams:
    k = TWO_PI / p.lambda_l
    omega_c = TWO_PI * C_LIGHT / p.lambda_l
    xi = omega_c / p.L
    x_zp = math.sqrt(HBAR / (2.0 * p.m_m * p.Omega_m))
    x_zp_full = math.sqrt(HBAR / (p.m_m * p.Omega_m))
    xi_m = x_zp * xi
    g2 = p.g * p.g
    xi_2 = g2 * math.sqrt(2.0 * p.N_a) / (4.0 * p.Delta_a)
    Omega_2 = 2.0 * HBAR * k * k / p.m_a
    if p.detuning_is_effective:
        Delta_tilde = p.Delta_c
    else:
        Delta_tilde = p.Delta_c + g2 * p.N_a / (2.0 * p.Delta_a)

    lorentz = Delta_tilde * Delta_tilde + 0.25 * p.kappa * p.kappa
    assert lorentz > 0, "Delta_tilde**2 + kappa**2/4 vanished"
    eta2 = p.eta_mag * p.eta_mag
    n_cav = eta2 / lorentz
    # 4|eta|^2 / (Delta^2 + kappa^2/4)^2: common prefactor of shifts, coupling, noise
    c4 = 4.0 * eta2 / (lorentz * lorentz)
    Omega_ST = c4 * Delta_tilde * xi_2 * xi_m
    return DerivedParams(
        xi=xi,
        x_zp=x_zp,
        x_zp_full=x_zp_full,
        xi_m=xi_m,
        xi_2=xi_2,
        Omega_m=p.Omega_m,
        Omega_2=Omega_2,
        kappa=p.kappa,
        Delta_tilde=Delta_tilde,
        n_cav=n_cav,
        Phi_ss=-2.0 * n_cav * (xi_m * xi_m / p.Omega_m + xi_2 * xi_2 / Omega_2),
        Omega_m_shift=p.Omega_m - c4 * Delta_tilde * xi_m * xi_m,
        Omega_2_shift=Omega_2 - c4 * Delta_tilde * xi_2 * xi_2,
        Omega_ST=Omega_ST,
        D_chi=c4 * p.kappa,
        t_transfer=math.pi / (2.0 * abs(Omega_ST)) if Omega_ST != 0 else math.inf,
    )


@dataclass(frozen=True)
class SteadyState:
    a_s: complex
    Phi_ss: float
    x_m: float
    x_2: float
    n_cav: float
    iterations: int
    phase_shift_negligible: bool


def steady_state(
    p: PhysicalParams,
    max_iter: int = 100_000,
    damping: float = 0.5,
    rtol: float = 1e-12,
    phi0: float = 0.0,
) -> SteadyState:
    """Self-consistent mean-field fixed point of the three-mode model.

    Iterates ``Phi <- (1 - damping) Phi + damping F(Phi)`` where ``F`` is the
    phase shift produced by the radiation-pressure displacements at photon
    number ``|eta|^2 / ((Delta_tilde + Phi)^2 + kappa^2/4)``. Stops when
    successive iterates differ by less than ``rtol * kappa``. In the
    bistable regime the branch reached depends on the starting value ``phi0``.

    Raises:
        SteadyStateError: no convergence within ``max_iter`` (typically the
            bistable regime); the exception carries the last iterate.
    """
    d = derive(p)
    # Phi = -stiffness * n at the fixed point
    stiffness = 2.0 * (d.xi_m**2 / p.Omega_m + d.xi_2**2 / d.Omega_2)
    eta2 = p.eta_mag**2
    kap2 = 0.25 * p.kappa**2

    def photons(phi):
        return eta2 / ((d.Delta_tilde + phi) ** 2 + kap2)

    phi = float(phi0)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        target = -stiffness * photons(phi)
        new = (1.0 - damping) * phi + damping * target
        step = abs(new - phi)
        phi = new
        if step < rtol * p.kappa and abs(target - phi) < rtol * p.kappa:
            converged = True
            break

    n = photons(phi)
    x_m = 2.0 * d.xi_m * n / p.Omega_m
    x_2 = -2.0 * d.xi_2 * n / d.Omega_2
    phi = -d.xi_m * x_m + d.xi_2 * x_2
    a_s = p.eta_mag / complex(0.5 * p.kappa, d.Delta_tilde + phi)
    state = SteadyState(
        a_s=a_s,
        Phi_ss=phi,
        x_m=x_m,
        x_2=x_2,
        n_cav=n,
        iterations=it,
        phase_shift_negligible=abs(phi) <= 0.01 * abs(d.Delta_tilde),
    )
    if not converged:
        raise SteadyStateError(
            f"mean-field iteration did not converge in {max_iter} steps "
            f"(last Phi = {phi:.6e} rad/s); bistable regime?",
            state,
        )
    return state


FREE_PARAMETERS = ("g", "Delta_a", "Omega_m")


def _default_bracket(p: PhysicalParams, name: str) -> Tuple[float, float]:
    if name == "g":
        return TWO_PI * 1e3, TWO_PI * 1e7
    if name == "Omega_m":
        return 1e-3 * p.Omega_m, 1e3 * p.Omega_m
    raise ValueError(f"no default bracket for {name!r}; pass one explicitly")


def match_frequencies(
    p: PhysicalParams,
    free_parameter: str,
    bracket: Optional[Tuple[float, float]] = None,
    rtol: float = 1e-9,
    max_iter: int = 400,
) -> PhysicalParams:
    """Tune one input so the shifted oscillator frequencies coincide.

    Bisection on the residual ``Omega_m_shift - Omega_2_shift`` narrows the
    bracket, then secant steps (kept inside the bracket) polish the root until
    ``|residual| <= rtol * Omega_m``.
    """
    if free_parameter not in FREE_PARAMETERS:
        raise ValueError(f"free_parameter must be one of {FREE_PARAMETERS}, got {free_parameter!r}")

    def residual(v):
        return derive(dataclasses.replace(p, **{free_parameter: v})).frequency_mismatch

    tol = rtol * p.Omega_m
    if abs(derive(p).frequency_mismatch) <= tol:
        return p

    lo, hi = bracket if bracket is not None else _default_bracket(p, free_parameter)
    lo, hi = float(lo), float(hi)
    if lo == hi:
        raise ValueError("degenerate bracket: lower and upper bounds coincide")
    if lo > hi:
        lo, hi = hi, lo
    r_lo, r_hi = residual(lo), residual(hi)
    if r_lo == 0:
        return dataclasses.replace(p, **{free_parameter: lo})
    if r_hi == 0:
        return dataclasses.replace(p, **{free_parameter: hi})
    if (r_lo > 0) == (r_hi > 0):
        samples = tuple((v, residual(v)) for v in [lo + (hi - lo) * i / 8 for i in range(9)])
        raise BracketError(
            f"no sign change of Omega_m' - Omega_2' on [{lo:.6g}, {hi:.6g}] "
            f"(residuals {r_lo:.6g}, {r_hi:.6g})",
            samples,
        )

    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        r_mid = residual(mid)
        if abs(r_mid) <= tol:
            best = mid
            break
        if (r_mid > 0) == (r_lo > 0):
            lo, r_lo = mid, r_mid
        else:
            hi, r_hi = mid, r_mid
        if hi - lo <= 1e-6 * max(abs(lo), abs(hi)):
            break

    if best is None:
        # secant polish from the bracket ends
        x0, f0, x1, f1 = lo, r_lo, hi, r_hi
        for _ in range(max_iter):
            if f1 == f0:
                break
            x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
            if not (lo <= x2 <= hi):
                x2 = 0.5 * (lo + hi)
            f2 = residual(x2)
            if abs(f2) <= tol:
                best = x2
                break
            if (f2 > 0) == (r_lo > 0):
                lo, r_lo = x2, f2
            else:
                hi, r_hi = x2, f2
            x0, f0, x1, f1 = x1, f1, x2, f2
            if hi - lo <= 4 * math.ulp(max(abs(lo), abs(hi))):
                break
    if best is None:
        best = lo if abs(r_lo) <= abs(r_hi) else hi
        if abs(residual(best)) > tol:
            raise RuntimeError(
                f"frequency matching stalled at {free_parameter}={best!r} "
                f"with residual {residual(best):.3e} rad/s"
            )
    return dataclasses.replace(p, **{free_parameter: best})
