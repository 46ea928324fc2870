"""Effective beamsplitter channel on the four quadratures (x2, p2, xm, pm).

Quadratures are x = c + c^dagger and p = i(c^dagger - c), so the vacuum has
unit variance. The interaction-picture equations of motion are

    d/dt y = Omega_ST * M @ y + chi'(t) * v,   v = (0, -xi_2, 0, xi_m)

with a single scalar white noise chi' kicking both momenta.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .params import DerivedParams

LABELS = ("x2", "p2", "xm", "pm")

# Generator of the beamsplitter rotation; M @ M == -I.
M = np.array(
    [
        [0.0, 0.0, 0.0, -1.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ]
)

# Symplectic form for the ordering (x2, p2, xm, pm).
J = np.array(
    [
        [0.0, 1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
    ]
)


def _check_psd(mat: np.ndarray, name: str, atol: float = 1e-10) -> None:
    if not np.allclose(mat, mat.T, rtol=0, atol=1e-12 * max(1.0, np.abs(mat).max())):
        raise ValueError(f"{name} is not symmetric")
    lam = np.linalg.eigvalsh(0.5 * (mat + mat.T))
    if lam.min() < -atol * max(1.0, abs(lam).max()):
        raise ValueError(f"{name} is not positive semidefinite (min eigenvalue {lam.min():.3e})")


@dataclass(frozen=True)
class QuadratureState:
    """First and second moments of the two-mode state."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(4)
        cov = np.asarray(self.cov, dtype=float).reshape(4, 4)
        _check_psd(cov, "covariance")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def vacuum(cls) -> "QuadratureState":
        return cls(np.zeros(4), np.eye(4))

    def mode(self, which: str) -> "tuple[np.ndarray, np.ndarray]":
        """Mean and 2x2 covariance of mode ``'2'`` (BEC) or ``'m'`` (mirror)."""
        sl = {"2": slice(0, 2), "m": slice(2, 4)}[which]
        return self.mean[sl].copy(), self.cov[sl, sl].copy()


@dataclass(frozen=True)
class GaussianChannel:
    S: np.ndarray
    N: np.ndarray
    t: float


def propagator(Omega_ST: float, t: float) -> np.ndarray:
    """Exact symplectic propagator ``exp(Omega_ST t M) = cos I + sin M``."""
    theta = Omega_ST * t
    return math.cos(theta) * np.eye(4) + math.sin(theta) * M


def noise_vector(xi_2: float, xi_m: float) -> np.ndarray:
    return np.array([0.0, -xi_2, 0.0, xi_m])


def noise_covariance(Omega_ST: float, xi_2: float, xi_m: float, D_eff: float, t: float) -> np.ndarray:
    """Closed form of ``D_eff * int_0^t S(s) v v^T S(s)^T ds``.

    With ``S(s) v = cos(W s) v + sin(W s) M v`` the integrand only needs the
    integrals of cos^2, sin^2 and sin*cos, written with ``sinc`` so that
    ``Omega_ST = 0`` is handled without a special case.
    """
    if D_eff < 0:
        raise ValueError("D_eff must be non-negative")
    v = noise_vector(xi_2, xi_m)
    w = M @ v
    half = 0.5 * t
    osc = half * np.sinc(2.0 * Omega_ST * t / math.pi)  # sin(2Wt)/(4W)
    i_cc = half + osc
    i_ss = half - osc
    i_cs = 0.5 * Omega_ST * t * t * np.sinc(Omega_ST * t / math.pi) ** 2  # sin^2(Wt)/(2W)
    out = i_cc * np.outer(v, v) + i_ss * np.outer(w, w) + i_cs * (np.outer(v, w) + np.outer(w, v))
    return D_eff * out


def transfer_channel(
    dp: DerivedParams,
    t: Optional[float] = None,
    convention: str = "symmetrized",
    D_eff: Optional[float] = None,
) -> GaussianChannel:
    """Channel of the effective model after time ``t`` (default: transfer time)."""
    if t is None:
        t = dp.t_transfer
        if not math.isfinite(t):
            raise ValueError("Omega_ST = 0: no state transfer occurs")
    if D_eff is None:
        D_eff = dp.D_eff(convention)
    return GaussianChannel(
        S=propagator(dp.Omega_ST, t),
        N=noise_covariance(dp.Omega_ST, dp.xi_2, dp.xi_m, D_eff, t),
        t=t,
    )


def apply_channel_moments(state: QuadratureState, ch: GaussianChannel) -> QuadratureState:
    cov = ch.S @ state.cov @ ch.S.T + ch.N
    return QuadratureState(ch.S @ state.mean, 0.5 * (cov + cov.T))


@dataclass
class SDEEnsemble:
    """Recorded ensemble statistics; ``paths`` has shape (n_record, n_paths, 4)."""

    t: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    paths: Optional[np.ndarray] = None


def _path_increments(seed: int, first: int, count: int, n_steps: int) -> np.ndarray:
    # one Philox stream per path, keyed by (seed, path index)
    out = np.empty((count, n_steps))
    for k in range(count):
        ss = np.random.SeedSequence(entropy=seed, spawn_key=(first + k,))
        out[k] = np.random.Generator(np.random.Philox(ss)).standard_normal(n_steps)
    return out


def _rotate(y: np.ndarray, c: float, s: float) -> np.ndarray:
    # c*y + s*(M @ y) written per column; elementwise ops keep each path's
    # arithmetic independent of how paths are batched
    out = np.empty_like(y)
    out[:, 0] = c * y[:, 0] - s * y[:, 3]
    out[:, 1] = c * y[:, 1] + s * y[:, 2]
    out[:, 2] = c * y[:, 2] - s * y[:, 1]
    out[:, 3] = c * y[:, 3] + s * y[:, 0]
    return out


def sde_trajectory(
    dp: DerivedParams,
    seed: int,
    dt: float,
    t_end: float,
    n_paths: int,
    *,
    convention: str = "symmetrized",
    D_eff: Optional[float] = None,
    x0: Optional[Sequence[float]] = None,
    record_every: int = 1,
    keep_paths: bool = False,
    jobs: int = 1,
    scheme: str = "exponential",
    chunk_size: int = 1024,
) -> SDEEnsemble:
    """Monte-Carlo ensemble of the effective-model Langevin equation.

    ``scheme="exponential"`` integrates the rotation exactly over each step
    and adds the Wiener kick through the half-step propagator (noise
    covariance exact to second order in ``dt``); ``scheme="euler"`` is plain
    Euler-Maruyama. Every path draws from its own Philox stream derived from
    ``(seed, path index)``, so results do not depend on ``jobs``.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    if dt <= 0 or t_end < 0:
        raise ValueError("dt must be positive and t_end non-negative")
    if dp.Omega_ST != 0 and dt > 0.01 / abs(dp.Omega_ST):
        raise ValueError(
            f"dt = {dt:.3e} s exceeds the stability limit 0.01/|Omega_ST| = "
            f"{0.01 / abs(dp.Omega_ST):.3e} s"
        )
    if scheme not in ("exponential", "euler"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if D_eff is None:
        D_eff = dp.D_eff(convention)
    n_steps = int(round(t_end / dt))
    record_every = max(1, int(record_every))
    x0 = np.zeros(4) if x0 is None else np.asarray(x0, dtype=float).reshape(4)

    v = noise_vector(dp.xi_2, dp.xi_m)
    if scheme == "exponential":
        # midpoint rule for the noise integral over one step
        v = propagator(dp.Omega_ST, 0.5 * dt) @ v
    kick = v * math.sqrt(D_eff * dt)

    jobs_args = [
        (seed, first, min(chunk_size, n_paths - first), n_steps, record_every, x0,
         dp.Omega_ST, dt, kick, scheme)
        for first in range(0, n_paths, chunk_size)
    ]
    if jobs > 1 and len(jobs_args) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_integrate_chunk, jobs_args))
    else:
        parts = [_integrate_chunk(a) for a in jobs_args]
    rec = np.concatenate(parts, axis=1)

    t = np.arange(rec.shape[0]) * record_every * dt
    mean = rec.mean(axis=1)
    if n_paths > 1:
        dev = rec - mean[:, None, :]
        cov = np.einsum("tki,tkj->tij", dev, dev) / (n_paths - 1)
    else:
        cov = np.zeros((rec.shape[0], 4, 4))
    return SDEEnsemble(t=t, mean=mean, cov=cov, paths=rec if keep_paths else None)


def _integrate_chunk(args):
    (seed, first, count, n_steps, record_every, x0, Omega, dt, kick, scheme) = args
    dw = _path_increments(seed, first, count, n_steps)
    y = np.tile(x0, (count, 1))
    rec = np.empty((n_steps // record_every + 1, count, 4))
    rec[0] = y
    c, s = math.cos(Omega * dt), math.sin(Omega * dt)
    for n in range(n_steps):
        if scheme == "exponential":
            y = _rotate(y, c, s)
        else:
            y = y + _rotate(y, 0.0, Omega * dt)
        amp = dw[:, n]
        for j in range(4):
            if kick[j] != 0.0:
                y[:, j] += kick[j] * amp
        if (n + 1) % record_every == 0:
            rec[(n + 1) // record_every] = y
    return rec


def ensemble_columns() -> list:
    cols = ["t"] + [f"mean_{a}" for a in LABELS]
    cols += [f"cov_{LABELS[i]}{LABELS[j]}" for i in range(4) for j in range(i, 4)]
    return cols


def write_ensemble_csv(path, ens: SDEEnsemble) -> None:
    iu = np.triu_indices(4)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ensemble_columns())
        for k in range(len(ens.t)):
            row = [ens.t[k], *ens.mean[k], *ens.cov[k][iu]]
            w.writerow([format(float(x), ".17g") for x in row])


def read_ensemble_csv(path) -> SDEEnsemble:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if rows[0] != ensemble_columns():
        raise ValueError(f"unexpected header in {path}")
    data = np.array([[float(x) for x in r] for r in rows[1:]])
    iu = np.triu_indices(4)
    cov = np.zeros((len(data), 4, 4))
    cov[:, iu[0], iu[1]] = data[:, 5:]
    cov[:, iu[1], iu[0]] = data[:, 5:]
    return SDEEnsemble(t=data[:, 0], mean=data[:, 1:5], cov=cov)
