"""Brute-force truncated number-basis oracle.

Two-mode operators act on ``kron(mode_2, mode_m)``: mode 0 is the BEC side
mode and mode 1 the mirror, matching the quadrature order (x2, p2, xm, pm).
Nothing here reuses the closed forms of :mod:`bectransfer.gaussian` or
:mod:`bectransfer.phase_space`; the beamsplitter is a dense matrix
exponential of its generator.
"""
from __future__ import annotations

import math
import warnings
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from .phase_space import GridSpec, WignerGrid

MAX_DIM = 40


class TruncationError(ValueError):
    """Fock truncation too small for the requested state or grid."""


class SizeError(ValueError):
    """Requested Hilbert space exceeds the configured memory cap."""


def destroy(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def coherent_fock(alpha: complex, dim: int) -> np.ndarray:
    """Number-basis amplitudes of |alpha>, truncated (not renormalized)."""
    c = np.empty(dim, dtype=complex)
    c[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for n in range(1, dim):
        c[n] = c[n - 1] * alpha / math.sqrt(n)
    return c


def cat_tail_bound(alpha: float) -> int:
    a = abs(alpha)
    return int(math.ceil(a * a + 7 * a + 10))


def cat_state_fock(alpha: float, dim: int) -> np.ndarray:
    """Even cat (|alpha> + |-alpha>) / sqrt(N) in a ``dim``-level truncation.

    Normalized analytically, so the truncated norm reveals the discarded tail.
    """
    if dim < cat_tail_bound(alpha):
        raise TruncationError(
            f"dim = {dim} below the tail bound {cat_tail_bound(alpha)} for alpha = {alpha}"
        )
    c = coherent_fock(alpha, dim)
    c[1::2] = 0.0
    return 2.0 * c / math.sqrt(2.0 * (1.0 + math.exp(-2.0 * alpha * alpha)))


def ket_to_dm(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def validate_density_matrix(rho: np.ndarray, atol: float = 1e-10) -> None:
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    if np.abs(rho - rho.conj().T).max() > 1e-12:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix trace {tr!r} differs from 1")
    if np.linalg.eigvalsh(rho).min() < -atol:
        raise ValueError("density matrix is not positive semidefinite")


def two_mode_dim(rho: np.ndarray) -> int:
    d = int(round(math.sqrt(rho.shape[0])))
    if d * d != rho.shape[0]:
        raise ValueError(f"shape {rho.shape} is not a two-mode density matrix")
    return d


def beamsplitter_generator(dim: int) -> np.ndarray:
    """c_m^dagger c_2 + c_2^dagger c_m on the truncated two-mode space."""
    a = destroy(dim)
    eye = np.eye(dim)
    a2 = np.kron(a, eye)
    am = np.kron(eye, a)
    return am.conj().T @ a2 + a2.conj().T @ am


def beamsplitter_unitary(theta: float, dim: int, max_dim: int = MAX_DIM) -> np.ndarray:
    if dim > max_dim:
        raise SizeError(f"dim = {dim} exceeds the cap of {max_dim} per mode")
    return linalg.expm(-1j * theta * beamsplitter_generator(dim))


def evolve_beamsplitter(rho: np.ndarray, theta: float, max_dim: int = MAX_DIM) -> np.ndarray:
    """rho -> U rho U^dagger with U = exp(-i theta (c_m^dagger c_2 + c_2^dagger c_m)).

    The effective model's propagator ``exp(Omega_ST t M)`` corresponds to
    ``theta = -Omega_ST * t`` (the coupling enters the Hamiltonian with a
    minus sign).
    """
    U = beamsplitter_unitary(theta, two_mode_dim(rho), max_dim)
    out = U @ rho @ U.conj().T
    return 0.5 * (out + out.conj().T)


def partial_trace(rho: np.ndarray, keep: int) -> np.ndarray:
    d = two_mode_dim(rho)
    r = rho.reshape(d, d, d, d)
    if keep == 0:
        return np.einsum("ijkj->ik", r)
    if keep == 1:
        return np.einsum("ijil->jl", r)
    raise ValueError(f"keep must be 0 or 1, got {keep!r}")


def number_operator_total(dim: int) -> np.ndarray:
    n = np.diag(np.arange(dim, dtype=float))
    eye = np.eye(dim)
    return np.kron(n, eye) + np.kron(eye, n)


def quadrature_ops(dim: int, n_modes: int = 2) -> list:
    """[x2, p2, xm, pm] (or [x, p] for one mode) as dense matrices."""
    a = destroy(dim)
    eye = np.eye(dim)
    modes = [a] if n_modes == 1 else [np.kron(a, eye), np.kron(eye, a)]
    ops = []
    for c in modes:
        cd = c.conj().T
        ops += [c + cd, 1j * (cd - c)]
    return ops


def quadrature_moments(rho: np.ndarray, n_modes: int = 2) -> Tuple[np.ndarray, np.ndarray]:
    """Mean vector and symmetrized covariance of the quadratures."""
    dim = rho.shape[0] if n_modes == 1 else two_mode_dim(rho)
    ops = quadrature_ops(dim, n_modes)
    mean = np.array([np.trace(rho @ o).real for o in ops])
    k = len(ops)
    cov = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            sym = 0.5 * (ops[i] @ ops[j] + ops[j] @ ops[i])
            cov[i, j] = cov[j, i] = np.trace(rho @ sym).real - mean[i] * mean[j]
    return mean, cov


def gaussian_state_fock(
    alpha: complex, r: float, phi: float, nbar: float, dim: int, work_dim: Optional[int] = None
) -> np.ndarray:
    """D(alpha) S(r e^{i phi}) rho_thermal(nbar) S^dagger D^dagger, built by expm
    in ``work_dim`` levels and cropped to ``dim``."""
    W = work_dim or dim + 30
    a = destroy(W)
    ad = a.conj().T
    n = np.arange(W)
    if nbar > 0:
        pops = (nbar / (1 + nbar)) ** n / (1 + nbar)
    else:
        pops = (n == 0).astype(float)
    rho = np.diag(pops).astype(complex)
    zeta = r * np.exp(1j * phi)
    S = linalg.expm(0.5 * (np.conj(zeta) * a @ a - zeta * ad @ ad))
    D = linalg.expm(alpha * ad - np.conj(alpha) * a)
    rho = D @ S @ rho @ S.conj().T @ D.conj().T
    return rho[:dim, :dim]


def add_gaussian_noise_fock(
    rho: np.ndarray, N22: np.ndarray, order: int = 24, work_dim: Optional[int] = None
) -> np.ndarray:
    """Random-displacement channel rho -> int G_N(w) D(w) rho D(w)^dagger dw.

    ``w`` is a quadrature displacement (x, p), i.e. D(beta) with
    beta = (w_x + i w_p) / 2. The Gaussian average uses a tensor Gauss-Hermite
    rule in the principal axes of ``N22``.
    """
    dim = rho.shape[0]
    W = work_dim or dim + 30
    lam, vecs = np.linalg.eigh(np.asarray(N22, dtype=float))
    lam = np.clip(lam, 0.0, None)
    L = vecs * np.sqrt(lam)
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    a = destroy(W)
    ad = a.conj().T
    big = np.zeros((W, W), dtype=complex)
    big[:dim, :dim] = rho
    out = np.zeros((W, W), dtype=complex)
    for u, wu in zip(nodes, weights):
        for v, wv in zip(nodes, weights):
            w = math.sqrt(2.0) * (L @ np.array([u, v]))
            beta = 0.5 * complex(w[0], w[1])
            D = linalg.expm(beta * ad - np.conj(beta) * a)
            out += (wu * wv / math.pi) * (D @ big @ D.conj().T)
    out = out[:dim, :dim]
    return 0.5 * (out + out.conj().T)


def wigner_from_fock(rho: np.ndarray, grid: GridSpec) -> WignerGrid:
    """Wigner function of a one-mode density matrix via displaced parity.

    W(x, p) = (1/2pi) sum_{m,n} rho_{mn} <n| D(b) Pi D(b)^dagger |m>, b = (x + ip)/2.
    For n = m + k the matrix element is T_m^(k) (2b)^k exp(-2|b|^2), where
    T_m^(k) = (-1)^m sqrt(m!/(m+k)!) L_m^(k)(4|b|^2) is generated by the
    forward three-term Laguerre recurrence.
    """
    dim = rho.shape[0]
    if min(grid.x_max, -grid.x_min, grid.p_max, -grid.p_min) < 2 * math.sqrt(dim):
        # number states near the truncation edge reach |x| ~ 2 sqrt(dim)
        warnings.warn(
            f"grid half-extent below 2*sqrt(dim) = {2 * math.sqrt(dim):.3g}; "
            "high number states may be clipped",
            stacklevel=2,
        )
    X, P = grid.mesh()
    b = 0.5 * (X + 1j * P)
    r = 4.0 * (b.real**2 + b.imag**2)
    gauss = np.exp(-0.5 * r)
    two_b = 2.0 * b
    acc = np.zeros(X.shape)
    power = np.ones(X.shape, dtype=complex)  # (2b)^k
    for k in range(dim):
        t_prev = np.zeros(X.shape)
        t_cur = np.full(X.shape, 1.0 / math.sqrt(math.factorial(k)))
        diag_sum = np.zeros(X.shape, dtype=complex)
        for m in range(dim - k):
            diag_sum += rho[m, m + k] * t_cur
            t_next = -((2 * m + 1 + k - r) * t_cur + math.sqrt(m * (m + k)) * t_prev) / math.sqrt(
                (m + 1) * (m + k + 1)
            )
            t_prev, t_cur = t_cur, t_next
        term = (diag_sum * power).real
        acc += term if k == 0 else 2.0 * term
        power = power * two_b
    return WignerGrid.from_spec(grid, acc * gauss / (2 * math.pi))


def transfer_via_fock(rho_m: np.ndarray, angle: float, max_dim: int = MAX_DIM) -> np.ndarray:
    """Mirror state -> BEC state after the beamsplitter rotation ``angle = Omega_ST t``.

    The BEC side mode starts in vacuum; returns the reduced BEC density matrix.
    """
    dim = rho_m.shape[0]
    vac = np.zeros((dim, dim), dtype=complex)
    vac[0, 0] = 1.0
    rho = evolve_beamsplitter(np.kron(vac, rho_m), -angle, max_dim)
    return partial_trace(rho, keep=0)
