"""Wigner functions on rectangular phase-space grids.

Convention: x = c + c^dagger, p = i(c^dagger - c), so [x, p] = 2i, the vacuum
is W = exp(-(x^2 + p^2)/2) / (2 pi) and a coherent state |alpha> with real
alpha sits at x = 2 alpha. In this convention Tr(rho1 rho2) equals
4 pi * integral(W1 W2): rescaling x, p by 1/sqrt(2) to the [x, p] = i
convention, where the prefactor is 2 pi, halves the area element twice over.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
from scipy import fft, ndimage

CONVENTION = "x=c+c^dagger, p=i(c^dagger-c), vacuum variance 1, integral W dx dp = 1"


class GridError(ValueError):
    """Grid too small or incompatible for the requested operation."""


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    n_x: int
    p_min: float
    p_max: float
    n_p: int

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise GridError("grid bounds must be strictly increasing")
        if self.n_x < 2 or self.n_p < 2:
            raise GridError("grid needs at least 2 nodes per axis")

    @classmethod
    def square(cls, span: float = 8.0, n: int = 256) -> "GridSpec":
        return cls(-span, span, n, -span, span, n)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def p(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.n_p)

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_x - 1)

    @property
    def dp(self) -> float:
        return (self.p_max - self.p_min) / (self.n_p - 1)

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.p, indexing="ij")


DEFAULT_GRID = GridSpec.square(8.0, 256)


@dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled on a grid; ``values[i, j]`` is W(x_i, p_j)."""

    x_min: float
    x_max: float
    n_x: int
    p_min: float
    p_max: float
    n_p: int
    values: np.ndarray
    coarse: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.n_x, self.n_p):
            raise GridError(f"values shape {vals.shape} != ({self.n_x}, {self.n_p})")
        object.__setattr__(self, "values", vals)
        self.spec  # validates bounds

    @classmethod
    def from_spec(cls, spec: GridSpec, values: np.ndarray, coarse: bool = False) -> "WignerGrid":
        return cls(spec.x_min, spec.x_max, spec.n_x, spec.p_min, spec.p_max, spec.n_p, values, coarse)

    @property
    def spec(self) -> GridSpec:
        return GridSpec(self.x_min, self.x_max, self.n_x, self.p_min, self.p_max, self.n_p)

    @property
    def x(self) -> np.ndarray:
        return self.spec.x

    @property
    def p(self) -> np.ndarray:
        return self.spec.p

    def integrate(self, f: Optional[np.ndarray] = None) -> float:
        """Trapezoidal integral of ``f`` (default: W itself) over the grid."""
        f = self.values if f is None else f
        return float(np.trapezoid(np.trapezoid(f, self.p, axis=1), self.x))

    def with_values(self, values: np.ndarray) -> "WignerGrid":
        return WignerGrid.from_spec(self.spec, values, self.coarse)


def wigner_state(kind: str, grid: GridSpec = DEFAULT_GRID, alpha: float = 0.0, nbar: float = 0.0) -> WignerGrid:
    """Closed-form Wigner function of a vacuum, coherent, thermal or even cat state.

    ``alpha`` is the (real) coherent amplitude; the lobes of ``cat`` sit at
    x = +-2 alpha. A grid spacing wider than pi / (4 alpha) cannot resolve the
    cat fringes and sets ``coarse`` on the result.
    """
    X, P = grid.mesh()
    r2 = X * X + P * P
    coarse = False
    if kind == "vacuum":
        W = np.exp(-0.5 * r2) / (2 * math.pi)
    elif kind == "coherent":
        W = np.exp(-0.5 * ((X - 2 * alpha) ** 2 + P * P)) / (2 * math.pi)
    elif kind == "thermal":
        if nbar < 0:
            raise ValueError("nbar must be non-negative")
        var = 2 * nbar + 1
        W = np.exp(-0.5 * r2 / var) / (2 * math.pi * var)
    elif kind == "cat":
        norm = 2.0 * (1.0 + math.exp(-2.0 * alpha * alpha))
        W = (
            np.exp(-0.5 * ((X - 2 * alpha) ** 2 + P * P))
            + np.exp(-0.5 * ((X + 2 * alpha) ** 2 + P * P))
            + 2.0 * np.exp(-0.5 * r2) * np.cos(2 * alpha * P)
        ) / (2 * math.pi * norm)
        if alpha != 0 and max(grid.dx, grid.dp) > math.pi / (4 * abs(alpha)):
            coarse = True
            warnings.warn(
                f"grid spacing {max(grid.dx, grid.dp):.3g} cannot resolve cat fringes "
                f"(need <= {math.pi / (4 * abs(alpha)):.3g})",
                stacklevel=2,
            )
    else:
        raise ValueError(f"unknown state kind {kind!r}")
    return WignerGrid.from_spec(grid, W, coarse)


def rotation(theta: float) -> np.ndarray:
    """2x2 block that the propagator applies to the transferred mode.

    At theta = pi/2 it sends (x, p) to (-p, x), the mirror-to-BEC block of
    the quarter-period propagator.
    """
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _quarter_turns(theta: float) -> Optional[int]:
    q = theta / (0.5 * math.pi)
    k = round(q)
    if abs(q - k) < 1e-12:
        return k % 4
    return None


def _is_symmetric_square(spec: GridSpec) -> bool:
    return (
        spec.n_x == spec.n_p
        and spec.x_min == spec.p_min
        and spec.x_max == spec.p_max
        and spec.x_min == -spec.x_max
    )


def _quarter_permute(A: np.ndarray, k: int) -> np.ndarray:
    # exact index permutations on a symmetric square grid; B[i, j] = A at R(-k pi/2)(x_i, p_j)
    if k == 0:
        return A.copy()
    if k == 1:  # W_in(p, -x)
        return A.T[::-1, :].copy()
    if k == 2:  # W_in(-x, -p)
        return A[::-1, ::-1].copy()
    return A.T[:, ::-1].copy()  # W_in(-p, x)


def _shear(A: np.ndarray, shifts: np.ndarray, axis: int) -> np.ndarray:
    """Shift every line along ``axis`` by ``shifts`` samples (one per line), via FFT."""
    n = A.shape[axis]
    m = fft.next_fast_len(2 * n)
    k = 2 * math.pi * fft.fftfreq(m)
    if axis == 0:
        phase = np.exp(-1j * np.outer(k, shifts))
    else:
        phase = np.exp(-1j * np.outer(shifts, k))
    F = fft.fft(A, n=m, axis=axis) * phase
    out = fft.ifft(F, axis=axis).real
    return out[:n, :] if axis == 0 else out[:, :n]


def _rotate_values(W: WignerGrid, theta: float) -> np.ndarray:
    """Samples of W_in(R(-theta) z) on the grid of ``W``.

    Multiples of pi/2 on a symmetric square grid are index permutations. Any
    other angle is reduced to |phi| <= pi/4 by such a permutation and the
    rest done as three Fourier-space shears, which is exact for band-limited
    data (zero padding removes wrap-around). Other grids fall back to cubic
    spline interpolation.
    """
    k = _quarter_turns(theta)
    A = W.values
    spec = W.spec
    if k == 0:
        return A.copy()
    if not _is_symmetric_square(spec):
        X, P = spec.mesh()
        Rinv = rotation(-theta)
        xs = Rinv[0, 0] * X + Rinv[0, 1] * P
        ps = Rinv[1, 0] * X + Rinv[1, 1] * P
        ix = (xs - W.x_min) / spec.dx
        ip = (ps - W.p_min) / spec.dp
        return ndimage.map_coordinates(A, [ix, ip], order=3, mode="constant", cval=0.0)
    if k is not None:
        return _quarter_permute(A, k)
    turns = round(theta / (0.5 * math.pi))
    phi = theta - turns * 0.5 * math.pi
    A = _quarter_permute(A, turns % 4)
    # R(-phi) = Ux Up Ux with Ux = [[1, t], [0, 1]], Up = [[1, 0], [-s, 1]]
    t, s = math.tan(0.5 * phi), math.sin(phi)
    x, p = spec.x, spec.p
    # f(x + t p, p): shift along x by -t p_j / dx samples
    A = _shear(A, -t * p / spec.dx, axis=0)
    A = _shear(A, s * x / spec.dp, axis=1)
    A = _shear(A, -t * p / spec.dx, axis=0)
    return A


def _check_noise(N22: np.ndarray) -> np.ndarray:
    N22 = np.asarray(N22, dtype=float).reshape(2, 2)
    scale = max(1.0, float(np.abs(N22).max()))
    if abs(N22[0, 1] - N22[1, 0]) > 1e-12 * scale:
        raise ValueError("N22 must be symmetric")
    lam = np.linalg.eigvalsh(N22)
    if lam.min() < -1e-12 * scale:
        raise ValueError(f"N22 is not positive semidefinite (min eigenvalue {lam.min():.3e})")
    return 0.5 * (N22 + N22.T)


def gaussian_blur(W: WignerGrid, N22: np.ndarray) -> np.ndarray:
    """Convolve W with the centred Gaussian of covariance ``N22``.

    The product is formed in Fourier space with the exact characteristic
    function exp(-k.N.k/2) on a grid zero-padded to at least twice the linear
    size, so a singular or vanishing ``N22`` needs no special handling.
    """
    N22 = _check_noise(N22)
    if not N22.any():
        return W.values.copy()
    spec = W.spec
    sigma = math.sqrt(max(np.linalg.eigvalsh(N22).max(), 0.0))
    half_span = 0.5 * min(spec.x_max - spec.x_min, spec.p_max - spec.p_min)
    if 5.0 * sigma > half_span:
        raise GridError(
            f"noise kernel (sigma = {sigma:.3g}) is too wide for a grid of half-span "
            f"{half_span:.6g}; enlarge the half-span to more than {5.0 * sigma:.6g}"
        )
    nx, npp = W.values.shape
    sx, sp = fft.next_fast_len(2 * nx, real=True), fft.next_fast_len(2 * npp, real=True)
    F = fft.rfft2(W.values, s=(sx, sp))
    kx = 2 * math.pi * fft.fftfreq(sx, spec.dx)[:, None]
    kp = 2 * math.pi * fft.rfftfreq(sp, spec.dp)[None, :]
    F *= np.exp(-0.5 * (N22[0, 0] * kx * kx + 2 * N22[0, 1] * kx * kp + N22[1, 1] * kp * kp))
    return fft.irfft2(F, s=(sx, sp))[:nx, :npp]


def apply_channel_wigner(
    W_in: WignerGrid,
    theta: float,
    N22: np.ndarray,
    renormalize: bool = False,
) -> WignerGrid:
    """Single-mode channel: rotate by ``theta`` then add Gaussian noise ``N22``.

    Computes W_out(z) = int W_in(R(-theta)(z - w)) G_N22(w) dw, the output-mode
    block of the beamsplitter channel once the mirror state has been fully
    swapped in (theta = +-pi/2).
    """
    rotated = W_in.with_values(_rotate_values(W_in, theta))
    out = gaussian_blur(rotated, N22)
    if renormalize:
        mass = rotated.integrate(out)
        if mass != 0:
            out = out * (W_in.integrate() / mass)
    return W_in.with_values(out)


class Overlap(NamedTuple):
    trace_overlap: float
    normalized_overlap: float


def _same_grid(W1: WignerGrid, W2: WignerGrid) -> None:
    if W1.spec != W2.spec:
        raise GridError(f"grids differ: {W1.spec} vs {W2.spec}")


def overlap_fidelity(W1: WignerGrid, W2: WignerGrid) -> Overlap:
    _same_grid(W1, W2)
    cross = W1.integrate(W1.values * W2.values)
    n1 = W1.integrate(W1.values * W1.values)
    n2 = W2.integrate(W2.values * W2.values)
    return Overlap(4 * math.pi * cross, cross / math.sqrt(n1 * n2))


def marginals(W: WignerGrid) -> Tuple[np.ndarray, np.ndarray]:
    """Position and momentum distributions P(x), P(p)."""
    return np.trapezoid(W.values, W.p, axis=1), np.trapezoid(W.values, W.x, axis=0)


# ---------------------------------------------------------------- file formats


def write_csv(path, W: WignerGrid) -> None:
    X, P = W.spec.mesh()
    lines = ["x,p,w"]
    for xv, pv, wv in zip(X.ravel(), P.ravel(), W.values.ravel()):
        lines.append(f"{xv:.17g},{pv:.17g},{wv:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path) -> WignerGrid:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "x,p,w":
            raise ValueError(f"{path}: expected header 'x,p,w', got {header!r}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    xs = np.unique(data[:, 0])
    ps = np.unique(data[:, 1])
    if len(xs) * len(ps) != len(data):
        raise ValueError(f"{path}: nodes do not form a rectangular grid")
    values = data[:, 2].reshape(len(xs), len(ps))
    return WignerGrid(xs[0], xs[-1], len(xs), ps[0], ps[-1], len(ps), values)


def to_json(W: WignerGrid) -> str:
    return json.dumps(
        {
            "convention": CONVENTION,
            "x_min": W.x_min,
            "x_max": W.x_max,
            "n_x": W.n_x,
            "p_min": W.p_min,
            "p_max": W.p_max,
            "n_p": W.n_p,
            "layout": "values[i][j] = W(x_i, p_j)",
            "values": W.values.tolist(),
        }
    )


def from_json(text: str) -> WignerGrid:
    d = json.loads(text)
    return WignerGrid(d["x_min"], d["x_max"], d["n_x"], d["p_min"], d["p_max"], d["n_p"], np.array(d["values"]))


def render(path, W: WignerGrid, color: bool = True) -> None:
    """Write a plain-text PPM (``color``) or PGM heat map; p increases upward.

    The colour map is diverging about W = 0: red for positive, blue for
    negative, white at zero, scaled by max |W|.
    """
    img = W.values.T[::-1, :]
    h, w = img.shape
    scale = float(np.abs(img).max()) or 1.0
    if color:
        t = np.clip(img / scale, -1.0, 1.0)
        r = np.where(t < 0, 1.0 + t, 1.0)
        b = np.where(t > 0, 1.0 - t, 1.0)
        gch = 1.0 - np.abs(t)
        rgb = np.rint(255 * np.stack([r, gch, b], axis=-1)).astype(int)
        body = "\n".join(" ".join(str(v) for v in row.ravel()) for row in rgb)
        text = f"P3\n{w} {h}\n255\n{body}\n"
    else:
        lo, hi = float(img.min()), float(img.max())
        gray = np.rint(255 * (img - lo) / ((hi - lo) or 1.0)).astype(int)
        body = "\n".join(" ".join(str(v) for v in row) for row in gray)
        text = f"P2\n{w} {h}\n255\n{body}\n"
    with open(path, "w") as fh:
        fh.write(text)
