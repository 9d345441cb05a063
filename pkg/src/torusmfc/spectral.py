"""Banded Fourier representation of real functions and measures on the torus.

A field on the d-dimensional torus [0,1)^d is stored through its complex
Fourier coefficients

    coeff(k) = integral of f(x) exp(-i 2 pi k.x) dx,   |k| <= K,

so that f(x) = sum_{|k|<=K} coeff(k) exp(i 2 pi k.x).  The band norm |k| is
the max-norm max_i |k_i|; the same norm enters the Sobolev weights
(1 + |k|^2)^q.  Real-valued fields satisfy the Hermitian symmetry
coeff(-k) = conj(coeff(k)), and every operation in this module preserves it
(symmetrizing explicitly after numerically risky steps).

Coefficients live in a dense complex array of shape (2K+1,)^d indexed by
k + K along each axis.  Flattening that cube in C order enumerates modes in
lexicographic order of (k_1, ..., k_d), which fixes the CSV serialization
layout once and for all.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.fft import next_fast_len

ModeIndex = tuple[int, ...]

# Hermitian / reality tolerance used by to_grid, relative to the coefficient
# mass of the field (an absolute 1e-12 gate would misfire on large fields).
IMAG_RESIDUE_TOL = 1e-12


def mode_range(band: int) -> np.ndarray:
    """Mode indices -band..band along one axis."""
    return np.arange(-band, band + 1)


def mode_cube(dim: int, band: int) -> np.ndarray:
    """All modes |k| <= band as an (n_modes, dim) int array, lexicographic."""
    axes = np.meshgrid(*([mode_range(band)] * dim), indexing="ij")
    return np.stack([a.reshape(-1) for a in axes], axis=-1)


def mode_max_norm_cube(dim: int, band: int) -> np.ndarray:
    """Cube of max-norms |k| with the coefficient-array layout."""
    r = np.abs(mode_range(band))
    out = np.zeros((2 * band + 1,) * dim, dtype=np.int64)
    for axis in range(dim):
        shape = [1] * dim
        shape[axis] = 2 * band + 1
        out = np.maximum(out, r.reshape(shape))
    return out


def heat_symbol_cube(dim: int, band: int) -> np.ndarray:
    """Cube of Laplacian eigenvalues 4 pi^2 (k_1^2 + ... + k_d^2)."""
    r = mode_range(band).astype(np.float64) ** 2
    out = np.zeros((2 * band + 1,) * dim)
    for axis in range(dim):
        shape = [1] * dim
        shape[axis] = 2 * band + 1
        out = out + r.reshape(shape)
    return 4.0 * np.pi**2 * out


def _flip(cube: np.ndarray) -> np.ndarray:
    """Index map k -> -k on a coefficient cube (reverse every axis)."""
    return cube[(slice(None, None, -1),) * cube.ndim]


def hermitian_residue(cube: np.ndarray) -> float:
    """Max deviation from coeff(-k) = conj(coeff(k))."""
    return float(np.max(np.abs(cube - np.conj(_flip(cube)))))


def hermitian_symmetrize(cube: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian subspace: average with the conjugate flip."""
    return 0.5 * (cube + np.conj(_flip(cube)))


@dataclass(frozen=True)
class SpectralField:
    """Fourier coefficients of a real field on the torus, banded by max mode.

    dim
        spatial dimension d >= 1.
    band
        largest retained max-norm |k| (K >= 0).
    coeffs
        complex array of shape (2K+1,)^d; entry [k_1+K, ..., k_d+K] is
        coeff(k).  Read-only after construction.
    """

    dim: int
    band: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.band < 0:
            raise ValueError(f"band must be >= 0, got {self.band}")
        expected = (2 * self.band + 1,) * self.dim
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != expected:
            raise ValueError(f"coeffs shape {c.shape} != {expected}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, dim: int, band: int) -> "SpectralField":
        return cls(dim, band, np.zeros((2 * band + 1,) * dim, np.complex128))

    @classmethod
    def constant(cls, dim: int, value: float = 1.0, band: int = 0) -> "SpectralField":
        cube = np.zeros((2 * band + 1,) * dim, np.complex128)
        cube[(band,) * dim] = value
        return cls(dim, band, cube)

    @classmethod
    def from_modes(cls, dim: int, band: int,
                   entries: dict[ModeIndex, complex]) -> "SpectralField":
        """Build a field from {mode: coefficient}; unset modes are zero."""
        cube = np.zeros((2 * band + 1,) * dim, np.complex128)
        for k, v in entries.items():
            if len(k) != dim or max(abs(ki) for ki in k) > band:
                raise ValueError(f"mode {k} outside band {band} in dim {dim}")
            cube[tuple(ki + band for ki in k)] = v
        return cls(dim, band, cube)

    def coeff(self, k: Sequence[int]) -> complex:
        """coeff(k); modes outside the band are zero by convention."""
        if len(k) != self.dim:
            raise ValueError(f"mode length {len(k)} != dim {self.dim}")
        if max(abs(int(ki)) for ki in k) > self.band:
            return 0.0 + 0.0j
        return complex(self.coeffs[tuple(int(ki) + self.band for ki in k)])

    def modes(self) -> np.ndarray:
        """(n_modes, dim) mode list in the stored lexicographic order."""
        return mode_cube(self.dim, self.band)

    def hermitian_residue(self) -> float:
        return hermitian_residue(self.coeffs)

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermitian_residue() <= tol

    def with_coeffs(self, cube: np.ndarray) -> "SpectralField":
        return SpectralField(self.dim, self.band, cube)


@dataclass(frozen=True)
class GridField:
    """Real samples of a field on the uniform grid x_j = j/G per axis."""

    dim: int
    resolution: int
    values: np.ndarray
    imag_residue: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        expected = (self.resolution,) * self.dim
        if v.shape != expected:
            raise ValueError(f"values shape {v.shape} != {expected}")
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def grid_points(dim: int, resolution: int) -> np.ndarray:
    """Grid coordinates as an (G^d, dim) array, C-ordered like the values."""
    x = np.arange(resolution) / resolution
    axes = np.meshgrid(*([x] * dim), indexing="ij")
    return np.stack([a.reshape(-1) for a in axes], axis=-1)


def alias_free_grid(band: int) -> int:
    """Default pseudo-spectral grid: >= 4*band+1, rounded FFT-friendly.

    Quadratic nonlinearities of band-`band` data live at band 2*band and are
    captured without aliasing on any grid of at least 4*band+1 points.
    """
    return int(next_fast_len(max(4 * band + 1, 1)))


def _slots(band: int, resolution: int) -> np.ndarray:
    """FFT-layout positions of modes -band..band on a grid of G points."""
    return mode_range(band) % resolution


def _cube_to_values(cube: np.ndarray, resolution: int) -> np.ndarray:
    """Inverse transform of a coefficient cube; complex values, no checks."""
    dim = cube.ndim
    band = (cube.shape[0] - 1) // 2
    spectrum = np.zeros((resolution,) * dim, np.complex128)
    spectrum[np.ix_(*([_slots(band, resolution)] * dim))] = cube
    return np.fft.ifftn(spectrum) * resolution**dim


def _values_to_cube(values: np.ndarray, band: int) -> np.ndarray:
    """Forward transform; extracts modes |k| <= band, no checks."""
    resolution = values.shape[0]
    spectrum = np.fft.fftn(values) / values.size
    return spectrum[np.ix_(*([_slots(band, resolution)] * values.ndim))]


def to_grid(f: SpectralField, resolution: int) -> GridField:
    """Evaluate the field on the uniform grid with G points per axis.

    Requires G >= 2*band+1 so that the mode placement is alias-free and the
    round trip with from_grid is exact.  Hermitian inputs give real values up
    to rounding; the imaginary residue is dropped and recorded, and a residue
    beyond tolerance (non-Hermitian input) is an error.
    """
    if resolution < 2 * f.band + 1:
        raise ValueError(
            f"grid {resolution} too small for band {f.band} (need >= {2 * f.band + 1})")
    values = _cube_to_values(f.coeffs, resolution)
    residue = float(np.max(np.abs(values.imag))) if values.size else 0.0
    scale = max(1.0, float(np.sum(np.abs(f.coeffs))))
    if residue > IMAG_RESIDUE_TOL * scale:
        raise ValueError(
            f"imaginary residue {residue:.3e} exceeds tolerance; "
            "field is not Hermitian-symmetric")
    return GridField(f.dim, resolution, values.real, imag_residue=residue)


def from_grid(g: GridField, band: int) -> SpectralField:
    """Trigonometric-interpolation coefficients of grid data up to `band`.

    Requires band <= (G-1)/2.  Exact inverse of to_grid for band-limited data;
    for denser data the result carries the usual aliasing of modes congruent
    mod G.  The output is symmetrized, so it is Hermitian even when the FFT
    rounding is not.
    """
    if band > (g.resolution - 1) // 2:
        raise ValueError(
            f"band {band} too large for grid {g.resolution} (need <= {(g.resolution - 1) // 2})")
    cube = _values_to_cube(g.values, band)
    return SpectralField(g.dim, band, hermitian_symmetrize(cube))


def dirichlet_truncate(f: SpectralField, n: int) -> SpectralField:
    """Keep the modes |k| <= n: the sharp Fourier truncation f * D^n.

    The output band is min(band(f), n); the kept coefficients are bit-equal
    to the input's.  Idempotent, and a contraction in every Sobolev norm.
    """
    if n < 0:
        raise ValueError(f"truncation band must be >= 0, got {n}")
    if n >= f.band:
        return f
    center = slice(f.band - n, f.band + n + 1)
    return SpectralField(f.dim, n, f.coeffs[(center,) * f.dim])


def embed(f: SpectralField, band: int) -> SpectralField:
    """Zero-pad to a larger band (workspace utility, not a truncation)."""
    if band < f.band:
        raise ValueError(f"embed target {band} below band {f.band}")
    if band == f.band:
        return f
    cube = np.zeros((2 * band + 1,) * f.dim, np.complex128)
    center = slice(band - f.band, band + f.band + 1)
    cube[(center,) * f.dim] = f.coeffs
    return SpectralField(f.dim, band, cube)


def sobolev_norm(f: SpectralField, q: float) -> float:
    """Weighted coefficient norm (sum (1+|k|^2)^q |coeff(k)|^2)^(1/2).

    q = 0 gives the L^2 norm by Parseval.  |k| is the max-norm.
    """
    w = (1.0 + mode_max_norm_cube(f.dim, f.band).astype(np.float64) ** 2) ** q
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))


def gradient(f: SpectralField) -> tuple[SpectralField, ...]:
    """Component i carries coefficients i*2*pi*k_i*coeff(k); band unchanged."""
    out = []
    for axis in range(f.dim):
        shape = [1] * f.dim
        shape[axis] = 2 * f.band + 1
        factor = 2j * np.pi * mode_range(f.band).reshape(shape)
        out.append(SpectralField(f.dim, f.band, f.coeffs * factor))
    return tuple(out)


def min_on_grid(f: SpectralField, resolution: int) -> float:
    """Minimum of the grid samples; the positivity monitor for densities."""
    return float(np.min(to_grid(f, resolution).values))


@dataclass(frozen=True)
class ProbabilityReport:
    """Margins behind an is_probability_coeffs verdict."""

    ok: bool
    mass_error: float
    hermitian_error: float
    min_value: float

    def __bool__(self) -> bool:
        return self.ok


def is_probability_coeffs(f: SpectralField, resolution: int,
                          tol: float = 1e-9) -> ProbabilityReport:
    """Membership test for coefficients of a probability measure.

    True iff |coeff(0) - 1| <= tol, Hermitian symmetry holds to tol, and the
    grid minimum is >= -tol.  The report carries all three margins.
    """
    mass_error = abs(f.coeff((0,) * f.dim) - 1.0)
    herm = f.hermitian_residue()
    if herm <= tol:
        sym = SpectralField(f.dim, f.band, hermitian_symmetrize(f.coeffs))
        mn = min_on_grid(sym, max(resolution, 2 * f.band + 1))
    else:
        mn = float("nan")
    ok = mass_error <= tol and herm <= tol and mn >= -tol
    return ProbabilityReport(bool(ok), float(mass_error), herm, mn)


def _common_band(f: SpectralField, g: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    band = max(f.band, g.band)
    return embed(f, band).coeffs, embed(g, band).coeffs


def l2_error(f: SpectralField, g: SpectralField) -> float:
    """L^2 distance by Parseval on the union band (missing modes are zero)."""
    cf, cg = _common_band(f, g)
    return float(np.sqrt(np.sum(np.abs(cf - cg) ** 2)))


def linf_error(f: SpectralField, g: SpectralField, resolution: int) -> float:
    """Sup distance by a scan of the common grid with G points per axis."""
    cf, cg = _common_band(f, g)
    band = max(f.band, g.band)
    diff = SpectralField(f.dim, band, cf - cg)
    grid = to_grid(diff, resolution)
    return float(np.max(np.abs(grid.values)))


def pair(f: SpectralField, mu: SpectralField) -> float:
    """Duality bracket <mu, f> = integral of f d(mu) = sum_k f(k) mu(-k).

    Coincides with the L^2 inner product when mu is a function; real for
    Hermitian inputs (the imaginary part is rounding and is dropped).
    """
    cf, cm = _common_band(f, mu)
    return float(np.sum(cf * _flip(cm)).real)


def truncation_tail_sum(dim: int, q: float, n: int, band: int | None = None) -> float:
    """Sum of (1+|k|^2)^(-q) over modes |k| > n (max-norm).

    With `band` given, the sum runs over n < |k| <= band only, which is the
    sharp Cauchy-Schwarz constant for fields stored at that band.  Without
    `band` the infinite sum is accumulated shell by shell until the relative
    increment falls below 1e-16 (requires q > dim/2 for convergence).
    """
    if band is not None:
        norms = mode_max_norm_cube(dim, band).astype(np.float64)
        mask = norms > n
        return float(np.sum((1.0 + norms[mask] ** 2) ** (-q)))
    if 2 * q <= dim:
        raise ValueError(f"tail sum diverges for q={q} <= dim/2")
    total = 0.0
    radius = n
    while True:
        radius += 1
        shell = (2 * radius + 1) ** dim - (2 * radius - 1) ** dim
        contribution = shell * (1.0 + radius**2) ** (-q)
        total += contribution
        if radius > n + 4 and contribution < 1e-16 * total:
            return total


def linf_truncation_constant(dim: int, q: float, n: int,
                             band: int | None = None) -> float:
    """Cauchy-Schwarz constant bounding the sup truncation error.

    ||f - f*D^n||_inf <= sqrt(tail_sum) * ||f||_{2,q}: the square root of
    truncation_tail_sum with the same arguments.
    """
    return float(np.sqrt(truncation_tail_sum(dim, q, n, band)))


def eval_at(f: SpectralField, points: np.ndarray) -> np.ndarray:
    """Evaluate the field at arbitrary points by direct mode summation.

    points: (n_pts, dim).  Cost grows with the full mode count, so this is
    for small bands (drift fields, probe evaluations); grid work should go
    through to_grid.
    """
    modes = f.modes().astype(np.float64)
    flat = f.coeffs.reshape(-1)
    return (np.exp(2j * np.pi * points @ modes.T) @ flat).real


def random_hermitian_field(rng: np.random.Generator, dim: int, band: int,
                           decay: float = 0.0) -> SpectralField:
    """Random real-valued field; coefficient amplitudes fall off like
    (1+|k|^2)^(-decay/2), so decay = q+1 lands comfortably in H^q."""
    shape = (2 * band + 1,) * dim
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    cube = hermitian_symmetrize(raw)
    if decay:
        norms = mode_max_norm_cube(dim, band).astype(np.float64)
        cube = cube * (1.0 + norms**2) ** (-decay / 2.0)
    return SpectralField(dim, band, cube)


def random_probability_field(rng: np.random.Generator, dim: int, band: int,
                             gamma: float, decay: float = 3.0) -> SpectralField:
    """Random probability density bounded below by gamma.

    The non-zero modes of a random Hermitian field are rescaled so that their
    total coefficient mass is 1-gamma, which pins min f >= gamma pointwise.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    f = random_hermitian_field(rng, dim, band, decay)
    cube = np.array(f.coeffs)
    cube[(band,) * dim] = 0.0
    mass = float(np.sum(np.abs(cube)))
    if mass > 0:
        cube *= (1.0 - gamma) / mass
    cube[(band,) * dim] = 1.0
    return SpectralField(dim, band, cube)


def add(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise sum on the union band."""
    cf, cg = _common_band(f, g)
    return SpectralField(f.dim, max(f.band, g.band), cf + cg)


def scale(f: SpectralField, c: float | complex) -> SpectralField:
    return SpectralField(f.dim, f.band, f.coeffs * c)


# ---------------------------------------------------------------------------
# CSV serialization: header k1,...,kd,re,im, rows in lexicographic mode order.
# repr() round-trips doubles exactly, so write/read is lossless.
# ---------------------------------------------------------------------------


def write_field_csv(f: SpectralField, path: str | Path) -> None:
    path = Path(path)
    modes = f.modes()
    flat = f.coeffs.reshape(-1)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"k{i + 1}" for i in range(f.dim)] + ["re", "im"])
        for row, c in zip(modes, flat):
            writer.writerow([*map(int, row), repr(float(c.real)), repr(float(c.imag))])


def read_field_csv(path: str | Path) -> SpectralField:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if len(header) < 3 or header[-2:] != ["re", "im"]:
            raise ValueError(f"{path}: expected header k1,...,kd,re,im")
        dim = len(header) - 2
        rows = list(reader)
    n_modes = len(rows)
    per_axis = round(n_modes ** (1.0 / dim))
    while per_axis**dim < n_modes:
        per_axis += 1
    if per_axis**dim != n_modes or per_axis % 2 != 1:
        raise ValueError(f"{path}: {n_modes} rows do not fill a mode cube")
    band = (per_axis - 1) // 2
    expected = mode_cube(dim, band)
    flat = np.empty(n_modes, np.complex128)
    for i, row in enumerate(rows):
        k = tuple(int(v) for v in row[:dim])
        if tuple(expected[i]) != k:
            raise ValueError(f"{path}: row {i} has mode {k}, expected "
                             f"{tuple(expected[i])} (lexicographic order)")
        flat[i] = complex(float(row[dim]), float(row[dim + 1]))
    return SpectralField(dim, band, flat.reshape((per_axis,) * dim))
