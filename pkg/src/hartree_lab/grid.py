"""
Periodic box discretization and the unitary spectral transform.

The box is the torus [-L/2, L/2)^d sampled with n points per axis. Wavenumbers
follow the FFT ordering, with the Nyquist index carried at its negative value:

    k = [0, 1, ..., n/2 - 1, -n/2, ..., -1],    xi_k = (2 pi / L) k

Both transform directions are scaled by 1/sqrt(M), M = n^d, so the discrete
Plancherel identity sum |u_j|^2 == sum |u_hat_k|^2 is exact. Continuum
integrals are recovered with the cell volume dV = (L/n)^d, e.g.

    ||u||_{L^2}^2 = dV * sum_j |u_j|^2 = dV * sum_k |u_hat_k|^2

Snapshot files
--------------
A snapshot is one ASCII header line followed by raw little-endian float64
pairs (re, im) in C (row-major) order over the lattice:

    HARTREE-SNAPSHOT v1 d=<d> n=<n> L=<repr float> rep=<physical|spectral>\\n
    <n^d * 2 float64 values>
"""

from __future__ import annotations

import functools
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Literal, Union

import numpy as np
import scipy.fft as sfft

Representation = Literal["physical", "spectral"]

_SNAPSHOT_MAGIC = "HARTREE-SNAPSHOT v1"


@dataclass(frozen=True)
class Grid:
    """Periodic box [-L/2, L/2)^d with ``n`` modes per axis.

    Use :func:`make_grid` for validated construction. Direct construction only
    checks ``n >= 2`` and ``L > 0`` so that small odd lattices (e.g. 3^3, used by
    brute-force multilinear oracles) remain expressible.
    """

    d: int
    n: int
    L: float

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.n < 2:
            raise ValueError(f"need at least 2 modes per axis, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"box length must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def n_modes(self) -> int:
        return self.n**self.d

    @property
    def dx(self) -> float:
        return self.L / self.n

    @property
    def dV(self) -> float:
        return self.dx**self.d

    @property
    def dk(self) -> float:
        """Lattice spacing in frequency space, 2 pi / L."""
        return 2.0 * np.pi / self.L

    @property
    def nyquist(self) -> float:
        """Largest per-axis frequency magnitude, pi n / L (n even) or its odd analogue."""
        return self.dk * (self.n // 2)

    @functools.cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers along one axis in FFT order (Nyquist negative)."""
        return np.rint(np.fft.fftfreq(self.n, d=1.0 / self.n)).astype(np.int64)

    @functools.cached_property
    def xi_axis(self) -> np.ndarray:
        return self.dk * self.wavenumbers

    @functools.cached_property
    def xi_axis_odd(self) -> np.ndarray:
        """Per-axis frequencies for odd symbols: the Nyquist entry is zeroed."""
        xi = self.xi_axis.copy()
        if self.n % 2 == 0:
            xi[self.n // 2] = 0.0
        return xi

    def axis_view(self, values: np.ndarray, axis: int) -> np.ndarray:
        """Reshape a 1D per-axis array so it broadcasts along ``axis``."""
        shape = [1] * self.d
        shape[axis] = self.n
        return values.reshape(shape)

    @functools.cached_property
    def xi2(self) -> np.ndarray:
        """|xi|^2 on the full lattice."""
        out = np.zeros(self.shape)
        for a in range(self.d):
            out = out + self.axis_view(self.xi_axis**2, a)
        return out

    @functools.cached_property
    def xi_norm(self) -> np.ndarray:
        return np.sqrt(self.xi2)

    @functools.cached_property
    def x_axis(self) -> np.ndarray:
        return -0.5 * self.L + self.dx * np.arange(self.n)

    def coordinates(self) -> list[np.ndarray]:
        """Broadcastable physical coordinate arrays, one per axis."""
        return [self.axis_view(self.x_axis, a) for a in range(self.d)]

    def wrap(self, k: np.ndarray) -> np.ndarray:
        """Map integer wavenumbers (any integers) to the FFT representative range."""
        n = self.n
        return (np.asarray(k) + n // 2) % n - n // 2

    def index_of(self, k: np.ndarray) -> np.ndarray:
        """Array index (mod n) of integer wavenumbers."""
        return np.asarray(k) % self.n


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def make_grid(d: int, n: int, L: float) -> Grid:
    """Validated grid constructor: ``n`` must be a power of two, at least 4."""
    if int(d) != d or d < 1:
        raise ValueError(f"dimension must be a positive integer, got {d}")
    if int(n) != n or not _is_power_of_two(int(n)) or n < 4:
        raise ValueError(f"modes per axis must be a power of two >= 4, got {n}")
    if not L > 0:
        raise ValueError(f"box length must be positive, got {L}")
    return Grid(int(d), int(n), float(L))


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples on a grid, held in one of two representations."""

    grid: Grid
    values: np.ndarray
    representation: Representation = "physical"

    def __post_init__(self) -> None:
        if self.representation not in ("physical", "spectral"):
            raise ValueError(f"unknown representation {self.representation!r}")
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid shape {self.grid.shape}")
        object.__setattr__(self, "values", values)

    def physical(self) -> "Field":
        return transform(self, "physical")

    def spectral(self) -> "Field":
        return transform(self, "spectral")

    def with_values(self, values: np.ndarray, representation: Representation | None = None) -> "Field":
        return Field(self.grid, values, representation or self.representation)

    def __add__(self, other: "Field") -> "Field":
        other = transform(other, self.representation)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        other = transform(other, self.representation)
        return self.with_values(self.values - other.values)

    def __mul__(self, c: complex) -> "Field":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def conj(self) -> "Field":
        """Complex conjugate field (spectral input maps to conj(u_hat(-xi)))."""
        if self.representation == "physical":
            return self.with_values(np.conj(self.values))
        return self.with_values(conj_spectrum(self.values))

    def norm(self) -> float:
        """Discrete L^2 norm sqrt(dV * sum |u|^2), identical in both representations."""
        return float(np.sqrt(self.grid.dV * np.vdot(self.values, self.values).real))


def fft(values: np.ndarray) -> np.ndarray:
    return sfft.fftn(values, norm="ortho")


def ifft(values: np.ndarray) -> np.ndarray:
    return sfft.ifftn(values, norm="ortho")


def negate_index(values: np.ndarray) -> np.ndarray:
    """Return ``a`` with ``a_new[k] = a[-k]`` on every axis (indices mod n)."""
    axes = tuple(range(values.ndim))
    return np.roll(np.flip(values, axis=axes), 1, axis=axes)


def conj_spectrum(uh: np.ndarray) -> np.ndarray:
    """Spectrum of the conjugate field: conj(u_hat(-xi))."""
    return np.conj(negate_index(uh))


def transform(f: Field, target: Representation) -> Field:
    """Switch ``f`` to ``target`` representation; a no-op when already there."""
    if target not in ("physical", "spectral"):
        raise ValueError(f"unknown representation {target!r}")
    if f.representation == target:
        return f
    if target == "spectral":
        return Field(f.grid, fft(f.values), "spectral")
    return Field(f.grid, ifft(f.values), "physical")


SymbolLike = Union[np.ndarray, Callable[[Grid], np.ndarray], Any]


def evaluate_symbol(sigma: SymbolLike, grid: Grid) -> np.ndarray:
    """Evaluate a symbol on ``grid``'s lattice.

    ``sigma`` may be an array of lattice shape, a callable ``grid -> array``, or
    any object with an ``evaluate(grid)`` method (see ``multipliers.SymbolSpec``).
    """
    if hasattr(sigma, "evaluate"):
        values = sigma.evaluate(grid)
    elif callable(sigma):
        values = sigma(grid)
    else:
        values = sigma
    values = np.broadcast_to(np.asarray(values), grid.shape)
    if not np.all(np.isfinite(values)):
        raise ValueError("symbol is singular on the lattice; declare a zero-mode rule")
    return values


def apply_symbol(f: Field, sigma: SymbolLike) -> Field:
    """Fourier multiplier u_hat -> sigma(xi) u_hat; the result keeps f's representation."""
    weights = evaluate_symbol(sigma, f.grid)
    out = Field(f.grid, transform(f, "spectral").values * weights, "spectral")
    return transform(out, f.representation)


def plane_wave(grid: Grid, k: tuple[int, ...], amplitude: complex = 1.0) -> Field:
    """amplitude * exp(i xi_k . x) sampled on the grid (integer wavenumber ``k``)."""
    phase = np.zeros(grid.shape)
    for a, xa in enumerate(grid.coordinates()):
        phase = phase + grid.dk * k[a] * xa
    return Field(grid, amplitude * np.exp(1j * phase), "physical")


def save_snapshot(path: str | Path, f: Field) -> None:
    g = f.grid
    header = f"{_SNAPSHOT_MAGIC} d={g.d} n={g.n} L={g.L!r} rep={f.representation}\n"
    data = np.empty(f.values.size * 2, dtype="<f8")
    flat = f.values.ravel(order="C")
    data[0::2] = flat.real
    data[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.tobytes())


def load_snapshot(path: str | Path) -> Field:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").strip()
        payload = fh.read()
    if not header.startswith(_SNAPSHOT_MAGIC):
        raise ValueError(f"{path}: not a snapshot file")
    fields = dict(item.split("=", 1) for item in header[len(_SNAPSHOT_MAGIC):].split())
    grid = Grid(int(fields["d"]), int(fields["n"]), float(fields["L"]))
    data = np.frombuffer(payload, dtype="<f8")
    if data.size != 2 * grid.n_modes:
        raise ValueError(f"{path}: expected {2 * grid.n_modes} floats, found {data.size}")
    values = (data[0::2] + 1j * data[1::2]).reshape(grid.shape)
    return Field(grid, values, fields["rep"])
