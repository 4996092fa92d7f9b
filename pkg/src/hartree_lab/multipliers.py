"""
Fourier multipliers: the I-method smoothing symbol m, Japanese bracket and
Riesz symbols, sharp Littlewood-Paley shells, and the operator I itself.

The smoothing symbol is the continuous min-form profile

    m(r) = min(1, (N / r)^(1 - s)),    r = |xi|,

which equals 1 for r <= N and (N/r)^(1-s) for r >= N. It is radial, positive,
nonincreasing, and m == 1 identically when s == 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .grid import Field, Grid, apply_symbol, transform


@dataclass(frozen=True)
class IParams:
    """Frequency threshold ``N`` and target regularity ``s`` of the I-operator."""

    N: float
    s: float

    def __post_init__(self) -> None:
        if not self.N >= 1:
            raise ValueError(f"threshold N must be >= 1, got {self.N}")
        if not 0 < self.s <= 1:
            raise ValueError(f"regularity s must lie in (0, 1], got {self.s}")


def m_of_radius(r: np.ndarray | float, p: IParams) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if p.s == 1:
        return np.ones_like(r)
    safe = np.where(r > p.N, r, p.N)
    return np.where(r > p.N, (p.N / safe) ** (1.0 - p.s), 1.0)


def m_eval(xi: np.ndarray, p: IParams) -> np.ndarray:
    """m at frequency vector(s) ``xi`` (last axis indexes components)."""
    xi = np.asarray(xi, dtype=float)
    return m_of_radius(np.sqrt(np.sum(xi * xi, axis=-1)), p)


def i_operator(f: Field, p: IParams) -> Field:
    """I f, the multiplier m(xi) applied to f; keeps f's representation.

    For s = 1 the symbol is identically 1 and f is returned unchanged (no
    transform round trip).
    """
    if p.s == 1:
        return f
    return apply_symbol(f, IOp(p))


def bracket(r: np.ndarray) -> np.ndarray:
    """Japanese bracket <xi> = (1 + |xi|^2)^(1/2) from |xi|."""
    return np.sqrt(1.0 + np.asarray(r, dtype=float) ** 2)


# ---------------------------------------------------------------------------
# Symbol descriptors
# ---------------------------------------------------------------------------


class SymbolSpec:
    """Base class for serializable lattice symbols."""

    name: str = ""

    def evaluate(self, grid: Grid) -> np.ndarray:  # pragma: no cover - interface
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


@dataclass(frozen=True)
class IOp(SymbolSpec):
    params: IParams
    name = "iop"

    def evaluate(self, grid: Grid) -> np.ndarray:
        return m_of_radius(grid.xi_norm, self.params)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "N": self.params.N, "s": self.params.s}


@dataclass(frozen=True)
class Bracket(SymbolSpec):
    """<xi>^s."""

    s: float
    name = "bracket"

    def evaluate(self, grid: Grid) -> np.ndarray:
        return bracket(grid.xi_norm) ** self.s

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "s": self.s}


@dataclass(frozen=True)
class Riesz(SymbolSpec):
    """|xi|^alpha with an explicit value at xi = 0 when alpha < 0."""

    alpha: float
    zero_mode: float | None = None
    name = "riesz"

    def __post_init__(self) -> None:
        if self.alpha < 0 and self.zero_mode is None:
            raise ValueError("negative-order Riesz symbol needs an explicit zero-mode value")

    def evaluate(self, grid: Grid) -> np.ndarray:
        r = grid.xi_norm
        if self.alpha == 0:
            out = np.ones_like(r)
        else:
            with np.errstate(divide="ignore"):
                out = np.where(r > 0, r, 1.0) ** self.alpha
        if self.zero_mode is not None:
            out = np.where(r > 0, out, self.zero_mode)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "alpha": self.alpha, "zero_mode": self.zero_mode}


@dataclass(frozen=True)
class LPShell(SymbolSpec):
    """Indicator of the dyadic shell with index ``j`` (see :func:`shell_index`)."""

    j: int
    name = "lpshell"

    def evaluate(self, grid: Grid) -> np.ndarray:
        return (shell_index(grid.xi_norm) == self.j).astype(float)

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "j": self.j}


@dataclass(frozen=True)
class Product(SymbolSpec):
    factors: tuple[SymbolSpec, ...] = field(default_factory=tuple)
    name = "product"

    def evaluate(self, grid: Grid) -> np.ndarray:
        out = np.ones(grid.shape)
        for f in self.factors:
            out = out * f.evaluate(grid)
        return out

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "factors": [f.to_dict() for f in self.factors]}


def symbol_from_dict(spec: dict[str, Any]) -> SymbolSpec:
    """Inverse of ``SymbolSpec.to_dict``."""
    spec = dict(spec)
    name = spec.pop("name")
    if name == "iop":
        return IOp(IParams(spec["N"], spec["s"]))
    if name == "bracket":
        return Bracket(spec["s"])
    if name == "riesz":
        return Riesz(spec["alpha"], spec.get("zero_mode"))
    if name == "lpshell":
        return LPShell(int(spec["j"]))
    if name == "product":
        return Product(tuple(symbol_from_dict(f) for f in spec["factors"]))
    raise ValueError(f"unknown symbol {name!r}")


# ---------------------------------------------------------------------------
# Littlewood-Paley
# ---------------------------------------------------------------------------

LOW_BLOCK = 1.0


def shell_index(r: np.ndarray) -> np.ndarray:
    """Dyadic shell of radius r: 0 for r < 1, j >= 1 for 2^(j-1) <= r < 2^j."""
    r = np.asarray(r, dtype=float)
    with np.errstate(divide="ignore"):
        j = np.floor(np.log2(np.where(r >= LOW_BLOCK, r, 1.0))).astype(np.int64) + 1
    return np.where(r >= LOW_BLOCK, j, 0)


def lp_shells(grid: Grid) -> list[int]:
    """Shell indices that contain at least one lattice point."""
    return sorted(int(j) for j in np.unique(shell_index(grid.xi_norm)))


def lp_project(f: Field, shell: int) -> Field:
    """Sharp projection of f onto one dyadic shell (zero beyond the lattice)."""
    if shell < 0:
        raise ValueError(f"shell index must be nonnegative, got {shell}")
    mask = shell_index(f.grid.xi_norm) == shell
    out = transform(f, "spectral")
    out = out.with_values(np.where(mask, out.values, 0.0))
    return transform(out, f.representation)


def monotonicity_probe(p: IParams, exponent: float, r_max: float | None = None, samples: int = 2048) -> bool:
    """Is r -> m(r) r^exponent nondecreasing on r >= N?

    Radii are sampled geometrically on [N/4, r_max] (default 64 N); only the part
    with r >= N is judged. For the min-form profile the answer is
    ``exponent >= 1 - s``.
    """
    r_max = 64.0 * p.N if r_max is None else r_max
    r = np.geomspace(p.N / 4.0, r_max, samples)
    r = r[r >= p.N]
    g = m_of_radius(r, p) * r**exponent
    return bool(np.all(np.diff(g) >= -1e-12 * np.abs(g[1:])))


def critical_threshold(gamma: float) -> float:
    """Regularity threshold 4(gamma - 2) / (3 gamma - 4)."""
    return 4.0 * (gamma - 2.0) / (3.0 * gamma - 4.0)


def is_dyadic(N: float) -> bool:
    return N >= 1 and float(N).is_integer() and math.log2(N).is_integer()
