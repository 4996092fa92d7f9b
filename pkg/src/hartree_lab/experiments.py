"""
Scaling bookkeeping, initial-data families, N-sweeps of almost conservation and
commutator decay, and scattering diagnostics.

Scaling conventions
-------------------
The Hartree flow is invariant under

    u^lam(t, x) = lam^(-(d + 2 - gamma)/2) u(t / lam^2, x / lam),

which multiplies ||u||_2^2 by lam^(gamma - 2) and ||grad u||_2 by lam^(gamma/2 - 2).
On the torus this symmetry is exact when the box is dilated along with the data
(:func:`dilate`). :func:`rescale` instead keeps the box fixed and resamples the
data by trigonometric interpolation, which is what a caller needs to feed
rescaled data to an existing grid.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .dynamics import EvolveConfig, ModelParams, NumericalAbort, evolve
from .functionals import energy, i_commutator, modified_energy, sobolev_norm
from .grid import Field, Grid, fft, ifft, make_grid, transform
from .multipliers import IParams, critical_threshold, i_operator, is_dyadic, shell_index

log = logging.getLogger(__name__)

__all__ = [
    "critical_threshold",
    "choose_lambda",
    "interval_count",
    "scaling_amplitude",
    "rescale",
    "dilate",
    "SupportOverflow",
    "gaussian",
    "multibump",
    "rough",
    "initial_data",
    "SweepSpec",
    "SweepRow",
    "SweepResult",
    "fit_slope",
    "integrator_floor",
    "sweep_almost_conservation",
    "free_pullback",
    "scattering_diagnostic",
]


# ---------------------------------------------------------------------------
# Scaling bookkeeping
# ---------------------------------------------------------------------------


def choose_lambda(N: float, s: float, mp: ModelParams) -> float:
    """lam = N^((1 - s) / (s - gamma/2 + 1)), the dilation that makes ||I u0^lam||_{H^1} = O(1)."""
    denom = s - mp.gamma / 2.0 + 1.0
    if denom <= 0:
        raise ValueError(f"s={s} must exceed gamma/2 - 1 = {mp.gamma / 2 - 1}")
    if N < 1:
        raise ValueError(f"threshold N must be >= 1, got {N}")
    return float(N) ** ((1.0 - s) / denom)


def interval_count(K: float, lam: float, gamma: float, mu: float) -> float:
    """(2K)^4 lam^(3(gamma/2 - 1)) / mu: number of unit windows before the energy budget is spent."""
    if min(K, lam, gamma, mu) <= 0:
        raise ValueError("all inputs must be positive")
    return (2.0 * K) ** 4 * lam ** (3.0 * (gamma / 2.0 - 1.0)) / mu


def scaling_amplitude(lam: float, mp: ModelParams) -> float:
    """lam^(-(d + 2 - gamma)/2)."""
    return lam ** (-(mp.d + 2.0 - mp.gamma) / 2.0)


class SupportOverflow(ValueError):
    """Data too wide to dilate inside the fixed box."""


SUPPORT_TOL = 1e-10


def _interp_matrix(grid: Grid, points: np.ndarray) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant of grid samples at ``points`` (one axis).

    The Nyquist mode enters as a cosine so that real samples interpolate to real values.
    """
    n = grid.n
    k = grid.wavenumbers.astype(float)
    phase = np.exp(1j * grid.dk * np.outer(points - grid.x_axis[0], k))
    if n % 2 == 0:
        phase[:, n // 2] = np.cos(grid.dk * (n // 2) * (points - grid.x_axis[0]))
    dft = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    return phase @ dft / n


def rescale(u0: Field, lam: float, mp: ModelParams, tol: float = SUPPORT_TOL) -> Field:
    """x -> lam^(-(d+2-gamma)/2) u0(x / lam) on u0's own grid.

    Values at x / lam come from the trigonometric interpolant of u0, applied one
    axis at a time. Points x / lam outside the fundamental cell (lam < 1) are
    set to zero, treating u0 as a compactly supported function. When lam > 1,
    everything u0 holds beyond |x_a| = L / (2 lam) would be pushed out of the box;
    if that part is not negligible (max amplitude above ``tol`` times the peak),
    :class:`SupportOverflow` is raised with a box length that would fit.
    """
    if not lam > 0:
        raise ValueError(f"scale factor must be positive, got {lam}")
    g = u0.grid
    v = transform(u0, "physical").values
    if lam == 1:
        return Field(g, v.copy(), "physical")
    peak = float(np.max(np.abs(v)))
    if lam > 1 and peak > 0:
        half = g.L / (2.0 * lam)
        inside = np.ones(g.shape, dtype=bool)
        for a, x in enumerate(g.coordinates()):
            inside = inside & (np.abs(x) <= half)
        outside = float(np.max(np.abs(v[~inside]), initial=0.0))
        if outside > tol * peak:
            absx = np.abs(np.stack(np.broadcast_arrays(*g.coordinates())))
            radius = float(np.max(np.where(np.abs(v) > tol * peak, absx.max(axis=0), 0.0)))
            raise SupportOverflow(
                f"data reaches |x| = {radius:.4g}; dilating by {lam:.4g} needs a box of length "
                f">= {2 * lam * radius:.4g} (have L = {g.L:.4g})"
            )
    points = g.x_axis / lam
    A = _interp_matrix(g, points)
    A[np.abs(points) > g.L / 2.0, :] = 0.0
    out = v
    for a in range(g.d):
        out = np.moveaxis(np.tensordot(A, np.moveaxis(out, a, 0), axes=(1, 0)), 0, a)
    return Field(g, scaling_amplitude(lam, mp) * out, "physical")


def dilate(u0: Field, lam: float, mp: ModelParams) -> Field:
    """Exact scaling on the torus: box length L -> lam L, samples times lam^(-(d+2-gamma)/2).

    The Hartree flow on the dilated box is exactly the rescaled flow, and I_N on
    the dilated lattice corresponds to I_(lam N) on the original one.
    """
    g = u0.grid
    v = transform(u0, "physical").values
    return Field(Grid(g.d, g.n, g.L * lam), scaling_amplitude(lam, mp) * v, "physical")


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------


def _r2(grid: Grid, center: Sequence[float] | None = None) -> np.ndarray:
    center = [0.0] * grid.d if center is None else list(center)
    return sum((x - c) ** 2 for x, c in zip(grid.coordinates(), center))


def gaussian(grid: Grid, amplitude: float = 1.0, width: float = 1.0, center: Sequence[float] | None = None,
             momentum: Sequence[float] | None = None) -> Field:
    """amplitude * exp(-|x - c|^2 / (2 width^2)), optionally boosted by exp(i p . x)."""
    v = amplitude * np.exp(-_r2(grid, center) / (2.0 * width**2))
    if momentum is not None:
        v = v * np.exp(1j * sum(p * x for p, x in zip(momentum, grid.coordinates())))
    return Field(grid, np.broadcast_to(v, grid.shape), "physical")


def multibump(grid: Grid, amplitude: float, width: float, centers: Sequence[Sequence[float]],
              momenta: Sequence[Sequence[float]] | None = None) -> Field:
    """Sum of Gaussian bumps at ``centers`` with optional individual boosts."""
    out = np.zeros(grid.shape, dtype=complex)
    for i, c in enumerate(centers):
        mom = None if momenta is None else momenta[i]
        out = out + gaussian(grid, amplitude, width, c, mom).values
    return Field(grid, out, "physical")


def rough(grid: Grid, amplitude: float, width: float, roughness: float, seed: int, noise: float = 0.5) -> Field:
    """Gaussian envelope times (1 + eta), eta a random dyadic-shell series.

    Each lattice mode in shell j >= 1 (2^(j-1) <= |xi| < 2^j) carries the
    coefficient 2^(j (-roughness - d/2)) with a uniform random phase, so the
    series sits in H^s exactly for s < roughness as the lattice is refined.
    eta is scaled to RMS ``noise`` over the box.
    """
    rng = np.random.default_rng(seed)
    shells = shell_index(grid.xi_norm)
    coef = np.where(shells >= 1, 2.0 ** (shells * (-roughness - grid.d / 2.0)), 0.0)
    phases = np.exp(2j * np.pi * rng.random(grid.shape))
    eta = ifft(coef * phases)
    rms = float(np.sqrt(np.mean(np.abs(eta) ** 2)))
    if rms > 0:
        eta = eta * (noise / rms)
    env = gaussian(grid, amplitude, width).values
    return Field(grid, env * (1.0 + eta), "physical")


def initial_data(grid: Grid, descriptor: dict[str, Any]) -> Field:
    """Build data from a family descriptor such as {"family": "gaussian", "amplitude": 1, "width": 2}."""
    desc = dict(descriptor)
    family = desc.pop("family", "gaussian")
    if family == "gaussian":
        return gaussian(grid, desc.get("amplitude", 1.0), desc.get("width", 1.0), desc.get("center"), desc.get("momentum"))
    if family == "multibump":
        return multibump(grid, desc.get("amplitude", 1.0), desc.get("width", 1.0), desc["centers"], desc.get("momenta"))
    if family == "rough":
        return rough(
            grid,
            desc.get("amplitude", 1.0),
            desc.get("width", 1.0),
            desc.get("roughness", 0.6),
            int(desc.get("seed", 0)),
            desc.get("noise", 0.5),
        )
    raise ValueError(f"unknown initial-data family {family!r}")


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    """One N-sweep.

    ``mode`` selects how the data depend on N:

    * ``"fixed"``: identical data and window for every N (one evolution shared
      by all rows); lam(N) and ||I u0^lam||_{H^1} are reported through the exact
      torus dilation without evolving the dilated problem.
    * ``"rescaled"``: each row evolves the dilated data on the dilated box over
      the window (requires 2N below the dilated Nyquist frequency).
    """

    N_list: tuple[float, ...]
    s: float
    d: int
    gamma: float
    n: int
    L: float
    dt: float
    T: float = 1.0
    sample_every: int = 1
    initial: dict[str, Any] = field(default_factory=lambda: {"family": "rough"})
    seed: int = 0
    mode: str = "fixed"
    dealias: bool = True
    controls: bool = True

    def __post_init__(self) -> None:
        errors = []
        if not self.N_list:
            errors.append("N list is empty")
        for N in self.N_list:
            if not is_dyadic(N):
                errors.append(f"N={N} is not dyadic")
        if self.mode not in ("fixed", "rescaled"):
            errors.append(f"unknown sweep mode {self.mode!r}")
        if errors:
            raise ValueError("; ".join(errors))
        nyq = math.pi * self.n / self.L
        if self.mode == "fixed":
            bad = [N for N in self.N_list if 2 * N >= nyq]
            if bad:
                raise ValueError(f"2N must stay below the Nyquist frequency {nyq:.4g}; offending N: {bad}")

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.d, self.gamma, dealias=self.dealias)

    def data_descriptor(self) -> dict[str, Any]:
        desc = dict(self.initial)
        desc.setdefault("seed", self.seed)
        return desc

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["N_list"] = list(self.N_list)
        return out


@dataclass(frozen=True)
class SweepRow:
    N: float
    s: float
    sup_delta_energy: float
    commutator_sum: float
    lam: float
    iu0_h1: float
    valid: bool = True


@dataclass
class SweepResult:
    rows: list[SweepRow]
    slope_energy: float | None = None
    slope_commutator: float | None = None
    floor: float | None = None

    def fit(self, s: float) -> None:
        rows = [r for r in self.rows if r.valid and r.s == s]
        self.slope_energy = fit_slope([r.N for r in rows], [r.sup_delta_energy for r in rows])
        self.slope_commutator = fit_slope([r.N for r in rows], [r.commutator_sum for r in rows])


def fit_slope(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Least-squares slope of log2 y against log2 x; None with fewer than 3 usable points."""
    pts = [(x, y) for x, y in zip(xs, ys) if x > 0 and y > 0 and math.isfinite(y)]
    if len(pts) < 3:
        return None
    lx = np.log2([p[0] for p in pts])
    ly = np.log2([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def _row_from_series(N: float, s: float, res, lam: float, iu0_h1: float) -> SweepRow:
    _, e = res.series.series(f"E~[N={N},s={s}]")
    ts, c = res.series.series(f"comm[N={N},s={s}]")
    # L^1-in-time accumulation: cadence sum, each sample weighted by the sample spacing
    weights = np.diff(ts, append=ts[-1]) if len(ts) > 1 else np.zeros(1)
    return SweepRow(N, s, float(np.max(np.abs(e - e[0]))), float(np.sum(c * weights)), lam, iu0_h1)


def _probes(Ns: Sequence[float], s: float, mp: ModelParams):
    probes = []
    for N in Ns:
        p = IParams(N, s)
        probes.append((f"E~[N={N},s={s}]", lambda u, p=p: modified_energy(u, p, mp)))
        probes.append((f"comm[N={N},s={s}]", lambda u, p=p: i_commutator(u, p, mp, derivative=True)))
    return probes


def _invalid(N: float, s: float) -> SweepRow:
    return SweepRow(N, s, math.nan, math.nan, math.nan, math.nan, valid=False)


def sweep_almost_conservation(spec: SweepSpec) -> SweepResult:
    """Run the sweep; rows are ordered by (s, N), with s = 1 control rows last.

    An aborted evolution marks its rows invalid; slopes are fitted over valid
    rows of the target s only, and only with at least three of them.
    """
    mp = spec.model
    grid = make_grid(spec.d, spec.n, spec.L)
    u0 = initial_data(grid, spec.data_descriptor())
    cfg = EvolveConfig(spec.dt, spec.T, spec.sample_every)
    s_values = [spec.s] + ([1.0] if spec.controls and spec.s != 1.0 else [])
    rows: list[SweepRow] = []

    if spec.mode == "fixed":
        probes = [pr for s in s_values for pr in _probes(spec.N_list, s, mp)]
        try:
            res = evolve(u0, cfg, mp, probes)
        except (NumericalAbort, ValueError) as exc:
            log.warning("sweep run aborted: %s", exc)
            res = None
        for s in s_values:
            for N in spec.N_list:
                if res is None:
                    rows.append(_invalid(N, s))
                    continue
                lam = choose_lambda(N, spec.s, mp)
                h1 = sobolev_norm(i_operator(dilate(u0, lam, mp), IParams(N, s)), 1.0)
                rows.append(_row_from_series(N, s, res, lam, h1))
    else:
        for s in s_values:
            for N in spec.N_list:
                lam = choose_lambda(N, spec.s, mp)
                ud = dilate(u0, lam, mp)
                if 2 * N >= ud.grid.nyquist:
                    log.warning("N=%s not resolvable after dilation by %.3g", N, lam)
                    rows.append(_invalid(N, s))
                    continue
                try:
                    res = evolve(ud, cfg, mp, _probes([N], s, mp))
                except (NumericalAbort, ValueError) as exc:
                    log.warning("sweep row N=%s aborted: %s", N, exc)
                    rows.append(_invalid(N, s))
                    continue
                h1 = sobolev_norm(i_operator(ud, IParams(N, s)), 1.0)
                rows.append(_row_from_series(N, s, res, lam, h1))

    result = SweepResult(rows)
    result.fit(spec.s)
    if spec.controls:
        result.floor = integrator_floor(u0, spec.dt, spec.T, spec.sample_every, mp)
    return result


def integrator_floor(u0: Field, dt: float, T: float, sample_every: int, mp: ModelParams) -> float:
    """Richardson estimate of the Strang energy error at step ``dt``.

    The sup-in-time energy drift is measured with step 2 dt and divided by 4
    (second order), giving a floor that does not reuse the run it is compared with.
    """
    cadence = max(1, sample_every // 2)
    res = evolve(u0, EvolveConfig(2 * dt, T, cadence), mp, [("E", lambda u: energy(u, mp))])
    _, e = res.series.series("E")
    return float(np.max(np.abs(e - e[0]))) / 4.0


# ---------------------------------------------------------------------------
# Scattering
# ---------------------------------------------------------------------------


def free_pullback(u: Field, t: float) -> Field:
    """S(-t) u: the spectrum multiplied by exp(+i |xi|^2 t)."""
    uh = transform(u, "spectral").values
    return Field(u.grid, uh * np.exp(1j * u.grid.xi2 * t), "spectral")


def scattering_diagnostic(trajectory: Sequence[tuple[float, Field]], s: float = 1.0) -> np.ndarray:
    """||S(-t_{j+1}) u(t_{j+1}) - S(-t_j) u(t_j)||_{H^s} for consecutive snapshots."""
    pulled = [free_pullback(u, t) for t, u in trajectory]
    return np.array([sobolev_norm(b - a, s) for a, b in zip(pulled, pulled[1:])])
