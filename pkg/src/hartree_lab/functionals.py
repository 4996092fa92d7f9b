"""
Scalar diagnostics of a field: conservation laws, Sobolev norms, the modified
energy, interaction Morawetz quantities and the I-commutator.

All integrals are discrete: dV * sum over the lattice, or equivalently dV * sum
over the spectrum under the unitary transform.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.fft as sfft
from scipy.integrate import trapezoid

from .dynamics import DiagnosticsSeries, ModelParams, coupling_symbol, potential_values
from .grid import Field, Grid, fft, ifft, transform
from .multipliers import IParams, bracket, i_operator, m_of_radius

__all__ = [
    "DiagnosticsSeries",
    "mass",
    "kinetic_energy",
    "potential_energy",
    "energy",
    "modified_energy",
    "sobolev_norm",
    "morawetz_kernel",
    "interaction_morawetz_action",
    "interaction_morawetz_action_direct",
    "morawetz_l4",
    "morawetz_lhs",
    "i_commutator",
]


def _spec(u: Field) -> np.ndarray:
    return transform(u, "spectral").values


def mass(u: Field) -> float:
    """||u||_2^2."""
    uh = _spec(u)
    return float(u.grid.dV * np.vdot(uh, uh).real)


def kinetic_energy(u: Field) -> float:
    """(1/2) ||grad u||_2^2 = (1/2) dV sum |xi|^2 |u_hat|^2."""
    uh = _spec(u)
    return float(0.5 * u.grid.dV * np.sum(u.grid.xi2 * np.abs(uh) ** 2))


def potential_energy(u: Field, mp: ModelParams) -> float:
    """(1/4) <|u|^2, V[u]>, evaluated as (1/4) dV sum B |rho_hat|^2 (manifestly >= 0)."""
    up = transform(u, "physical").values
    rho_h = fft(np.abs(up) ** 2)
    return float(0.25 * u.grid.dV * np.sum(coupling_symbol(u.grid, mp) * np.abs(rho_h) ** 2))


def energy(u: Field, mp: ModelParams) -> float:
    return kinetic_energy(u) + potential_energy(u, mp)


def modified_energy(u: Field, p: IParams, mp: ModelParams) -> float:
    """E(I u)."""
    return energy(i_operator(u, p), mp)


def sobolev_norm(u: Field, s: float, homogeneous: bool = False) -> float:
    """||<grad>^s u||_2, or ||(|grad|^s) u||_2 when ``homogeneous``.

    The homogeneous weight |xi|^(2s) gives the zero mode weight 0 for s > 0 and 1
    for s == 0; for s < 0 it is undefined and a nonzero mean raises.
    """
    if not np.isfinite(s):
        raise ValueError("Sobolev exponent must be finite")
    uh = _spec(u)
    r = u.grid.xi_norm
    if homogeneous:
        zero = r == 0
        if s < 0 and np.any(np.abs(uh[zero]) > 0):
            raise ValueError("homogeneous norm with s < 0 is undefined for fields with nonzero mean")
        if s == 0:
            w = np.ones_like(r)
        else:
            w = np.where(zero, 0.0, np.where(zero, 1.0, r) ** (2 * s))
    else:
        w = bracket(r) ** (2 * s)
    return float(np.sqrt(u.grid.dV * np.sum(w * np.abs(uh) ** 2)))


# ---------------------------------------------------------------------------
# Interaction Morawetz
# ---------------------------------------------------------------------------


def _gradient(values: np.ndarray, grid: Grid) -> list[np.ndarray]:
    """Spectral gradient with the odd-symbol Nyquist rule."""
    uh = fft(values)
    return [ifft(1j * grid.axis_view(grid.xi_axis_odd, a) * uh) for a in range(grid.d)]


def _difference_axis(grid: Grid) -> np.ndarray:
    """Separations z = j dx, wrapped to [-L/2, L/2), in FFT index order."""
    return grid.dx * grid.wavenumbers.astype(float)


def morawetz_kernel(grid: Grid) -> list[np.ndarray]:
    """Components of K(z) = z / |z| on the separation lattice.

    K(0) = 0. A component whose separation sits on the half-box row (z_a = -L/2,
    its own negative on the torus) is zeroed, which keeps K exactly odd.
    """
    z_axis = _difference_axis(grid)
    zs = [grid.axis_view(z_axis, a) for a in range(grid.d)]
    r = np.sqrt(sum(z**2 for z in zs))
    r = np.broadcast_to(r, grid.shape)
    inv = np.where(r > 0, 1.0 / np.where(r > 0, r, 1.0), 0.0)
    comps = []
    for a, z in enumerate(zs):
        za = np.broadcast_to(z, grid.shape)
        if grid.n % 2 == 0:
            za = np.where(np.broadcast_to(grid.axis_view(grid.wavenumbers == -(grid.n // 2), a), grid.shape), 0.0, za)
        comps.append(za * inv)
    return comps


def _density_current(u: Field) -> tuple[np.ndarray, list[np.ndarray]]:
    v = transform(u, "physical").values
    rho = np.abs(v) ** 2
    J = [np.imag(np.conj(v) * g) for g in _gradient(v, u.grid)]
    return rho, J


def interaction_morawetz_action(u: Field) -> float:
    """M = 4 sum_a int int K_a(x1 - x2) J_a(x1) rho(x2) dx1 dx2 (periodic separations).

    rho = |u|^2, J = Im(conj(u) grad u). The x2 integral is a circular
    convolution evaluated with FFTs.
    """
    g = u.grid
    rho, J = _density_current(u)
    rho_h = sfft.fftn(rho)
    total = 0.0
    for Ka, Ja in zip(morawetz_kernel(g), J):
        conv = sfft.ifftn(sfft.fftn(Ka) * rho_h).real
        total += float(np.sum(Ja * conv))
    return 4.0 * g.dV**2 * total


def interaction_morawetz_action_direct(u: Field) -> float:
    """O(M^2) double sum for :func:`interaction_morawetz_action` (oracle)."""
    g = u.grid
    rho, J = _density_current(u)
    K = morawetz_kernel(g)
    idx = np.stack(np.unravel_index(np.arange(g.n_modes), g.shape), axis=-1)
    diff = (idx[:, None, :] - idx[None, :, :]) % g.n
    flat_diff = np.ravel_multi_index(tuple(diff[..., a] for a in range(g.d)), g.shape)
    rho_f = rho.ravel()
    total = 0.0
    for Ka, Ja in zip(K, J):
        total += float(np.sum(Ja.ravel()[:, None] * Ka.ravel()[flat_diff] * rho_f[None, :]))
    return 4.0 * g.dV**2 * total


def morawetz_l4(u: Field, p: IParams, mp: ModelParams) -> float:
    """|| |grad|^(-(d-3)/4) I u ||_{L^4}^4 at one time (zero mode of the Riesz symbol set to 0 when d > 3)."""
    if mp.d < 3:
        raise ValueError("the Morawetz norm needs d >= 3")
    g = u.grid
    w = _spec(u) * m_of_radius(g.xi_norm, p)
    alpha = -(mp.d - 3) / 4.0
    if alpha != 0:
        r = g.xi_norm
        w = w * np.where(r > 0, np.where(r > 0, r, 1.0) ** alpha, 0.0)
    return g.dV * float(np.sum(np.abs(ifft(w)) ** 4))


def morawetz_lhs(snapshots: Sequence[tuple[float, Field]], p: IParams, mp: ModelParams) -> float:
    """Trapezoid-in-time integral of :func:`morawetz_l4` over the snapshot times."""
    if mp.d < 3:
        raise ValueError("the Morawetz norm needs d >= 3")
    if len(snapshots) < 2:
        return 0.0
    ts = np.array([t for t, _ in snapshots], dtype=float)
    return float(trapezoid([morawetz_l4(u, p, mp) for _, u in snapshots], ts))


def i_commutator(u: Field, p: IParams, mp: ModelParams, derivative: bool = True) -> float:
    """||g||_2 or ||grad g||_2 for g = I(N(u)) - N(I u), N(v) = V[v] v."""
    if p.s == 1:
        return 0.0  # I is the identity
    g = u.grid
    v = transform(u, "physical").values
    m = m_of_radius(g.xi_norm, p)
    Iu = ifft(m * fft(v))
    gh = m * fft(potential_values(v, g, mp) * v) - fft(potential_values(Iu, g, mp) * Iu)
    w = g.xi2 if derivative else 1.0
    return float(np.sqrt(g.dV * np.sum(w * np.abs(gh) ** 2)))
