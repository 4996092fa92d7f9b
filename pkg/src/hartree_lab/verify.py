"""
Exact-identity suite behind the ``verify`` subcommand.

Every check compares two independent evaluations of the same quantity and
reports the discrepancy next to its tolerance. The defaults reproduce the
reference configuration: d = 3, gamma = 2.5, s = 0.6, N = 2, lattices 4^3 and
8^3 (3^3 for the six-linear brute-force oracle).
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import multilinear as ml
from .dynamics import EvolveConfig, ModelParams, evolve
from .experiments import rough
from .functionals import kinetic_energy, potential_energy
from .grid import Field, Grid, make_grid, transform
from .multipliers import IParams, i_operator


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float
    seconds: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value <= self.tol)


def rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def random_field(grid: Grid, seed: int) -> Field:
    rng = np.random.default_rng(seed)
    return Field(grid, rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape))


def _timed(name: str, tol: float, fn: Callable[[], float]) -> Check:
    t0 = time.perf_counter()
    value = float(fn())
    return Check(name, value, tol, time.perf_counter() - t0)


def run_suite(d: int = 3, gamma: float = 2.5, s: float = 0.6, N: float = 2.0, seed: int = 0,
              include_six_linear: bool = True) -> list[Check]:
    mp = ModelParams(d, gamma)
    mp_raw = ModelParams(d, gamma, dealias=False)
    p = IParams(N, s)
    g4 = make_grid(d, 4, 2 * np.pi)
    g8 = make_grid(d, 8, 2 * np.pi)
    u4 = random_field(g4, seed)
    u8 = random_field(g8, seed + 1)
    checks: list[Check] = []

    for g, u in ((g4, u4), (g8, u8)):
        def plancherel(u=u):
            a = u.norm()
            return rel(a, transform(u, "spectral").norm())
        checks.append(_timed(f"plancherel n={g.n}", 1e-12, plancherel))

    kin = ml.kinetic_multiplier(p)
    quart = ml.quartic_multiplier(p, mp)
    m4 = ml.m4_multiplier(p, mp)
    for g, u in ((g4, u4), (g8, u8)):
        checks.append(_timed(
            f"kinetic form == (1/2)|grad Iu|^2 n={g.n}", 1e-10,
            lambda u=u: rel(ml.lambda_k_fft(kin, u), kinetic_energy(i_operator(u, p))),
        ))
        checks.append(_timed(
            f"quartic form == potential part n={g.n}", 1e-10,
            lambda u=u: rel(ml.lambda_k_fft(quart, u), potential_energy(i_operator(u, p), mp)),
        ))

    for M in (kin, quart, m4):
        base = ml.lambda_k_bruteforce(M, u4)
        variants = [("reflection", ml.reflect(M))]
        if M.arity >= 4:
            variants += [("odd-slot swap", ml.permute_slots(M, (3, 2, 1, 4))),
                         ("even-slot swap", ml.permute_slots(M, (1, 4, 3, 2)))]
        for label, V in variants:
            checks.append(_timed(
                f"symmetry {label} {M.label} n=4", 1e-10,
                lambda V=V, base=base: rel(ml.lambda_k_bruteforce(V, u4), base),
            ))

    for M in (quart, m4):
        checks.append(_timed(
            f"factorized == brute force {M.label} n=4", 1e-9,
            lambda M=M: rel(ml.lambda_k_fft(M, u4), ml.lambda_k_bruteforce(M, u4)),
        ))

    if include_six_linear:
        # On 3^3 the 2/3 rule keeps only the zero mode, where the coupling vanishes,
        # so the six-linear oracle runs with the unmasked coupling.
        g3 = Grid(d, 3, 2 * np.pi / 1.5)
        u3 = random_field(g3, seed + 2)
        m6 = ml.m6_multiplier(IParams(1.0, s), mp_raw)
        checks.append(_timed(
            "factorized == brute force M6 n=3", 1e-9,
            lambda: rel(ml.lambda_k_fft(m6, u3), ml.lambda_k_bruteforce(m6, u3)),
        ))

    u_rough = rough(g8, 1.0, 1.0, 0.6, seed + 3)
    checks.append(_timed("differentiation law n=8", 1e-8, lambda: ml.diff_law_residual(u_rough, mp, p)))

    def increment() -> float:
        res = evolve(u_rough, EvolveConfig(1e-3, 0.1), mp, keep_snapshots=True)
        return ml.increment_residual(res.snapshots, p, mp)

    checks.append(_timed("increment identity n=8 (dt=1e-3, delta=0.1)", 1e-6, increment))

    def vanishing() -> float:
        gv = make_grid(d, 4, 8 * np.pi)
        uh = transform(random_field(gv, seed + 4), "spectral").values
        band = Field(gv, np.where(gv.xi_norm <= N / 3.0, uh, 0.0), "spectral")
        return abs(ml.lambda_k_bruteforce(m4, band))

    checks.append(_timed("M4 vanishes on |xi| <= N/3 (exact)", 0.0, vanishing))
    return checks


def format_table(checks: list[Check]) -> str:
    width = max(len(c.name) for c in checks)
    lines = [f"{'check':<{width}}  {'value':>11}  {'tol':>8}  {'sec':>6}  result"]
    for c in checks:
        lines.append(f"{c.name:<{width}}  {c.value:11.3e}  {c.tol:8.1e}  {c.seconds:6.2f}  {'PASS' if c.passed else 'FAIL'}")
    return "\n".join(lines)
