"""
k-linear frequency forms on the lattice hyperplane Gamma_k.

For a multiplier M of even arity k and fields u_1, ..., u_k,

    Lambda_k(M; u_1, ..., u_k) = Re c_k sum_{k_1 + ... + k_k = 0 (mod n)} M(xi_1, ..., xi_k) prod_j u_j_hat(xi_j)

with c_k = dV * Mtot^(-(k-2)/2) (Mtot = n^d). The normalization makes the forms
agree exactly with the physical-space functionals built from the unitary
transform; e.g. Lambda_2(1; u, conj u) = ||u||_2^2. Frequency sums are taken
modulo the lattice (they are the frequencies produced by pointwise products on
the grid), and every symbol of a sum is evaluated at its wrapped representative.

Lambda_k(M; u) means Lambda_k(M; u, conj u, u, conj u, ...); the spectrum of
conj u is conj(u_hat(-xi)).

Two evaluation routes are provided:

* :func:`lambda_k_bruteforce` enumerates Gamma_k tuple by tuple and calls the
  multiplier's pointwise formula (O(Mtot^(k-1)), guarded by a tuple budget).
* :func:`lambda_k_fft` runs a :class:`ConvPlan`, a factorization of the
  multiplier into weighted leaves, pointwise products (convolutions in
  frequency) and coupling symbols on intermediate frequencies (O(k Mtot log Mtot)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from .dynamics import ModelParams, coupling_of_wavenumbers, coupling_symbol, rhs
from .grid import Field, Grid, conj_spectrum, fft, ifft, negate_index, transform
from .multipliers import IParams, i_operator, m_of_radius
from .functionals import energy

# ---------------------------------------------------------------------------
# Wavenumber helpers for pointwise multiplier formulas
# ---------------------------------------------------------------------------

Wavenumbers = np.ndarray  # integer array (..., d)


def wnorm2(grid: Grid, *ks: Wavenumbers) -> np.ndarray:
    """|xi|^2 of the wrapped representative of k_1 + k_2 + ..."""
    k = grid.wrap(sum(ks))
    return grid.dk**2 * np.sum(k.astype(float) ** 2, axis=-1)


def wnorm(grid: Grid, *ks: Wavenumbers) -> np.ndarray:
    return np.sqrt(wnorm2(grid, *ks))


def wdot(grid: Grid, ka: Wavenumbers, kb: Wavenumbers) -> np.ndarray:
    """Lattice dot product xi_a . xi_b, defined by polarization.

    (|xi_a + xi_b|^2 - |xi_a|^2 - |xi_b|^2) / 2 agrees with the Euclidean dot
    product away from the Nyquist rows and keeps xi . (-xi) = -|xi|^2 on the
    self-conjugate Nyquist row as well.
    """
    return 0.5 * (wnorm2(grid, ka, kb) - wnorm2(grid, ka) - wnorm2(grid, kb))


def wm(grid: Grid, p: IParams, *ks: Wavenumbers) -> np.ndarray:
    """m at the wrapped sum of the given wavenumbers."""
    return m_of_radius(wnorm(grid, *ks), p)


# ---------------------------------------------------------------------------
# Convolution plans
# ---------------------------------------------------------------------------

LatticeSymbol = Callable[[Grid], np.ndarray]


@dataclass(frozen=True)
class Leaf:
    """Slot ``slot`` (1-based) spectrum, optionally weighted by a symbol of its frequency."""

    slot: int
    weight: LatticeSymbol | None = None
    label: str = ""

    def describe(self) -> str:
        w = self.label or ("1" if self.weight is None else "w")
        return f"u{self.slot}[{w}]"

    def slots(self) -> list[int]:
        return [self.slot]


@dataclass(frozen=True)
class Prod:
    """Pointwise product of children (frequency convolution)."""

    children: tuple["Node", ...]

    def describe(self) -> str:
        return "(" + " * ".join(c.describe() for c in self.children) + ")"

    def slots(self) -> list[int]:
        return [s for c in self.children for s in c.slots()]


@dataclass(frozen=True)
class Couple:
    """A symbol applied on the total frequency of ``child``."""

    child: "Node"
    symbol: LatticeSymbol
    label: str = "B"

    def describe(self) -> str:
        return f"{self.label}{{{self.child.describe()}}}"

    def slots(self) -> list[int]:
        return self.child.slots()


Node = Union[Leaf, Prod, Couple]


@dataclass(frozen=True)
class PlanTerm:
    """coeff * dV * sum_zeta kappa(zeta) F(left)(zeta) F(right)(-zeta)."""

    coeff: complex
    left: Node
    right: Node
    kappa: LatticeSymbol | None = None
    kappa_label: str = "1"


@dataclass(frozen=True)
class ConvPlan:
    arity: int
    terms: tuple[PlanTerm, ...]

    def __post_init__(self) -> None:
        for t in self.terms:
            used = sorted(t.left.slots() + t.right.slots())
            if used != list(range(1, self.arity + 1)):
                raise ValueError(f"plan term uses slots {used}, expected 1..{self.arity}")

    def dump(self) -> str:
        lines = [f"ConvPlan(arity={self.arity})"]
        for t in self.terms:
            lines.append(f"  {t.coeff:+} * sum_zeta {t.kappa_label}(zeta) [{t.left.describe()}](zeta) [{t.right.describe()}](-zeta)")
        return "\n".join(lines)


def _eval_node(node: Node, spectra: Sequence[np.ndarray], grid: Grid) -> np.ndarray:
    """Physical-space samples produced by a plan node."""
    if isinstance(node, Leaf):
        s = spectra[node.slot - 1]
        if node.weight is not None:
            s = s * node.weight(grid)
        return ifft(s)
    if isinstance(node, Prod):
        out = _eval_node(node.children[0], spectra, grid)
        for c in node.children[1:]:
            out = out * _eval_node(c, spectra, grid)
        return out
    if isinstance(node, Couple):
        return ifft(node.symbol(grid) * fft(_eval_node(node.child, spectra, grid)))
    raise TypeError(f"unknown plan node {node!r}")


def run_plan(plan: ConvPlan, spectra: Sequence[np.ndarray], grid: Grid) -> complex:
    """Complex value c_k sum_{Gamma_k} M prod u_j_hat (before taking Re)."""
    total = 0.0 + 0.0j
    for t in plan.terms:
        left = _eval_node(t.left, spectra, grid)
        right = _eval_node(t.right, spectra, grid)
        if t.kappa is None:
            s = np.sum(left * right)
        else:
            s = np.sum(t.kappa(grid) * fft(left) * negate_index(fft(right)))
        total += t.coeff * s
    return grid.dV * total


# ---------------------------------------------------------------------------
# Multipliers
# ---------------------------------------------------------------------------

MultiplierFunc = Callable[[Grid, Sequence[Wavenumbers]], np.ndarray]


@dataclass(frozen=True)
class FreqMultiplier:
    """A multiplier of even arity on Gamma_k.

    ``func(grid, ks)`` evaluates M pointwise on tuples of integer wavenumbers
    (``ks[j]`` has shape (..., d); the last slot is already fixed by the
    constraint). ``plan`` is the factorized route, when one exists.
    """

    arity: int
    func: MultiplierFunc
    tag: str = "generic"
    plan: ConvPlan | None = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.arity < 2 or self.arity % 2:
            raise ValueError(f"multiplier arity must be even and >= 2, got {self.arity}")
        if self.plan is not None and self.plan.arity != self.arity:
            raise ValueError("plan arity does not match multiplier arity")

    def __call__(self, grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        if len(ks) != self.arity:
            raise ValueError(f"expected {self.arity} frequency arguments, got {len(ks)}")
        return self.func(grid, ks)


def _m_symbol(p: IParams) -> LatticeSymbol:
    return lambda g: m_of_radius(g.xi_norm, p)


def _m2_symbol(p: IParams) -> LatticeSymbol:
    return lambda g: m_of_radius(g.xi_norm, p) ** 2


def _xi2_m_symbol(p: IParams, power: int) -> LatticeSymbol:
    return lambda g: g.xi2 * m_of_radius(g.xi_norm, p) ** power


def _coupling(mp: ModelParams) -> LatticeSymbol:
    return lambda g: coupling_symbol(g, mp)


def separable_multiplier(weights: Sequence[LatticeSymbol | None], coeff: complex = 1.0, label: str = "separable") -> FreqMultiplier:
    """coeff * prod_j w_j(xi_j); ``None`` weights are 1.

    Pointwise evaluation needs the weights on arbitrary wavenumbers, so each
    weight is evaluated on the lattice once and gathered.
    """
    k = len(weights)

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        out = np.full(np.shape(ks[0])[:-1], complex(coeff))
        for w, kj in zip(weights, ks):
            if w is not None:
                idx = tuple(np.moveaxis(grid.index_of(kj), -1, 0))
                out = out * w(grid)[idx]
        return out

    leaves = [Leaf(j + 1, w) for j, w in enumerate(weights)]
    plan = ConvPlan(k, (PlanTerm(coeff, Prod(tuple(leaves[:-1])), leaves[-1]),))
    return FreqMultiplier(k, func, "separable", plan, label)


def kinetic_multiplier(p: IParams) -> FreqMultiplier:
    """-(1/2) xi_1 m_1 . xi_2 m_2 on Gamma_2."""

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        k1, k2 = ks
        return -0.5 * wdot(grid, k1, k2) * wm(grid, p, k1) * wm(grid, p, k2)

    # On Gamma_2 the dot product is -(|xi_1|^2 + |xi_2|^2) / 2.
    plan = ConvPlan(
        2,
        (
            PlanTerm(0.25, Leaf(1, _xi2_m_symbol(p, 1), "|xi|^2 m"), Leaf(2, _m_symbol(p), "m")),
            PlanTerm(0.25, Leaf(1, _m_symbol(p), "m"), Leaf(2, _xi2_m_symbol(p, 1), "|xi|^2 m")),
        ),
    )
    return FreqMultiplier(2, func, "separable", plan, "kinetic")


def _pair_tree(mp: ModelParams, w1, w2, w3, w4, l1="1", l23="1", l4="1") -> tuple[Node, Node]:
    """Left/right trees for weights w1..w4 with coupling B(xi_2 + xi_3)."""
    left = Prod((Leaf(1, w1, l1), Couple(Prod((Leaf(2, w2, l23), Leaf(3, w3, l23))), _coupling(mp))))
    return left, Leaf(4, w4, l4)


def quartic_multiplier(p: IParams, mp: ModelParams) -> FreqMultiplier:
    """(1/4) |xi_{2,3}|^-(d-gamma) m_1 m_2 m_3 m_4."""

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        k1, k2, k3, k4 = ks
        B = coupling_of_wavenumbers(grid, mp, k2 + k3)
        return 0.25 * B * wm(grid, p, k1) * wm(grid, p, k2) * wm(grid, p, k3) * wm(grid, p, k4)

    m = _m_symbol(p)
    left, right = _pair_tree(mp, m, m, m, m, "m", "m", "m")
    return FreqMultiplier(4, func, "pair", ConvPlan(4, (PlanTerm(0.25, left, right),)), "quartic")


def kinetic_flux_multiplier(p: IParams, mp: ModelParams) -> FreqMultiplier:
    """i |xi_{2,3}|^-(d-gamma) m_1^2 |xi_1|^2: time derivative of the kinetic form."""

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        k1, k2, k3, _ = ks
        B = coupling_of_wavenumbers(grid, mp, k2 + k3)
        return 1j * B * wm(grid, p, k1) ** 2 * wnorm2(grid, k1)

    left, right = _pair_tree(mp, _xi2_m_symbol(p, 2), None, None, None, "|xi|^2 m^2")
    return FreqMultiplier(4, func, "pair", ConvPlan(4, (PlanTerm(1j, left, right),)), "kinetic flux")


def m4_multiplier(p: IParams, mp: ModelParams) -> FreqMultiplier:
    """M_4 = i |xi_{2,3}|^-(d-gamma) |xi_1|^2 m_1 (m_1 - m_2 m_3 m_4)."""

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        k1, k2, k3, k4 = ks
        B = coupling_of_wavenumbers(grid, mp, k2 + k3)
        m1 = wm(grid, p, k1)
        return 1j * B * wnorm2(grid, k1) * m1 * (m1 - wm(grid, p, k2) * wm(grid, p, k3) * wm(grid, p, k4))

    m = _m_symbol(p)
    l_a, r_a = _pair_tree(mp, _xi2_m_symbol(p, 2), None, None, None, "|xi|^2 m^2")
    l_b, r_b = _pair_tree(mp, _xi2_m_symbol(p, 1), m, m, m, "|xi|^2 m", "m", "m")
    plan = ConvPlan(4, (PlanTerm(1j, l_a, r_a), PlanTerm(-1j, l_b, r_b)))
    return FreqMultiplier(4, func, "pair", plan, "M4")


def m6_multiplier(p: IParams, mp: ModelParams) -> FreqMultiplier:
    """M_6 = i |xi_{2,3}|^-(d-gamma) |xi_{4,5}|^-(d-gamma) m_{1,2,3} (m_{1,2,3} - m_4 m_5 m_6)."""

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        k1, k2, k3, k4, k5, k6 = ks
        B23 = coupling_of_wavenumbers(grid, mp, k2 + k3)
        B45 = coupling_of_wavenumbers(grid, mp, k4 + k5)
        m123 = wm(grid, p, k1, k2, k3)
        return 1j * B23 * B45 * m123 * (m123 - wm(grid, p, k4) * wm(grid, p, k5) * wm(grid, p, k6))

    m = _m_symbol(p)
    B = _coupling(mp)
    left = Prod((Leaf(1), Couple(Prod((Leaf(2), Leaf(3))), B)))
    right = Prod((Leaf(6), Couple(Prod((Leaf(4), Leaf(5))), B)))
    right_m = Prod((Leaf(6, m, "m"), Couple(Prod((Leaf(4, m, "m"), Leaf(5, m, "m"))), B)))
    plan = ConvPlan(
        6,
        (
            PlanTerm(1j, left, right, _m2_symbol(p), "m^2"),
            PlanTerm(-1j, left, right_m, _m_symbol(p), "m"),
        ),
    )
    return FreqMultiplier(6, func, "triple", plan, "M6")


# ---------------------------------------------------------------------------
# Multiplier algebra (pointwise; brute-force route only)
# ---------------------------------------------------------------------------


def elongate(M: FreqMultiplier, j: int, l: int) -> FreqMultiplier:
    """X^l_j(M): slot j receives xi_j + ... + xi_{j+l}; arity grows by l."""
    if l % 2:
        raise ValueError(f"elongation length must be even, got {l}")
    if not 1 <= j <= M.arity:
        raise ValueError(f"slot index must lie in 1..{M.arity}, got {j}")
    if l == 0:
        return M

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        ks = list(ks)
        merged = ks[j - 1 : j + l]
        return M.func(grid, ks[: j - 1] + [sum(merged)] + ks[j + l :])

    return FreqMultiplier(M.arity + l, func, "generic", None, f"X^{l}_{j}({M.label})")


def permute_slots(M: FreqMultiplier, perm: Sequence[int]) -> FreqMultiplier:
    """(xi_1, ..., xi_k) -> M(xi_perm[0], ..., xi_perm[k-1]); ``perm`` is 1-based."""
    if sorted(perm) != list(range(1, M.arity + 1)):
        raise ValueError(f"not a permutation of 1..{M.arity}: {perm}")

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        return M.func(grid, [ks[q - 1] for q in perm])

    return FreqMultiplier(M.arity, func, "generic", None, f"{M.label}{tuple(perm)}")


def reflect(M: FreqMultiplier) -> FreqMultiplier:
    """conj M(-xi_2, -xi_1, ..., -xi_k, -xi_{k-1}).

    For real multipliers this is the plain reflection; the conjugate is what
    keeps Lambda_k invariant when M carries a factor of i.
    """

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        swapped = []
        for a in range(0, M.arity, 2):
            swapped += [-ks[a + 1], -ks[a]]
        return np.conj(M.func(grid, swapped))

    return FreqMultiplier(M.arity, func, "generic", None, f"R({M.label})")


def combine(terms: Sequence[tuple[complex, FreqMultiplier]], label: str = "sum") -> FreqMultiplier:
    """Linear combination of same-arity multipliers."""
    arity = terms[0][1].arity
    if any(M.arity != arity for _, M in terms):
        raise ValueError("cannot combine multipliers of different arity")

    def func(grid: Grid, ks: Sequence[Wavenumbers]) -> np.ndarray:
        return sum(c * M.func(grid, ks) for c, M in terms)

    return FreqMultiplier(arity, func, "generic", None, label)


def pointwise(arity: int, func: MultiplierFunc, label: str = "") -> FreqMultiplier:
    return FreqMultiplier(arity, func, "generic", None, label)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

TUPLE_BUDGET = 10**8


class BudgetExceeded(ValueError):
    pass


def _slot_spectra(fields: Field | Sequence[Field], k: int, conjugate_even: bool) -> tuple[Grid, list[np.ndarray]]:
    if isinstance(fields, Field):
        fields = [fields] * k
    if len(fields) != k:
        raise ValueError(f"need {k} fields, got {len(fields)}")
    grid = fields[0].grid
    spectra = []
    for j, f in enumerate(fields):
        if f.grid != grid:
            raise ValueError("all slot fields must share one grid")
        uh = transform(f, "spectral").values
        spectra.append(conj_spectrum(uh) if conjugate_even and j % 2 == 1 else uh)
    return grid, spectra


def _norm_const(grid: Grid, k: int) -> float:
    return grid.dV * float(grid.n_modes) ** (-(k - 2) / 2.0)


def lambda_k_complex_bruteforce(
    M: FreqMultiplier, fields: Field | Sequence[Field], conjugate_even: bool = True, budget: int = TUPLE_BUDGET
) -> complex:
    """c_k sum over Gamma_k of M prod u_j_hat, by enumeration."""
    k = M.arity
    grid, spectra = _slot_spectra(fields, k, conjugate_even)
    Mt = grid.n_modes
    n_tuples = Mt ** (k - 1)
    if n_tuples > budget:
        raise BudgetExceeded(
            f"{n_tuples:.3g} tuples exceed the brute-force budget {budget:.3g}; use lambda_k_fft"
        )
    pts = grid.wrap(np.stack(np.unravel_index(np.arange(Mt), grid.shape), axis=-1))
    flat = [s.ravel() for s in spectra]
    free = k - 1
    inner = max(1, min(free, int(math.log(2e6) // math.log(Mt)) if Mt > 1 else free))
    outer = free - inner
    mesh = np.stack(np.meshgrid(*[np.arange(Mt)] * inner, indexing="ij"), axis=-1).reshape(-1, inner)
    total = 0.0 + 0.0j
    for prefix in itertools.product(range(Mt), repeat=outer):
        idx = [np.full(mesh.shape[0], i) for i in prefix] + [mesh[:, c] for c in range(inner)]
        ks = [pts[i] for i in idx]
        last = -sum(ks)
        last_idx = np.ravel_multi_index(tuple(np.moveaxis(grid.index_of(last), -1, 0)), grid.shape)
        ks.append(grid.wrap(last))
        prod = np.ones(mesh.shape[0], dtype=complex)
        for s, i in zip(flat, idx + [last_idx]):
            prod = prod * s[i]
        total += np.sum(M(grid, ks) * prod)
    return _norm_const(grid, k) * total


def lambda_k_bruteforce(
    M: FreqMultiplier, fields: Field | Sequence[Field], conjugate_even: bool = True, budget: int = TUPLE_BUDGET
) -> float:
    """Lambda_k(M; u_1, ..., u_k) by direct enumeration of Gamma_k.

    ``fields`` is one field (used in every slot) or k fields; even slots receive
    the conjugate field when ``conjugate_even``.
    """
    return float(lambda_k_complex_bruteforce(M, fields, conjugate_even, budget).real)


def lambda_k_fft(
    M: FreqMultiplier, u: Field | Sequence[Field], plan: ConvPlan | None = None, conjugate_even: bool = True
) -> float:
    """Lambda_k through the factorized convolution plan."""
    plan = plan or M.plan
    if plan is None:
        raise ValueError(f"multiplier {M.label!r} with tag {M.tag!r} has no factorized plan")
    if plan.arity != M.arity:
        raise ValueError("plan arity does not match multiplier arity")
    grid, spectra = _slot_spectra(u, M.arity, conjugate_even)
    return float(run_plan(plan, spectra, grid).real)


# ---------------------------------------------------------------------------
# Identities
# ---------------------------------------------------------------------------


def modified_energy_forms(u: Field, p: IParams, mp: ModelParams) -> float:
    """Lambda_2(kinetic) + Lambda_4(quartic); equals E(I u)."""
    return lambda_k_fft(kinetic_multiplier(p), u) + lambda_k_fft(quartic_multiplier(p, mp), u)


def energy_increment_rate(u: Field, p: IParams, mp: ModelParams) -> float:
    """Lambda_4(M_4; u) + Lambda_6(M_6; u), the instantaneous d/dt of E(I u)."""
    return lambda_k_fft(m4_multiplier(p, mp), u) + lambda_k_fft(m6_multiplier(p, mp), u)


def _relative(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def diff_law_residual(u: Field, mp: ModelParams, p: IParams) -> float:
    """Relative gap between two evaluations of d/dt Lambda_2(kinetic; u).

    (a) chain rule: the equation's du/dt inserted into each slot;
    (b) Lambda_4(i |xi_{2,3}|^-(d-gamma) m_1^2 |xi_1|^2; u).
    """
    K = kinetic_multiplier(p)
    ut = rhs(u, mp)
    a = lambda_k_fft(K, [ut, u]) + lambda_k_fft(K, [u, ut])
    b = lambda_k_fft(kinetic_flux_multiplier(p, mp), u)
    return _relative(a, b)


def increment_terms(trajectory: Sequence[tuple[float, Field]], p: IParams, mp: ModelParams) -> tuple[float, float, float]:
    """(E(I u) at the first snapshot, its change to the last, trapezoid integral of Lambda_4 + Lambda_6)."""
    if len(trajectory) < 2:
        raise ValueError("need at least two snapshots")
    ts = np.array([t for t, _ in trajectory])
    rates = [energy_increment_rate(u, p, mp) for _, u in trajectory]
    e0 = energy(i_operator(trajectory[0][1], p), mp)
    e1 = energy(i_operator(trajectory[-1][1], p), mp)
    return e0, e1 - e0, float(trapezoid(rates, ts))


def increment_residual(trajectory: Sequence[tuple[float, Field]], p: IParams, mp: ModelParams) -> float:
    """|[E(I u)(T + delta) - E(I u)(T)] - int (Lambda_4(M_4) + Lambda_6(M_6)) dt| / max(|E(I u)(T)|, 1)."""
    e0, delta, integral = increment_terms(trajectory, p, mp)
    return abs(delta - integral) / max(abs(e0), 1.0)
