import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_lab import multilinear as ml
from hartree_lab.dynamics import EvolveConfig, ModelParams, coupling_of_wavenumbers, evolve
from hartree_lab.functionals import kinetic_energy, mass, modified_energy, potential_energy
from hartree_lab.grid import Field, Grid, make_grid, plane_wave
from hartree_lab.multipliers import IParams, i_operator

from conftest import random_field, relerr

MP = ModelParams(3, 2.5)
MP_RAW = ModelParams(3, 2.5, dealias=False)
P = IParams(2, 0.6)


def one(k):
    return ml.pointwise(k, lambda g, ks: np.ones(np.shape(ks[0])[:-1]), "1")


def test_lambda2_of_one_is_mass(g4):
    u = random_field(g4, 1)
    assert relerr(ml.lambda_k_bruteforce(one(2), u), mass(u)) < 1e-13
    sep = ml.separable_multiplier([None, None])
    assert relerr(ml.lambda_k_fft(sep, u), mass(u)) < 1e-13


def test_plane_wave_collapses_to_one_tuple(g4):
    A = 1.5
    u = plane_wave(g4, (1, -1, 0), A)
    M = ml.quartic_multiplier(P, MP_RAW)
    # the only tuple is (xi, -xi, xi, -xi): the coupling sits at xi_2 + xi_3 = 0, where B = 0
    assert ml.lambda_k_bruteforce(M, u) == pytest.approx(0.0, abs=1e-12)
    K = ml.kinetic_multiplier(IParams(1, 0.5))
    xi2 = 2.0
    m = (1 / np.sqrt(xi2)) ** 0.5
    expected = 0.5 * xi2 * m**2 * A**2 * g4.L**3
    assert relerr(ml.lambda_k_bruteforce(K, u), expected) < 1e-12


def test_m4_vanishes_on_low_band():
    g = make_grid(3, 4, 8 * np.pi)
    uh = random_field(g, 2).spectral().values
    u = Field(g, np.where(g.xi_norm <= P.N / 3, uh, 0), "spectral")
    M4 = ml.m4_multiplier(P, MP)
    assert ml.lambda_k_bruteforce(M4, u) == 0.0
    assert abs(ml.lambda_k_fft(M4, u)) < 1e-14 * max(1.0, mass(u) ** 2)


def test_m4_m6_pointwise_zero_on_low_tuples():
    g = make_grid(3, 32, 8 * np.pi)  # dk = 0.25, N/3 = 2/3 -> |k| <= 2
    rng = np.random.default_rng(3)
    k = rng.integers(-1, 2, size=(6, 500, 3))
    k4 = list(k[:3]) + [-(k[0] + k[1] + k[2])]
    k4 = [kk for kk in k4]
    keep4 = np.all([g.dk * np.linalg.norm(kk, axis=-1) <= P.N / 3 for kk in k4], axis=0)
    vals4 = ml.m4_multiplier(P, MP)(g, k4)
    assert keep4.sum() > 50 and np.all(vals4[keep4] == 0)
    k6 = list(k[:5]) + [-sum(k[:5])]
    keep6 = np.all([g.dk * np.linalg.norm(kk, axis=-1) <= P.N / 3 for kk in k6], axis=0)
    vals6 = ml.m6_multiplier(P, MP)(g, k6)
    assert keep6.sum() > 10 and np.all(vals6[keep6] == 0)


@pytest.mark.parametrize("factory", [ml.m4_multiplier, ml.m6_multiplier])
def test_multipliers_vanish_when_s_is_one(factory):
    g = make_grid(3, 16, 2 * np.pi)
    M = factory(IParams(2, 1.0), MP)
    k = np.random.default_rng(4).integers(-8, 8, size=(M.arity - 1, 200, 3))
    ks = list(k) + [-k.sum(axis=0)]
    assert np.all(M(g, ks) == 0)


def test_kinetic_and_quartic_forms_reproduce_modified_energy(g8):
    u = random_field(g8, 5)
    kin = ml.lambda_k_fft(ml.kinetic_multiplier(P), u)
    quart = ml.lambda_k_fft(ml.quartic_multiplier(P, MP), u)
    assert relerr(kin, kinetic_energy(i_operator(u, P))) < 1e-10
    assert relerr(quart, potential_energy(i_operator(u, P), MP)) < 1e-10
    assert relerr(ml.modified_energy_forms(u, P, MP), modified_energy(u, P, MP)) < 1e-10


@pytest.mark.parametrize("name", ["kinetic", "quartic", "m4", "flux"])
def test_factorized_matches_bruteforce_arity_2_and_4(g4, name):
    M = {
        "kinetic": ml.kinetic_multiplier(P),
        "quartic": ml.quartic_multiplier(P, MP),
        "m4": ml.m4_multiplier(P, MP),
        "flux": ml.kinetic_flux_multiplier(P, MP),
    }[name]
    u = random_field(g4, 6)
    assert relerr(ml.lambda_k_fft(M, u), ml.lambda_k_bruteforce(M, u)) < 1e-10


def test_factorized_matches_bruteforce_distinct_fields(g4):
    fields = [random_field(g4, 10 + j) for j in range(4)]
    M = ml.m4_multiplier(P, MP)
    assert relerr(ml.lambda_k_fft(M, fields), ml.lambda_k_bruteforce(M, fields)) < 1e-10


def test_factorized_matches_bruteforce_six_linear():
    g = Grid(3, 3, 2 * np.pi / 1.5)
    u = random_field(g, 7)
    M6 = ml.m6_multiplier(IParams(1, 0.6), MP_RAW)
    a, b = ml.lambda_k_fft(M6, u), ml.lambda_k_bruteforce(M6, u)
    assert abs(b) > 1e-6
    assert relerr(a, b) < 1e-9


def test_separable_plan(g4):
    w = [lambda g: g.xi2, None, lambda g: np.cos(g.xi_norm), lambda g: 1 + g.xi_norm]
    M = ml.separable_multiplier(w, coeff=0.3 - 0.2j)
    u = random_field(g4, 8)
    assert relerr(ml.lambda_k_fft(M, u), ml.lambda_k_bruteforce(M, u)) < 1e-10


def test_symmetries_of_m4(g4):
    u = random_field(g4, 9)
    M = ml.m4_multiplier(P, MP)
    base = ml.lambda_k_bruteforce(M, u)
    for V in (ml.reflect(M), ml.permute_slots(M, (3, 2, 1, 4)), ml.permute_slots(M, (1, 4, 3, 2))):
        assert relerr(ml.lambda_k_bruteforce(V, u), base) < 1e-10


@settings(max_examples=8, deadline=None)
@given(seed=st.integers(0, 10**6), perm=st.permutations([1, 3]), perm2=st.permutations([2, 4]))
def test_symmetry_property_quartic(seed, perm, perm2):
    g = make_grid(3, 4, 3.0)
    u = random_field(g, seed)
    M = ml.quartic_multiplier(IParams(1, 0.4), MP_RAW)
    order = [perm[0], perm2[0], perm[1], perm2[1]]
    a = ml.lambda_k_bruteforce(ml.permute_slots(M, order), u)
    b = ml.lambda_k_fft(M, u)
    assert relerr(a, b) < 1e-10


def test_forms_are_real_valued(g4):
    u = random_field(g4, 11)
    for M in (ml.m4_multiplier(P, MP), ml.quartic_multiplier(P, MP)):
        assert type(ml.lambda_k_fft(M, u)) is float
        assert type(ml.lambda_k_bruteforce(M, u)) is float


def test_bruteforce_budget(g8):
    u = random_field(g8, 12)
    with pytest.raises(ml.BudgetExceeded, match="lambda_k_fft"):
        ml.lambda_k_bruteforce(ml.m4_multiplier(P, MP), u)


def test_fft_path_needs_a_plan(g4):
    with pytest.raises(ValueError, match="no factorized plan"):
        ml.lambda_k_fft(ml.reflect(ml.m4_multiplier(P, MP)), random_field(g4, 0))


def test_plan_validation_and_dump():
    M6 = ml.m6_multiplier(P, MP)
    text = M6.plan.dump()
    assert text.startswith("ConvPlan(arity=6)")
    assert "m^2(zeta)" in text and "B{" in text
    with pytest.raises(ValueError):
        ml.ConvPlan(4, (ml.PlanTerm(1.0, ml.Leaf(1), ml.Leaf(2)),))
    with pytest.raises(ValueError):
        ml.FreqMultiplier(3, lambda g, ks: 0)


def test_elongation_basics():
    K = ml.kinetic_multiplier(P)
    assert ml.elongate(K, 1, 0) is K
    with pytest.raises(ValueError):
        ml.elongate(K, 1, 1)
    with pytest.raises(ValueError):
        ml.elongate(K, 3, 2)
    g = make_grid(3, 16, 2 * np.pi)
    rng = np.random.default_rng(13)
    k1 = rng.integers(-7, 8, size=(100, 3))
    zero = np.zeros_like(k1)
    X = ml.elongate(K, 1, 2)
    assert X.arity == 4
    assert np.array_equal(X(g, [k1, zero, zero, -k1]), K(g, [k1, -k1]))


def test_elongation_rebuilds_m6():
    # M6 = i B(xi_23) [X^2_1(B(xi_23) m_1^2) - X^2_1(B(xi_23) m_1 m_2 m_3 m_4)]
    g = make_grid(3, 16, 2 * np.pi)
    wm = lambda *ks: ml.wm(g, P, *ks)
    B = lambda k: coupling_of_wavenumbers(g, MP, k)
    f1 = ml.pointwise(4, lambda g_, ks: B(ks[1] + ks[2]) * wm(ks[0]) ** 2)
    f2 = ml.pointwise(4, lambda g_, ks: B(ks[1] + ks[2]) * wm(ks[0]) * wm(ks[1]) * wm(ks[2]) * wm(ks[3]))
    X = ml.combine([(1.0, ml.elongate(f1, 1, 2)), (-1.0, ml.elongate(f2, 1, 2))])
    rebuilt = ml.pointwise(6, lambda g_, ks: 1j * B(ks[1] + ks[2]) * X(g_, ks))
    k = np.random.default_rng(14).integers(-8, 8, size=(5, 2000, 3))
    ks = list(k) + [-k.sum(axis=0)]
    direct = ml.m6_multiplier(P, MP)(g, ks)
    assert np.max(np.abs(rebuilt(g, ks) - direct)) <= 1e-13 * np.max(np.abs(direct))
    gs = Grid(3, 3, 2 * np.pi / 1.5)
    u = random_field(gs, 15)
    P1 = IParams(1, 0.6)
    B3 = lambda k: coupling_of_wavenumbers(gs, MP_RAW, k)
    w3 = lambda *ks: ml.wm(gs, P1, *ks)
    f1 = ml.pointwise(4, lambda g_, ks: B3(ks[1] + ks[2]) * w3(ks[0]) ** 2)
    f2 = ml.pointwise(4, lambda g_, ks: B3(ks[1] + ks[2]) * w3(ks[0]) * w3(ks[1]) * w3(ks[2]) * w3(ks[3]))
    X = ml.combine([(1.0, ml.elongate(f1, 1, 2)), (-1.0, ml.elongate(f2, 1, 2))])
    rebuilt = ml.pointwise(6, lambda g_, ks: 1j * B3(ks[1] + ks[2]) * X(g_, ks))
    assert relerr(ml.lambda_k_bruteforce(rebuilt, u), ml.lambda_k_fft(ml.m6_multiplier(P1, MP_RAW), u)) < 1e-9


def test_m4_mean_value_bound():
    # N_2 >~ N >> N_3 >= N_4:  |M4| <= C m_1 m_2 (N_3 / N_2) B(xi_23) |xi_1|^2
    g = make_grid(3, 512, 2 * np.pi)
    p = IParams(16, 0.6)
    rng = np.random.default_rng(16)
    n = 4000
    k2 = rng.integers(-200, 201, size=(n, 3))
    k2 = k2[np.linalg.norm(k2, axis=1) >= 32]
    n = len(k2)
    k3 = rng.integers(-3, 4, size=(n, 3))
    k4 = rng.integers(-2, 3, size=(n, 3))
    k1 = -(k2 + k3 + k4)
    N2 = np.linalg.norm(k2, axis=1)
    N3 = np.maximum(np.linalg.norm(k3, axis=1), np.linalg.norm(k4, axis=1))
    m1, m2 = ml.wm(g, p, k1), ml.wm(g, p, k2)
    M = np.abs(ml.m4_multiplier(p, ModelParams(3, 2.5, dealias=False))(g, [k1, k2, k3, k4]))
    bound = m1 * m2 * (np.maximum(N3, 1) / N2) * coupling_of_wavenumbers(g, ModelParams(3, 2.5, dealias=False), k2 + k3) * ml.wnorm2(g, k1)
    mask = bound > 0
    assert np.max(M[mask] / bound[mask]) <= 4.0


def test_wdot_polarization_on_nyquist():
    g = make_grid(1, 8, 2 * np.pi)
    k = np.array([[-4]])
    assert ml.wdot(g, k, -k)[0] == -16.0


def test_diff_law_zero_field(g8):
    assert ml.diff_law_residual(Field(g8, np.zeros(g8.shape)), MP, P) == 0.0


def test_diff_law_band_limited_s_one():
    g = make_grid(3, 16, 2 * np.pi)
    p = IParams(4, 1.0)
    uh = random_field(g, 17).spectral().values
    u = Field(g, np.where(g.xi_norm <= p.N, uh, 0), "spectral")
    assert ml.diff_law_residual(u, MP, p) <= 1e-8


def test_diff_law_rough_field(g8):
    assert ml.diff_law_residual(random_field(g8, 18), MP, P) <= 1e-8


def test_increment_residual_s_one(g8):
    u = random_field(g8, 19, decay=2.0)
    res = evolve(u, EvolveConfig(2e-3, 0.1), MP, keep_snapshots=True)
    p = IParams(2, 1.0)
    e0, delta, integral = ml.increment_terms(res.snapshots, p, MP)
    assert integral == 0.0
    assert abs(delta) <= 1e-6 * abs(e0)


def test_increment_residual_small_for_band_limited_data():
    g = make_grid(3, 8, 2 * np.pi)
    p = IParams(6, 0.6)  # N/3 = 2: data in |xi| <= 1 stays low for a short run
    uh = random_field(g, 20).spectral().values
    u = Field(g, np.where(g.xi_norm <= 1.0, uh, 0), "spectral").physical() * 0.2
    res = evolve(u, EvolveConfig(1e-3, 0.05), MP, keep_snapshots=True)
    assert ml.increment_residual(res.snapshots, p, MP) <= 1e-8


def test_increment_needs_two_snapshots(g8):
    with pytest.raises(ValueError):
        ml.increment_residual([(0.0, random_field(g8, 0))], P, MP)
