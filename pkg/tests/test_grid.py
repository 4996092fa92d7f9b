import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hartree_lab.grid import (
    Field,
    Grid,
    apply_symbol,
    conj_spectrum,
    load_snapshot,
    make_grid,
    plane_wave,
    save_snapshot,
    transform,
)
from hartree_lab.multipliers import Bracket, IOp, IParams, Riesz
from hartree_lab.functionals import sobolev_norm

from conftest import random_field


def test_make_grid_lattice_1d():
    g = make_grid(1, 8, 2 * np.pi)
    assert list(g.wavenumbers) == [0, 1, 2, 3, -4, -3, -2, -1]
    assert g.dk == pytest.approx(1.0)
    assert sorted(g.xi_axis) == [-4, -3, -2, -1, 0, 1, 2, 3]


def test_make_grid_mode_count():
    assert make_grid(3, 16, 32.0).n_modes == 4096


@pytest.mark.parametrize("n", [6, 2, 12, 0])
def test_make_grid_rejects_bad_n(n):
    with pytest.raises(ValueError):
        make_grid(2, n, 1.0)


@pytest.mark.parametrize("L", [0.0, -1.0])
def test_make_grid_rejects_bad_length(L):
    with pytest.raises(ValueError):
        make_grid(2, 8, L)


def test_constant_field_spectrum():
    g = make_grid(2, 8, 3.0)
    c = 0.7 - 0.2j
    uh = transform(Field(g, np.full(g.shape, c)), "spectral").values
    assert uh[0, 0] == pytest.approx(c * np.sqrt(g.n_modes), rel=1e-14)
    uh[0, 0] = 0
    assert np.max(np.abs(uh)) < 1e-13


def test_plane_wave_is_a_spike():
    g = make_grid(3, 8, 2 * np.pi)
    uh = plane_wave(g, (1, -2, 3)).spectral().values
    idx = np.unravel_index(np.argmax(np.abs(uh)), g.shape)
    assert tuple(int(g.wavenumbers[i]) for i in idx) == (1, -2, 3)
    spike = uh[idx]
    uh[idx] = 0
    assert np.max(np.abs(uh)) < 1e-12 * abs(spike)


def test_transform_idempotent_and_round_trip(g8):
    u = random_field(g8, 1)
    assert transform(u, "physical") is u
    back = u.spectral().physical()
    assert np.max(np.abs(back.values - u.values)) <= 1e-12 * np.max(np.abs(u.values))


@settings(max_examples=25, deadline=None)
@given(d=st.integers(1, 3), logn=st.integers(2, 4), L=st.floats(0.5, 50.0), seed=st.integers(0, 10**6))
def test_plancherel_property(d, logn, L, seed):
    g = make_grid(d, 2**logn, L)
    u = random_field(g, seed)
    a, b = u.norm(), u.spectral().norm()
    assert abs(a - b) <= 1e-12 * a


def test_apply_symbol_identity_and_eigenfunction():
    g = make_grid(3, 8, 4.0)
    u = plane_wave(g, (2, 0, -1), 1.5)
    assert np.allclose(apply_symbol(u, 1.0).values, u.values, atol=1e-13)
    lap = apply_symbol(u, lambda grid: grid.xi2)
    xi2 = g.dk**2 * (4 + 1)
    assert np.max(np.abs(lap.values - xi2 * u.values)) < 1e-12 * xi2


def test_apply_symbol_keeps_input(g8):
    u = random_field(g8, 2)
    before = u.values.copy()
    apply_symbol(u, Bracket(1.0))
    assert np.array_equal(before, u.values)


def test_bracket_symbol_matches_sobolev_norm(g8):
    u = random_field(g8, 3)
    for s in (-0.5, 0.6, 1.0, 2.0):
        a = apply_symbol(u, Bracket(s)).norm()
        assert a == pytest.approx(sobolev_norm(u, s), rel=1e-12)


def test_symbol_composition(g8):
    u = random_field(g8, 4)
    s1, s2 = IOp(IParams(2, 0.6)), Bracket(0.7)
    a = apply_symbol(apply_symbol(u, s1), s2)
    b = apply_symbol(u, lambda g: s1.evaluate(g) * s2.evaluate(g))
    assert np.max(np.abs(a.values - b.values)) <= 1e-12 * np.max(np.abs(a.values))


def test_real_symbol_preserves_realness(g8):
    u = Field(g8, random_field(g8, 5).values.real)
    out = apply_symbol(u, Bracket(-1.3))
    assert np.max(np.abs(out.values.imag)) <= 1e-12 * u.norm()


def test_singular_symbol_needs_zero_mode_rule(g8):
    u = random_field(g8, 6)
    with pytest.raises(ValueError), np.errstate(divide="ignore"):
        apply_symbol(u, lambda g: g.xi_norm ** -1.0)
    with pytest.raises(ValueError):
        Riesz(-1.0)
    out = apply_symbol(u, Riesz(-1.0, zero_mode=0.0))
    assert np.all(np.isfinite(out.values))


def test_conj_spectrum_matches_physical_conjugate(g8):
    u = random_field(g8, 7)
    a = conj_spectrum(u.spectral().values)
    b = transform(Field(g8, np.conj(u.values)), "spectral").values
    assert np.max(np.abs(a - b)) < 1e-12 * np.max(np.abs(b))
    assert np.allclose(u.spectral().conj().physical().values, np.conj(u.values), atol=1e-12)


@pytest.mark.parametrize("rep", ["physical", "spectral"])
def test_snapshot_round_trip(tmp_path, rep):
    g = make_grid(2, 8, 3.5)
    u = transform(random_field(g, 8), rep)
    path = tmp_path / "u.bin"
    save_snapshot(path, u)
    v = load_snapshot(path)
    assert v.grid == g and v.representation == rep
    assert np.array_equal(v.values, u.values)
    header = path.read_bytes().split(b"\n", 1)[0].decode()
    assert header.startswith("HARTREE-SNAPSHOT v1 d=2 n=8")


def test_snapshot_rejects_foreign_file(tmp_path):
    path = tmp_path / "x.bin"
    path.write_bytes(b"hello\n")
    with pytest.raises(ValueError):
        load_snapshot(path)


def test_small_odd_lattice_is_constructible():
    g = Grid(3, 3, 1.0)
    assert list(g.wavenumbers) == [0, 1, -1]
