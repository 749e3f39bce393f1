import numpy as np
import pytest

from laminate_fracture.elastic import solve
from laminate_fracture.materials import LaminateSpec, MaterialPhase, ref1
from laminate_fracture.mesh import MeshParams, build_mesh, x_grid
from laminate_fracture.release import (INTERFACE, M_RIGHT, REGULAR, TERMINAL, InvalidExtension,
                                       Source, canonical_profile, hat_profile, holder_check,
                                       integral_consistency, interface_mask,
                                       release_curve, release_domain_integral,
                                       release_fd_oracle, strip_bounds, trapezoid_profile)

from conftest import SMALL, homogeneous


def _di(spec, params, l, phi=None):
    mesh = build_mesh(spec, params, l)
    return release_domain_integral(mesh, solve(mesh), phi=phi)


def test_domain_integral_matches_energy_difference_homogeneous():
    # the one-cell forward difference is first-order biased: the gap halves with h
    spec = homogeneous()
    gaps = []
    for epl in (16, 32):
        p = MeshParams(elems_per_layer_x=epl, elems_y=16)
        h = 0.5 / epl
        gaps.append([abs(_di(spec, p, l) / release_fd_oracle(spec, p, l, h) - 1)
                     for l in (0.375, 0.5, 0.625)])
    coarse, fine = np.array(gaps)
    assert np.all(fine < 0.03)
    np.testing.assert_allclose(coarse / fine, 2.0, atol=0.15)


def test_profile_independence():
    spec, p = ref1(n_layers=4), MeshParams()
    xs = x_grid(spec, p)
    h = xs[1] - xs[0]
    for l in (0.3125, 0.5625):
        a, b = strip_bounds(spec, l)
        g = _di(spec, p, l)
        narrow = trapezoid_profile(a, l - np.floor((l - a) / 4 / h) * h,
                                   l + np.floor((b - l) / 4 / h) * h, b)
        assert abs(_di(spec, p, l, narrow) / g - 1) < 0.01


def test_profile_leaving_strip_rejected():
    spec = ref1(n_layers=2)
    with pytest.raises(InvalidExtension, match="support"):
        _di(spec, MeshParams(), 0.375, hat_profile(0.2, 0.375, 0.45))


def test_profile_must_equal_one_at_tip():
    with pytest.raises(InvalidExtension, match="phi"):
        _di(ref1(), MeshParams(), 0.375, hat_profile(0.25, 0.4, 0.5))


def test_tip_on_interface_rejected():
    with pytest.raises(InvalidExtension, match="interface"):
        _di(ref1(), MeshParams(), 0.5, hat_profile(0.25, 0.5, 0.75))


def test_horizontal_profile_vanishes_at_ends():
    spec = ref1("horizontal", 2)
    xs = x_grid(spec, MeshParams())
    for l in (0.125, 0.5, 0.9375):
        phi = canonical_profile(spec, xs, l)
        v = phi(xs)
        assert v[0] == 0 and v[-1] == 0
        assert phi(l) == pytest.approx(1.0)


def test_canonical_vertical_profile_stays_in_strip():
    spec = ref1(n_layers=2)
    xs = x_grid(spec, MeshParams())
    phi = canonical_profile(spec, xs, 0.3125)
    v = phi(xs)
    assert np.all(v[(xs <= 0.25) | (xs >= 0.5)] == 0)
    assert phi(0.3125) == 1.0


def test_oracle_refuses_to_straddle_interface():
    with pytest.raises(ValueError, match="straddles"):
        release_fd_oracle(ref1(), MeshParams(), 0.46875, 0.0625)


def test_curve_flags_and_interface_values(ref1_n2_curve):
    c = ref1_n2_curve
    on = interface_mask(c.spec, c.tips)
    assert np.all(c.flags[on & (c.tips < 1)] == INTERFACE)
    assert np.all(c.flags[~on] == REGULAR)
    assert c.flags[-1] == TERMINAL and c.release[-1] == 0.0
    for k in np.flatnonzero(c.flags == INTERFACE):
        assert c.release[k] == np.min(c.release[k + 1:k + 1 + M_RIGHT])


def test_release_is_positive_before_the_end(ref1_n2_curve):
    assert np.all(ref1_n2_curve.release[:-1] > 0)


def test_curve_integrates_to_energy_drop(ref1_n2_curve):
    c = ref1_n2_curve
    assert integral_consistency(c) < 0.02 * (c.energy[0] - c.energy[-1])
    # away from the crack mouth each cell's drop matches the trapezoid of G
    t, e, g = c.tips, c.energy, c.release
    ok = (c.flags[:-1] == REGULAR) & (c.flags[1:] == REGULAR) & (t[:-1] >= 0.25)
    drop = e[:-1] - e[1:]
    trap = 0.5 * (g[:-1] + g[1:]) * np.diff(t)
    assert np.max(np.abs(drop - trap)[ok] / drop[ok]) < 0.05


def test_curve_needs_four_elements_per_layer():
    with pytest.raises(ValueError, match="elems_per_layer_x"):
        release_curve(ref1(), MeshParams(elems_per_layer_x=2))


def test_finite_difference_source():
    spec = homogeneous()
    c = release_curve(spec, SMALL, source="finite-difference")
    assert c.source is Source.FINITE_DIFFERENCE
    expect = (c.energy[:-2] - c.energy[1:-1]) / np.diff(c.tips)[:-1]
    np.testing.assert_allclose(c.release[:-2], expect)


def test_homogeneous_layers_are_one_strip():
    spec = homogeneous(4)
    assert strip_bounds(spec, 0.3) == (0.0, 1.0)
    assert interface_mask(spec, np.array([0.25, 0.5, 1.0])).tolist() == [False, False, True]


def test_equal_stiffness_laminate_matches_homogeneous_release():
    # toughness contrast alone leaves the energy unchanged; the release rate
    # differs only through the strip-bound profile, worst one cell past an
    # interface where that error is first order in h
    lam = LaminateSpec(1.0, 0.5, 2, 0.5, MaterialPhase(1, 1, 1), MaterialPhase(1, 1, 2))
    first_cell = []
    for epl in (8, 16):
        p = MeshParams(elems_per_layer_x=epl, elems_y=8)
        a, b = release_curve(lam, p), release_curve(homogeneous(2), p)
        np.testing.assert_allclose(a.energy, b.energy, rtol=1e-12)
        h = 0.5 / epl
        after = np.isin(np.round((a.tips - h) / h).astype(int),
                        np.round(lam.interfaces()[:-1] / h).astype(int))
        reg = a.flags == REGULAR
        with np.errstate(invalid="ignore"):     # 0/0 at the terminal sample
            rel = np.abs(a.release / b.release - 1)
        assert np.max(rel[reg & ~after]) < 0.01
        first_cell.append(np.max(rel[reg & after]))
    assert first_cell[1] < 0.6 * first_cell[0]


def test_at_and_interpolate(ref1_n2_curve):
    c = ref1_n2_curve
    assert c.at(c.tips[5]) == c.release[5]
    with pytest.raises(ValueError):
        c.at(0.3)
    mid = 0.5 * (c.tips[5] + c.tips[6])
    assert c.interpolate(mid) == pytest.approx(0.5 * (c.release[5] + c.release[6]))
    s = c.scaled(2.0)
    np.testing.assert_array_equal(s.release, 2 * c.release)


def test_holder_check(ref1_n2_curve):
    m = holder_check(ref1_n2_curve, (0.25, 0.75))
    assert np.isfinite(m) and m > 0
    with pytest.raises(ValueError):
        holder_check(ref1_n2_curve, (0.0, 0.5))


def test_profiles():
    hat = hat_profile(0.0, 0.25, 1.0)
    np.testing.assert_allclose(hat([0.0, 0.125, 0.25, 0.625, 1.0]), [0, 0.5, 1, 0.5, 0])
    trap = trapezoid_profile(0.0, 0.0, 0.5, 1.0)
    np.testing.assert_allclose(trap([0.0, 0.25, 0.75, 1.0]), [0, 1, 0.5, 0])
