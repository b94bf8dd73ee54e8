"""Unit tests for identities, phase classification and the splitting and vanishing checks."""

import math

import numpy as np
import pytest

from choquard.diagnostics import (
    brezis_lieb_defect,
    bump_profile,
    classify_exponents,
    hls_exponents,
    identity_report,
    local_mass_concentration,
    loglog_slope,
    nehari_residual,
    pohozaev_residual,
    pointwise_splitting_defect,
    predicted_vanishing_slope,
    vanishing_decay_test,
)
from choquard.errors import GridTooSmallError, ShapeMismatchError, ShiftOutOfRangeError
from choquard.functionals import d_functional
from choquard.models import Field, Grid, Params, PhaseLabel
from choquard.spectral_core import build_riesz_kernel, direct_convolve_oracle, translate_field


@pytest.fixture
def bl_setup():
    """Fixture to provide a unit-spacing box with a compact bump at its centre."""
    grid = Grid(dim=3, n=24, length=24.0)
    kernel = build_riesz_kernel(grid, 2.0)
    bump = Field(grid, bump_profile(1.5)(grid.coords))
    return grid, kernel, bump


@pytest.fixture(scope="module")
def vanish_kernel():
    """Fixture to provide a fine grid for dilated bumps."""
    return build_riesz_kernel(Grid(dim=3, n=64, length=9.0), 2.0)


def test_identity_report_zero(unit_grid, unit_kernel, newton_params):
    """Test that every entry vanishes for the zero field."""
    report = pohozaev_residual(Field.zeros(unit_grid), newton_params, unit_kernel)

    assert (report.kinetic, report.mass, report.nonlocal_) == (0.0, 0.0, 0.0)
    assert report.pohozaev == 0.0
    assert nehari_residual(Field.zeros(unit_grid), newton_params, unit_kernel) == 0.0


def test_identity_report_spike(unit_grid, unit_kernel, newton_params, make_spikes):
    """Test the Pohozaev combination of a spike with K = 1.5 and M = 1."""
    spike = make_spikes(unit_grid, (2, 3, 3))
    nonlocal_ = float(np.sum(direct_convolve_oracle(spike, unit_kernel).data * spike.data))

    report = identity_report(spike, newton_params, unit_kernel)
    assert report.kinetic == pytest.approx(1.5)
    assert report.mass == 1.0
    assert report.nonlocal_ == pytest.approx(nonlocal_, rel=1e-12)
    assert report.pohozaev == pytest.approx(0.75 + 1.5 - 5 * nonlocal_, rel=1e-12)


def test_nehari_residual_random_field(random_field, unit_kernel, newton_params):
    """Test that a random field violates the Nehari identity."""
    assert abs(nehari_residual(random_field, newton_params, unit_kernel)) > 1e-3


@pytest.mark.parametrize(
    "N, alpha, p, q, label",
    [
        (3, 2.0, 2.0, 2.0, PhaseLabel.EXISTS),
        (3, 2.0, 5.0, 5.0, PhaseLabel.CRITICAL_UPPER),
        (4, 1.0, 1.0, 1.0, PhaseLabel.NONEXIST_SUBCRITICAL),
        (3, 2.0, 6.0, 5.0, PhaseLabel.NONEXIST_SUPERCRITICAL),
        (3, 2.0, 5 / 3, 5 / 3, PhaseLabel.CRITICAL_LOWER),
    ],
)
def test_classify_known_points(N, alpha, p, q, label):
    """Test the label of representative exponents."""
    assert classify_exponents(Params(N=N, alpha=alpha, p=p, q=q)).label == label


def test_classify_coefficients():
    """Test the sign coefficients for N=3, alpha=2, p=q=2."""
    classification = classify_exponents(Params(N=3, alpha=2.0, p=2.0, q=2.0))

    assert classification.a1 == pytest.approx(-0.75)
    assert classification.a2 == pytest.approx(0.25)
    assert classification.to_dict()["label"] == "Exists"
    assert classification.lower == pytest.approx(10 / 3)
    assert classification.upper == pytest.approx(10.0)


def test_classify_critical_coefficients_are_exact():
    """Test that the vanishing coefficient is exactly zero on both critical lines."""
    upper = classify_exponents(Params(N=3, alpha=2.0, p=4.0, q=6.0))
    lower = classify_exponents(Params(N=4, alpha=1.0, p=1.25, q=1.25))

    assert upper.label == PhaseLabel.CRITICAL_UPPER
    assert upper.a1 == 0.0
    assert upper.a2 > 0
    assert lower.label == PhaseLabel.CRITICAL_LOWER
    assert lower.a2 == 0.0
    assert lower.a1 < 0


def test_classify_matches_coefficient_signs(rng):
    """Test the classifier against the signs of a1 and a2 on random parameters."""
    for _ in range(10**4):
        N = int(rng.integers(3, 6))
        alpha = float(rng.uniform(0.01, N - 0.01))
        p, q = rng.uniform(0.05, 8.0, size=2)
        classification = classify_exponents(Params(N=N, alpha=alpha, p=float(p), q=float(q)))
        a1, a2 = classification.a1, classification.a2

        if classification.label == PhaseLabel.EXISTS:
            assert a1 < 0 < a2
        elif classification.label in (
            PhaseLabel.NONEXIST_SUPERCRITICAL,
            PhaseLabel.CRITICAL_UPPER,
        ):
            assert a1 >= 0 and a2 > 0
        else:
            assert a1 < 0 and a2 <= 0


@pytest.mark.parametrize("N, alpha", [(3, 2.0), (4, 1.0), (5, 0.5)])
def test_classify_boundaries_are_critical(N, alpha):
    """Test that p + q on either window edge is labelled critical."""
    lower = 2 * (N + alpha) / N
    upper = 2 * (N + alpha) / (N - 2)

    assert (
        classify_exponents(Params(N=N, alpha=alpha, p=lower / 2, q=lower / 2)).label
        == PhaseLabel.CRITICAL_LOWER
    )
    assert (
        classify_exponents(Params(N=N, alpha=alpha, p=upper / 3, q=2 * upper / 3)).label
        == PhaseLabel.CRITICAL_UPPER
    )


def test_brezis_lieb_trivial_partners(bl_setup, newton_params):
    """Test that the defect vanishes when either bump is zero."""
    grid, kernel, bump = bl_setup
    shifts = [(4, 0, 0), (6, 0, 0)]

    assert brezis_lieb_defect(bump, Field.zeros(grid), shifts, newton_params, kernel) == [0, 0]
    assert brezis_lieb_defect(Field.zeros(grid), bump, shifts, newton_params, kernel) == [0, 0]


def test_brezis_lieb_decay(bl_setup, newton_params):
    """Test that the defect decays like the kernel tail as the bumps separate."""
    _, kernel, bump = bl_setup
    shifts = [(4, 0, 0), (6, 0, 0), (8, 0, 0)]

    defects = brezis_lieb_defect(bump, bump, shifts, newton_params, kernel)
    assert defects[0] > defects[1] > defects[2] > 0
    slope = loglog_slope([4.0, 6.0, 8.0], defects)
    assert slope == pytest.approx(-(3 - 2.0), rel=0.3)


def test_brezis_lieb_shift_out_of_box(bl_setup, newton_params):
    """Test that shifts pushing the bump out of the box are rejected."""
    _, kernel, bump = bl_setup

    with pytest.raises(ShiftOutOfRangeError):
        brezis_lieb_defect(bump, bump, [(12, 0, 0)], newton_params, kernel)


def test_brezis_lieb_grid_mismatch(bl_setup, newton_params, random_field):
    """Test that both bumps must share the kernel's grid."""
    _, kernel, bump = bl_setup

    with pytest.raises(ShapeMismatchError):
        brezis_lieb_defect(bump, random_field, [(4, 0, 0)], newton_params, kernel)


def test_pointwise_splitting_defect(bl_setup):
    """Test that the local defect is zero for disjoint supports and positive otherwise."""
    _, _, bump = bl_setup

    far = bump + translate_field(bump, (4, 0, 0), strict=True)
    near = bump + translate_field(bump, (1, 0, 0), strict=True)
    assert pointwise_splitting_defect(far, bump, 2.0, 2.4) == 0.0
    assert pointwise_splitting_defect(near, bump, 2.0, 2.4) > 0.0


def test_bump_profile():
    """Test the compact bump shape."""
    profile = bump_profile(2.0, power=2)
    coords = (np.array([0.0, 1.0, 3.0]), np.zeros(3), np.zeros(3))

    np.testing.assert_allclose(profile(coords), [1.0, 0.5625, 0.0])


def test_hls_exponents():
    """Test the HLS exponents and the relation l q = p t."""
    assert hls_exponents(Params(N=3, alpha=2.0, p=2.0, q=2.0)) == pytest.approx((1.2, 1.2))

    params = Params(N=4, alpha=1.0, p=1.5, q=2.5)
    ell, t = hls_exponents(params)
    assert ell * params.q == pytest.approx(t * params.p)
    # |u|^q in L^ell and |u|^p in L^t satisfy 1/ell + (N - alpha)/N + 1/t = 2
    assert 1 / ell + (4 - 1.0) / 4 + 1 / t == pytest.approx(2.0)


def test_predicted_vanishing_slope():
    """Test N(p+q)/2 - (N + alpha)."""
    assert predicted_vanishing_slope(Params(N=3, alpha=2.0, p=2.0, q=2.0)) == pytest.approx(1.0)
    assert predicted_vanishing_slope(Params(N=3, alpha=2.0, p=5 / 3, q=5 / 3)) == pytest.approx(
        0.0, abs=1e-14
    )


def test_loglog_slope():
    """Test the fitted exponent of an exact power law."""
    xs = [1.0, 2.0, 4.0, 8.0]
    assert loglog_slope(xs, [3 * x**-1.5 for x in xs]) == pytest.approx(-1.5)


def test_local_mass_concentration(unit_grid, make_spikes):
    """Test the largest ball mass of a spike and of a constant field."""
    spike = make_spikes(unit_grid, (2, 2, 2), amplitude=3.0)
    ones = Field(unit_grid, np.ones(unit_grid.shape))

    assert local_mass_concentration(spike) == pytest.approx(9.0)
    # the unit ball around an interior cell holds 7 cells
    assert local_mass_concentration(ones) == pytest.approx(7.0)
    assert local_mass_concentration(ones, radius=1.5, s=1.0) == pytest.approx(19.0)


def test_vanishing_identity_scaling(vanish_kernel, newton_params):
    """Test that lambda = 1 reproduces D of the profile."""
    profile = bump_profile(1.0)
    grid = vanish_kernel.grid

    (sample,) = vanishing_decay_test(profile, [1.0], newton_params, vanish_kernel)
    assert sample.lam == 1.0
    expected = d_functional(Field(grid, profile(grid.coords)), newton_params, vanish_kernel)
    assert sample.d_value == expected


@pytest.mark.parametrize("p, q", [(2.0, 2.0), (1.5, 2.0), (2.5, 3.0)])
def test_vanishing_slope(vanish_kernel, p, q):
    """Test the log-log slope of D along L2-preserving dilations."""
    params = Params(N=3, alpha=2.0, p=p, q=q)
    lambdas = [1.0, 0.5, 0.25]

    samples = vanishing_decay_test(bump_profile(1.0), lambdas, params, vanish_kernel)
    slope = loglog_slope(lambdas, [s.d_value for s in samples])
    assert slope == pytest.approx(predicted_vanishing_slope(params), rel=0.05)

    ratios = [s.hls_ratio for s in samples]
    assert max(ratios) / min(ratios) < 1.05
    concentrations = [s.concentration for s in samples]
    assert concentrations[0] > concentrations[1] > concentrations[2]


def test_vanishing_critical_sum(vanish_kernel):
    """Test that D stays constant when p + q sits on the lower critical line."""
    params = Params(N=3, alpha=2.0, p=5 / 3, q=5 / 3)

    samples = vanishing_decay_test(bump_profile(1.0), [1.0, 0.5, 0.25], params, vanish_kernel)
    values = [s.d_value for s in samples]
    assert max(values) / min(values) < 1.02


def test_vanishing_slope_sign_flip(vanish_kernel):
    """Test that the slope changes sign across the lower critical line."""
    below = Params(N=3, alpha=2.0, p=1.5, q=1.5)
    above = Params(N=3, alpha=2.0, p=1.9, q=1.9)
    lambdas = [1.0, 0.5, 0.25]

    slopes = []
    for params in (below, above):
        samples = vanishing_decay_test(bump_profile(1.0), lambdas, params, vanish_kernel)
        slopes.append(loglog_slope(lambdas, [s.d_value for s in samples]))
    assert slopes[0] < 0 < slopes[1]


def test_vanishing_rejects_bad_lambda(vanish_kernel, newton_params):
    """Test that dilation factors must lie in (0, 1]."""
    for lam in (0.0, 1.5, -0.5):
        with pytest.raises(ValueError, match="Dilation"):
            vanishing_decay_test(bump_profile(1.0), [lam], newton_params, vanish_kernel)


def test_vanishing_grid_too_small(vanish_kernel, newton_params):
    """Test that a profile reaching the box faces is rejected."""
    with pytest.raises(GridTooSmallError):
        vanishing_decay_test(bump_profile(1.0), [0.2], newton_params, vanish_kernel)


def test_vanishing_expected_slope_value():
    """Test the slope predicted for the three tested exponent pairs."""
    slopes = [
        predicted_vanishing_slope(Params(N=3, alpha=2.0, p=p, q=q))
        for p, q in ((2.0, 2.0), (1.5, 2.0), (2.5, 3.0))
    ]
    assert slopes == pytest.approx([1.0, 0.25, 3.25])
    assert math.isclose(hls_exponents(Params(N=3, alpha=2.0, p=2.0, q=2.0))[1], 1.2)
