import math

import numpy as np
import pytest

from fdxlab.exponents import ProblemParams, Regime
from fdxlab.profiles import constant, critical_log, power_law
from fdxlab.solver import GridField
from fdxlab.ulmorrey import (
    ScanGrid,
    check_condition,
    morrey,
    norm,
    orlicz_ball_average,
    orlicz_eta,
)

SUP = ProblemParams(N=1, m=0.5, p=3.0)


# -- orlicz ball averages ----------------------------------------------------------


def test_orlicz_average_of_constant_is_identity():
    for alpha in (0.5, 1.0, 2.0):
        for sigma in (0.1, 1.0, 7.0):
            assert orlicz_ball_average(constant(2.5, 2), alpha, 0.7, sigma) == pytest.approx(2.5)
    assert orlicz_ball_average(constant(0.0, 1), 1.0, 0.0, 1.0) == 0.0


def test_orlicz_average_power_profile_oracle():
    # pinned quadrature + inversion oracle for PowerLaw(1, 0.8), N=1, alpha=1, sigma=0.1
    val = orlicz_ball_average(power_law(1.0, 0.8, 1), 1.0, 0.0, 0.1)
    assert val == pytest.approx(47.64842202132057, rel=1e-8)


def test_orlicz_average_respects_scale():
    # scale enters inside psi, not linearly; constant data still returns scale * c
    assert orlicz_ball_average(constant(0.4, 1), 1.5, 0.0, 1.0, scale=3.0) == pytest.approx(1.2)


# -- norm --------------------------------------------------------------------------


def test_norm_constant_profile_attains_cap():
    spec = morrey(q=2.0, alpha=1.0, R=4.0)
    scan = ScanGrid.build(spec, r_min=1e-2, centers=(0.0, 1.0))
    res = norm(constant(3.0, 1), spec, scan)
    # value c * sigma^{N/q} maximized at the largest scanned radius below R
    assert res.value == pytest.approx(3.0 * res.arg_radius ** (1.0 / 2.0), rel=1e-12)
    assert res.arg_radius == pytest.approx(4.0, rel=1e-6)


def test_norm_exact_power_profile_radius_independent():
    # |||c |x|^{-2/(p-m)}|||_{N(p-m)/2, 1; inf} = 5c for N=1, m=0.5, p=3
    prof = power_law(0.1, 0.8, 1)
    spec = morrey(q=1.25, alpha=1.0, R=math.inf)
    scan = ScanGrid.build(spec, r_min=1e-3, centers=(0.0,), radii_per_decade=16)
    res = norm(prof, spec, scan)
    assert res.value == pytest.approx(0.5, rel=1e-10)
    assert res.arg_center == 0.0


def test_norm_beta_above_one_oracle():
    # analytic 1-D power integral oracle: value = (1/0.12)^{1/1.1} * c
    prof = power_law(0.1, 0.8, 1)
    spec = morrey(q=1.25, alpha=1.1, R=math.inf)
    scan = ScanGrid.build(spec, r_min=1e-3, centers=(0.0,), radii_per_decade=16)
    res = norm(prof, spec, scan)
    assert res.value == pytest.approx(0.1 * 6.8723925464104765, rel=1e-10)


def test_norm_divergent_power_profile_reports_inf():
    prof = power_law(1.0, 0.3, 1)  # N/q - a = 0.8 - 0.3 > 0: grows with sigma
    spec = morrey(q=1.25, alpha=1.0, R=math.inf)
    scan = ScanGrid.build(spec, r_min=1e-3, centers=(0.0,), radii_per_decade=4)
    assert math.isinf(norm(prof, spec, scan).value)


def test_norm_empty_scan_error():
    spec = morrey(q=1.25, alpha=1.0, R=1.0)
    with pytest.raises(ValueError):
        norm(power_law(0.1, 0.8, 1), spec, ScanGrid(centers=(), radii=(0.5,)))


def test_norm_homogeneity_exact_on_same_scan():
    spec = morrey(q=2.0, alpha=1.0, R=2.0)
    scan = ScanGrid.build(spec, r_min=1e-2, centers=(0.0, 0.5))
    base = norm(power_law(1.0, 0.5, 1), spec, scan).value
    scaled = norm(power_law(3.0, 0.5, 1), spec, scan).value
    assert scaled == pytest.approx(3.0 * base, rel=1e-12)


def _random_field(rng, N=1, cells=128, R=4.0) -> GridField:
    u = rng.uniform(0.0, 1.0, size=cells) ** 2
    return GridField(N=N, dr=R / cells, u=u, R_dom=R)


def test_norm_monotone_under_domination():
    rng = np.random.default_rng(7)
    spec = morrey(q=2.0, alpha=1.0, R=1.0)
    for _ in range(10):
        f = _random_field(rng)
        g = GridField(f.N, f.dr, f.u + rng.uniform(0.0, 0.5, size=len(f.u)), f.R_dom)
        scan = ScanGrid.for_field(f, spec, radii_per_decade=8)
        assert norm(f, spec, scan).value <= norm(g, spec, scan).value * (1.0 + 1e-12)


def test_norm_radius_cap_monotone():
    prof = power_law(1.0, 0.5, 1)
    vals = []
    for R in (0.5, 1.0, 2.0, 4.0):
        spec = morrey(q=1.6, alpha=1.0, R=R)
        scan = ScanGrid.build(spec, r_min=1e-3, centers=(0.0,), radii_per_decade=8)
        vals.append(norm(prof, spec, scan).value)
    assert all(a <= b * (1.0 + 1e-12) for a, b in zip(vals, vals[1:]))


def test_doubling_property_on_random_fields():
    # sup_z mass(B(z, 2R)) <= 3^N sup_z mass(B(z, R)) for N = 1
    rng = np.random.default_rng(2024)
    R = 0.5
    for _ in range(100):
        f = _random_field(rng, cells=96, R=4.0)
        m1 = max(f.ball_mass_at(d, R) for d in f.r[::2])
        m2 = max(f.ball_mass_at(d, 2 * R) for d in f.r[::2])
        assert m2 <= 3.0 * m1 * (1.0 + 1e-9)


def test_scale_equivalence_two_sided():
    # norm at cap R vs cap 1: within [1, R^{N/q} 3^{N/alpha}] on random fields
    rng = np.random.default_rng(11)
    R, q, alpha = 4.0, 2.0, 1.0
    bound = R ** (1.0 / q) * 3.0
    for _ in range(10):
        f = _random_field(rng, cells=96, R=8.0)
        spec_R = morrey(q=q, alpha=alpha, R=R)
        spec_1 = morrey(q=q, alpha=alpha, R=1.0)
        scan_R = ScanGrid.for_field(f, spec_R, radii_per_decade=8)
        scan_1 = ScanGrid.for_field(f, spec_1, radii_per_decade=8)
        v_R = norm(f, spec_R, scan_R).value
        v_1 = norm(f, spec_1, scan_1).value
        assert v_1 <= v_R * (1.0 + 1e-12)
        assert v_R <= bound * v_1 * (1.0 + 1e-12)


# -- check_condition ----------------------------------------------------------------


def test_check_condition_subcritical_constant_mass():
    params = ProblemParams(N=1, m=0.5, p=1.2)
    v = check_condition(params, constant(0.3, 1), T=1.0, delta=1.0, beta_or_alpha=1.0)
    assert v.regime is Regime.SUBCRITICAL
    assert v.condition_value == pytest.approx(0.6)  # mass of B(z, 1) in 1-D
    assert v.met
    v2 = check_condition(params, constant(0.3, 1), T=1.0, delta=0.5, beta_or_alpha=1.0)
    assert not v2.met


def test_check_condition_supercritical_power_profile():
    v = check_condition(SUP, power_law(0.1, 0.8, 1), T=math.inf, delta=1.0, beta_or_alpha=1.1)
    assert v.regime is Regime.SUPERCRITICAL
    assert v.condition_value == pytest.approx(0.1 * 6.8723925464104765, rel=1e-8)
    assert v.met
    assert math.isinf(v.T_used)


def test_check_condition_zero_data():
    v = check_condition(SUP, constant(0.0, 1), T=1.0, delta=1e-12, beta_or_alpha=1.1)
    assert v.condition_value == 0.0
    assert v.met


def test_check_condition_rejects_bad_beta():
    with pytest.raises(ValueError):
        check_condition(SUP, power_law(0.1, 0.8, 1), T=1.0, delta=1.0, beta_or_alpha=1.5)


def test_check_condition_critical_uses_orlicz():
    params = ProblemParams(N=2, m=0.5, p=1.5)
    prof = critical_log(0.02, 2)
    v = check_condition(params, prof, T=1.0, delta=10.0, beta_or_alpha=0.6)
    assert v.regime is Regime.CRITICAL
    assert 0.0 < v.condition_value < math.inf
    assert v.met


def test_check_condition_infinite_T_needs_supercritical():
    params = ProblemParams(N=1, m=0.5, p=1.2)
    with pytest.raises(ValueError):
        check_condition(params, constant(0.1, 1), T=math.inf, delta=1.0, beta_or_alpha=1.0)


def test_orlicz_eta_norm_weight_maximum_inside():
    # weight eta(sigma/R) increases toward R: for constant data the sup sits at sigma -> R
    params = ProblemParams(N=2, m=0.5, p=1.5)
    spec = orlicz_eta(alpha=0.6, R=1.0)
    scan = ScanGrid.build(spec, r_min=1e-3, centers=(0.0,), radii_per_decade=16)
    res = norm(constant(0.5, 2), spec, scan)
    assert res.arg_radius == pytest.approx(1.0, rel=1e-6)
    from fdxlab.special_functions import eta

    assert res.value == pytest.approx(eta(2, res.arg_radius / 1.0) * 0.5, rel=1e-9)
