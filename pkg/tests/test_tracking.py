import math

import numpy as np
import pytest
from oracles import link_snr_by_hand

from fr3lab.array import FieldPoint, build_ula
from fr3lab.estimation import SnrSpec, crb, fisher_matrix
from fr3lab.tracking import (
    AlwaysMeetsTarget,
    Blockage,
    LinkBudget,
    NeverMeetsTarget,
    RegimeConfig,
    coverage_radius,
    hybrid_policy,
    load_paper_calibration,
    localization_rmse,
    regime_squint_loss,
    rmse_curve,
    snr_at,
)

LINK = LinkBudget(70.0, blockage=Blockage((20.0, 25.0), 20.0))
R6 = RegimeConfig("6ghz", 6e9, 32)
R24 = RegimeConfig("24ghz", 24e9, 128)
R24U = RegimeConfig("24ghz_unc", 24e9, 128, "intra-uncompensated", squint_angle=60.0)


@pytest.mark.parametrize("d", [1.0, 3.7, 18.0, 22.0, 40.0])
@pytest.mark.parametrize("regime", [R6, R24])
def test_snr_matches_hand_budget(d, regime):
    extra = 20.0 if (20 <= d <= 25 and regime.carrier > 10e9) else 0.0
    want = link_snr_by_hand(70.0, d, 1.0, regime.carrier, 6e9, regime.n_elements, 32, 2.0, extra)
    assert snr_at(LINK, regime, d) == pytest.approx(want, abs=1e-9)


def test_blockage_spares_the_lower_carrier():
    assert snr_at(LINK, R6, 22.0) - snr_at(LINK.without_blockage(), R6, 22.0) == 0.0
    assert snr_at(LINK.without_blockage(), R24, 22.0) - snr_at(LINK, R24, 22.0) == pytest.approx(20.0)


def test_squint_loss_only_for_uncompensated_regime():
    assert regime_squint_loss(R24) == 0.0
    assert regime_squint_loss(RegimeConfig("c", 24e9, 128, "compensated")) == 0.0
    assert regime_squint_loss(R24U) > 0.5


def test_rmse_is_range_plus_cross_range():
    d = 12.0
    geom = build_ula(R24.n_elements, R24.carrier)
    bound = crb(fisher_matrix(geom, FieldPoint.near(d, 0.0), 24e9, SnrSpec(snr_at(LINK, R24, d), 128)))
    assert localization_rmse(LINK, R24, d) == pytest.approx(math.sqrt(bound.range_crb + d**2 * bound.angle_crb))


def test_rmse_from_independent_fisher_oracle():
    from oracles import fd_fisher

    d = 8.0
    geom = build_ula(32, 6e9)
    snr = SnrSpec(snr_at(LINK, R6, d), 32).per_element_snr_linear
    inv = np.linalg.inv(fd_fisher(geom.element_positions, d, 0.0, 6e9, snr))
    assert localization_rmse(LINK, R6, d) == pytest.approx(math.sqrt(inv[0, 0] + d**2 * inv[1, 1]), rel=1e-6)


def test_rmse_monotone_without_blockage():
    clear = LINK.without_blockage()
    vals = [localization_rmse(clear, R24, d) for d in np.linspace(2, 40, 20)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_coverage_radius_brackets_target():
    r = coverage_radius(LINK, R24, 0.1)
    clear = LINK.without_blockage()
    assert localization_rmse(clear, R24, r) <= 0.1 < localization_rmse(clear, R24, r + 0.02)


def test_coverage_errors():
    with pytest.raises(NeverMeetsTarget):
        coverage_radius(LinkBudget(-50.0), R6, 0.1)
    with pytest.raises(AlwaysMeetsTarget):
        coverage_radius(LinkBudget(200.0), R6, 0.1, bracket=(1.0, 5.0))
    with pytest.raises(ValueError):
        coverage_radius(LINK, R6, 0.0)


def test_hybrid_picks_lowest_and_breaks_ties_low():
    chosen, rmse = hybrid_policy(LINK, [R24, R6], 22.0)
    assert chosen is R6 and rmse == localization_rmse(LINK, R6, 22.0)
    twin = RegimeConfig("6ghz_b", 6e9, 32)
    chosen, _ = hybrid_policy(LINK, [twin, RegimeConfig("6ghz_a", 6e9, 32)], 5.0)
    assert chosen is twin  # same carrier: first listed
    with pytest.raises(ValueError):
        hybrid_policy(LINK, [R6], 5.0)


def test_rmse_curve_hybrid_is_pointwise_minimum():
    curve = rmse_curve(LINK, [R6, R24], np.arange(2.0, 30.0, 1.0))
    stacked = np.vstack([curve.rmse["6ghz"], curve.rmse["24ghz"]])
    np.testing.assert_array_equal(curve.hybrid_rmse, stacked.min(axis=0))
    assert set(curve.chosen_regime) == {"6ghz", "24ghz"}


def test_regime_and_link_validation():
    with pytest.raises(ValueError):
        RegimeConfig("x", 0.0, 32)
    with pytest.raises(ValueError):
        RegimeConfig("x", 6e9, 32, "partial")
    with pytest.raises(ValueError):
        Blockage((25.0, 20.0))
    with pytest.raises(ValueError):
        LinkBudget(70.0, path_loss_exponent=0.0)
    with pytest.raises(ValueError):
        snr_at(LINK, R6, 0.0)


def test_shipped_calibration_loads():
    link, regimes = load_paper_calibration()
    assert [r.name for r in regimes] == ["6ghz", "24ghz_unc", "24ghz_comp"]
    assert link.blockage is not None and link.blockage.zone == (20.0, 25.0)
