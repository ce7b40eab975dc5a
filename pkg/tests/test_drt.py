import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import cyclic_af_direct

from fr3lab.drt import (
    ConstellationSpec,
    FrameLayout,
    af_sidelobe_stats,
    ambiguity_function,
    constellation_kurtosis,
    generate_ofdm_frame,
    pilot_sequence,
    psk,
    qam,
    rank_agreement,
    reference_constellation,
    resource_split,
    variance_is_lower,
    variance_ordering_z,
)

SMALL = FrameLayout.comb(16, 4, 4)


# square M-QAM: (7M - 13) / (5(M - 1))
@pytest.mark.parametrize("name,k", [("qpsk", 1.0), ("8psk", 1.0), ("16qam", 99 / 75), ("64qam", 435 / 315), ("gaussian", 2.0)])
def test_kurtosis_values(name, k):
    assert constellation_kurtosis(reference_constellation(name)) == pytest.approx(k, abs=1e-12)


def test_kurtosis_16qam_is_exactly_33_over_25():
    assert constellation_kurtosis(qam(16)) == 1.32


def test_alphabets_have_unit_power():
    for spec in (psk(4), psk(8), qam(16), qam(64)):
        assert spec.power() == pytest.approx(1.0)


def test_custom_alphabet_is_normalised():
    spec = ConstellationSpec.from_points("ook", [0, 3], [0.5, 0.5])
    assert spec.power() == pytest.approx(1.0)
    assert constellation_kurtosis(spec) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        ConstellationSpec.from_points("bad", [1, -1], [0.7, 0.7])


def test_unknown_constellation():
    with pytest.raises(ValueError):
        reference_constellation("ternary")


def test_gaussian_samples_unit_power():
    x = reference_constellation("gaussian").sample(np.random.default_rng(0), 200_000)
    assert np.mean(np.abs(x) ** 2) == pytest.approx(1.0, rel=0.01)


def test_resource_split():
    assert resource_split(FrameLayout.comb(64, 14, 8)) == (0.125, 0.875)
    assert resource_split(FrameLayout.filled(8, 2, pilots=False)) == (0.0, 1.0)


def test_frame_pilots_fixed_and_payload_random():
    a = generate_ofdm_frame(psk(4), SMALL, 1)
    b = generate_ofdm_frame(psk(4), SMALL, 2)
    mask = SMALL.pilot_mask
    np.testing.assert_array_equal(a.grid[mask], pilot_sequence(4, 16)[mask])
    np.testing.assert_array_equal(a.grid[mask], b.grid[mask])
    assert not np.allclose(a.grid[~mask], b.grid[~mask])
    np.testing.assert_array_equal(a.signal, generate_ofdm_frame(psk(4), SMALL, 1).signal)


def test_frame_has_cyclic_prefix_and_unitary_idft():
    f = generate_ofdm_frame(qam(16), SMALL, 3, cp_len=4)
    assert f.signal.size == 4 * (16 + 4)
    sym0 = f.signal[:20]
    np.testing.assert_allclose(sym0[:4], sym0[-4:])
    np.testing.assert_allclose(np.sum(np.abs(f.symbols_time) ** 2), np.sum(np.abs(f.grid) ** 2))
    with pytest.raises(ValueError):
        generate_ofdm_frame(qam(16), SMALL, 3, cp_len=17)


def test_pulse_filter_hook():
    f = generate_ofdm_frame(psk(4), SMALL, 0, pulse_filter=lambda s: 2 * s)
    g = generate_ofdm_frame(psk(4), SMALL, 0)
    np.testing.assert_allclose(f.signal, 2 * g.signal)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1000), tau=st.integers(-5, 5), nu=st.integers(-4, 4))
def test_af_matches_shift_and_sum(seed, tau, nu):
    s = np.random.default_rng(seed).standard_normal(48) + 1j * np.random.default_rng(seed + 1).standard_normal(48)
    surf = ambiguity_function(s, 5, 4)
    assert surf.at(tau, nu) == pytest.approx(cyclic_af_direct(s, tau, nu), abs=1e-12)


def test_af_peak_at_origin():
    surf = ambiguity_function(generate_ofdm_frame(qam(16), SMALL, 4), 6, 3)
    mag = np.abs(surf.values)
    assert surf.at(0, 0) == pytest.approx(1.0)
    assert mag.max() == pytest.approx(1.0)


def test_af_bin_limits():
    with pytest.raises(ValueError):
        ambiguity_function(np.ones(8), 8, 0)
    with pytest.raises(ValueError):
        ambiguity_function(np.zeros(8), 2, 2)


def test_deterministic_frame_has_zero_sidelobe_variance():
    pilots_only = FrameLayout.filled(16, 4, pilots=True)
    st_ = af_sidelobe_stats(psk(4), pilots_only, 10, 0, max_delay_bins=6, max_doppler_bins=3, cp_len=4)
    assert st_.sidelobe_variance == 0.0
    assert st_.variance_stderr == 0.0


def test_stats_independent_of_workers():
    a = af_sidelobe_stats(qam(16), SMALL, 40, 7, max_delay_bins=6, max_doppler_bins=3, cp_len=4)
    b = af_sidelobe_stats(qam(16), SMALL, 40, 7, max_delay_bins=6, max_doppler_bins=3, cp_len=4, workers=4)
    assert a.to_dict() == b.to_dict()
    assert np.mean(a.trial_contributions) == pytest.approx(a.sidelobe_variance)


def test_stats_match_plain_numpy_variance():
    kw = dict(max_delay_bins=6, max_doppler_bins=3, cp_len=4)
    st_ = af_sidelobe_stats(qam(16), SMALL, 30, 5, **kw)
    children = np.random.SeedSequence(5).spawn(30)
    powers = []
    for c in children:
        surf = ambiguity_function(generate_ofdm_frame(qam(16), SMALL, c, 4), 6, 3)
        keep = ~((np.abs(surf.delays)[:, None] <= 1) & (np.abs(surf.dopplers)[None, :] <= 1))
        powers.append(np.abs(surf.values[keep]) ** 2)
    powers = np.array(powers)
    assert st_.sidelobe_variance == pytest.approx(np.var(powers, axis=0, ddof=1).mean(), rel=1e-10)
    assert st_.sidelobe_mean == pytest.approx(powers.mean(), rel=1e-12)


def test_exclusion_zone_covering_everything_is_rejected():
    with pytest.raises(ValueError):
        af_sidelobe_stats(psk(4), SMALL, 4, 0, exclusion_zone=(6, 3), max_delay_bins=6, max_doppler_bins=3, cp_len=4)


def test_ordering_helpers():
    kw = dict(max_delay_bins=8, max_doppler_bins=4, cp_len=4)
    layout = FrameLayout.comb(32, 6, 8)
    stats = [af_sidelobe_stats(reference_constellation(n), layout, 200, 1, **kw) for n in ("gaussian", "qpsk", "16qam")]
    g, q, m = stats
    assert variance_ordering_z(q, m) > 0
    assert variance_is_lower(q, g)
    assert rank_agreement(stats)
