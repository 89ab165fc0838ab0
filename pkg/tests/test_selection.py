import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtcpd.channel import PropagationPath, steering_vector, synthesize_channel
from mtcpd.decomposition import (
    Rank1Component,
    extract_components,
    make_binary_plan,
    make_trivial_plan,
)
from mtcpd.selection import (
    SliceErrorTable,
    component_coherence,
    phase_coherence,
    phase_ratios,
    reconstruction_error,
    select_by_pcm,
    select_rank_avg,
)
from mtcpd.tensor import reshape_ura


def comp(*factors, sigma=None):
    return Rank1Component(virtual_factors=list(factors), scale=1.0,
                          physical_factors=tuple(np.asarray(f, complex) for f in factors),
                          coherence=sigma)


class TestReconstructionError:
    def test_identical(self):
        t = np.arange(8.0).reshape(2, 2, 2)
        assert reconstruction_error(t, t) == 0

    def test_zero_estimate(self):
        t = np.ones((2, 2, 2))
        assert reconstruction_error(t, np.zeros_like(t)) == pytest.approx(np.sqrt(8))

    def test_negated(self):
        t = np.ones((2, 2, 2)) / np.sqrt(8)
        assert reconstruction_error(t, -t) == pytest.approx(2.0)

    def test_mismatch(self):
        with pytest.raises(ValueError):
            reconstruction_error(np.ones(3), np.ones(4))


class TestRankAvg:
    def test_single(self):
        assert select_rank_avg(SliceErrorTable([[0.9, 0.5, 0.6]])) == 2

    def test_two_realizations(self):
        table = SliceErrorTable([[0.9, 0.5, 0.6], [0.8, 0.7, 0.2]])
        np.testing.assert_allclose(table.mean_curve(), [0.85, 0.6, 0.4])
        assert select_rank_avg(table) == 3

    def test_increasing(self):
        assert select_rank_avg([[0.1, 0.2, 0.3]]) == 1

    def test_ties_smallest(self):
        assert select_rank_avg([[0.5, 0.2, 0.2]]) == 2

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.lists(st.floats(0, 10), min_size=4, max_size=4), min_size=1, max_size=6))
    def test_range(self, rows):
        r = select_rank_avg(rows)
        assert 1 <= r <= 4

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            SliceErrorTable([[0.1, -0.1]])


class TestPhaseRatios:
    def test_steering(self):
        np.testing.assert_allclose(phase_ratios(steering_vector(4, 0.25)), [1j, 1j, 1j], atol=1e-15)

    def test_simple(self):
        np.testing.assert_allclose(phase_ratios([1, 1, -1]), [1, -1])

    def test_unit_modulus(self):
        rng = np.random.default_rng(0)
        u = np.exp(2j * np.pi * rng.uniform(size=50))
        assert np.max(np.abs(np.abs(phase_ratios(u)) - 1)) <= 1e-14

    def test_zero_entries_skipped(self):
        assert phase_ratios([1, 0, 1j, -1]).tolist() == pytest.approx([1j])

    def test_too_short(self):
        with pytest.raises(ValueError):
            phase_ratios([1])


class TestPhaseCoherence:
    def test_steering_zero(self):
        for n in (2, 3, 8, 64):
            for a in np.linspace(-0.5, 0.5, 16, endpoint=False):
                assert phase_coherence(steering_vector(n, a)) <= 1e-12

    def test_alternating(self):
        assert phase_coherence([1, 1, -1]) == pytest.approx(1.0)

    def test_rotation(self):
        assert phase_coherence([1, 1j, -1, -1j]) <= 1e-15

    def test_all_zero(self):
        assert phase_coherence(np.zeros(5)) == 1.0

    @settings(max_examples=60, deadline=None)
    @given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(2, 40),
           mag=st.floats(1e-3, 1e3), ph=st.floats(0, 2 * np.pi))
    def test_scale_invariance_and_range(self, seed, n, mag, ph):
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        s = phase_coherence(u)
        assert 0 <= s <= 1
        assert phase_coherence(mag * np.exp(1j * ph) * u) == pytest.approx(s, abs=1e-12)


class TestComponentCoherence:
    def test_ideal(self):
        c = comp(steering_vector(4, 0.1), steering_vector(8, -0.3), steering_vector(16, 0.2))
        assert component_coherence(c) <= 1e-12
        assert c.coherence == component_coherence(c)

    def test_mean(self):
        c = comp([1, 1, -1], steering_vector(4, 0.1), steering_vector(5, 0.2))
        assert component_coherence(c) == pytest.approx(1 / 3)

    def test_length_one_mode_excluded(self):
        c = comp([1.0], [1, 1, -1], steering_vector(5, 0.2))
        assert component_coherence(c) == pytest.approx(0.5)

    def test_noise_components_exceed_threshold(self):
        # Monte-Carlo characterization of the 0.5 threshold on length-8 Gaussian factors
        rng = np.random.default_rng(1)
        sig = [component_coherence(comp(*(rng.standard_normal(8) + 1j * rng.standard_normal(8)
                                          for _ in range(3)))) for _ in range(1000)]
        assert np.mean(np.array(sig) > 0.5) >= 0.95


class TestSelectByPcm:
    def test_filter(self):
        cs = [comp([1, 1], sigma=s) for s in (0.1, 0.7, 0.3)]
        assert select_by_pcm(cs, 0.5) == [cs[0], cs[2]]

    def test_floor(self):
        cs = [comp([1, 1], sigma=s) for s in (0.9, 0.8, 0.95)]
        assert select_by_pcm(cs, 0.5) == [cs[1]]

    def test_threshold_one(self):
        cs = [comp([1, 1], sigma=s) for s in (0.1, 0.7, 0.3)]
        assert select_by_pcm(cs, 1.0) == cs

    def test_needs_coherence(self):
        with pytest.raises(ValueError):
            select_by_pcm([comp([1, 1])])


def test_noise_components_separate_from_paths():
    rng = np.random.default_rng(2)
    noise_sig, path_sig = [], []
    for _ in range(20):
        z = rng.standard_normal((4, 4, 16)) + 1j * rng.standard_normal((4, 4, 16))
        for c in extract_components(z, make_binary_plan(4, 4, 16), 4):
            noise_sig.append(component_coherence(c))
        a, b, g = rng.uniform(-0.5, 0.5, 3)
        h = synthesize_channel([PropagationPath(1.0, a, b, 0.0, g)], (4, 4, 1, 16))
        for plan in (make_trivial_plan(4, 4, 16), make_binary_plan(4, 4, 16)):
            for c in extract_components(reshape_ura(h[:, 0, :], 4, 4), plan, 1):
                path_sig.append(component_coherence(c))
    assert np.mean(noise_sig) - np.mean(path_sig) >= 0.4
