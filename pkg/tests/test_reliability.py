import math

import numpy as np
import pytest
from scipy import integrate, stats

from tepforge.channels import MIXTURE_CHANNEL_1, Awgn, RayleighCsi, RayleighNcsi, llr, transmit
from tepforge.reliability import (
    OrderStatsProfile,
    awgn_reliability,
    expected_profile,
    expected_profile_from_signal,
    mode_ranks,
    ncsi_llr_pdf,
    order_stat_moments,
    order_stat_pdf,
    rayleigh_csi_reliability,
    rayleigh_ncsi_reliability,
    reliability_for,
    sample_sorted_reliabilities,
    signal_magnitude_dist,
)


def csi_closed_form(l, sigma):
    """Density of the CSI LLR given a transmitted zero, integrated by hand."""
    a = 1 + 1 / (2 * sigma**2)
    return sigma / (2 * math.sqrt(2) * math.sqrt(a)) * np.exp(l / 2 - np.abs(l) * math.sqrt(2 * sigma**2 + 1) / 2)


def folded_empirical_check(model, dist, rng, frames=200_000, bins=40):
    """Chi-square goodness of fit of sampled |L| against the dist's CDF."""
    y, h = transmit(model, np.ones(frames), rng)
    rel = np.abs(llr(model, y, h))
    edges = np.quantile(rel, np.linspace(0, 1, bins + 1))
    edges[0], edges[-1] = 0.0, np.inf
    observed, _ = np.histogram(rel, edges)
    cdf = np.append(dist.cdf(edges[:-1]), 1.0)
    expected = frames * np.diff(cdf)
    return stats.chisquare(observed, expected).pvalue


@pytest.mark.parametrize("factory,sigma", [
    (awgn_reliability, 0.5), (awgn_reliability, 1.2),
    (rayleigh_csi_reliability, 0.6), (rayleigh_csi_reliability, 1.0),
    (rayleigh_ncsi_reliability, 0.7), (rayleigh_ncsi_reliability, 1.0),
])
def test_pdf_normalised(factory, sigma):
    dist = factory(sigma)
    total, _ = integrate.quad(dist.pdf, 0, dist.l_max, limit=400, epsabs=1e-12)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert dist.cdf(dist.l_max) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("factory", [awgn_reliability, rayleigh_csi_reliability, rayleigh_ncsi_reliability])
def test_cdf_is_integral_of_pdf(factory):
    dist = factory(0.9)
    for x in np.linspace(0.05, 0.6 * dist.l_max, 9):
        q, _ = integrate.quad(dist.pdf, 0, x, limit=200, epsabs=1e-13)
        assert dist.cdf(x) == pytest.approx(q, abs=1e-9)
        assert dist.cdf(x) + dist.survival(x) == pytest.approx(1.0, abs=1e-12)


def test_csi_quadrature_matches_closed_form():
    sigma = 0.8
    dist = rayleigh_csi_reliability(sigma)
    l = np.linspace(0.01, 30, 50)
    assert np.allclose(dist.pdf(l), csi_closed_form(l, sigma) + csi_closed_form(-l, sigma), rtol=1e-8, atol=1e-14)


def test_ncsi_density_against_direct_convolution():
    sigma, mh = 0.9, 0.8862
    scale = 2 * mh / sigma**2

    def direct(l):
        y = l / scale
        f, _ = integrate.quad(lambda h: stats.rayleigh.pdf(h * math.sqrt(2)) * math.sqrt(2)
                              * stats.norm.pdf(y - h, scale=sigma), 0, 10)
        return f / scale

    for l in (-3.0, 0.0, 1.5, 6.0):
        assert ncsi_llr_pdf(l, sigma, mh) == pytest.approx(direct(l), rel=1e-7)


@pytest.mark.parametrize("model", [Awgn(0.8), RayleighCsi(1.0), RayleighNcsi(1.0)])
def test_distribution_matches_monte_carlo(model):
    assert folded_empirical_check(model, reliability_for(model), np.random.default_rng(7)) > 1e-4


def test_signal_path_equals_llr_path_for_awgn():
    a = expected_profile(awgn_reliability(0.8), 32, 16, "osd").expected
    b = expected_profile_from_signal(Awgn(0.8), 32, 16, "osd").expected
    assert np.allclose(a, b, rtol=1e-8)


def test_signal_magnitude_dist_normalised_for_mixture():
    dist = signal_magnitude_dist(MIXTURE_CHANNEL_1)
    total, _ = integrate.quad(dist.pdf, 0, dist.l_max, points=[1, 2, 3, 4], limit=400)
    assert total == pytest.approx(1.0, abs=1e-8)
    assert dist.cdf(2.5) + dist.survival(2.5) == pytest.approx(1.0, abs=1e-12)


def test_order_stat_pdf_for_uniform_is_beta():
    from tepforge.reliability import ReliabilityDist

    uni = ReliabilityDist(pdf=lambda x: np.ones_like(np.asarray(x, float)), cdf=lambda x: np.asarray(x, float), l_max=1.0)
    x = np.linspace(0.05, 0.95, 7)
    for i in (1, 3, 5):
        assert np.allclose(order_stat_pdf(uni, 5, i)(x), stats.beta.pdf(x, i, 6 - i))
    mean, norm = order_stat_moments(uni, 5, [1, 3, 5])
    assert np.allclose(mean, [1 / 6, 3 / 6, 5 / 6], atol=1e-10)
    assert np.allclose(norm, 1.0, atol=1e-10)


def test_order_stat_normalisation_large_n():
    _, norm = order_stat_moments(awgn_reliability(0.7), 128, np.arange(1, 129))
    assert np.max(np.abs(norm - 1)) < 1e-8


def test_mode_ranks():
    assert mode_ranks(8, 3, "grand")[0] == 8 and list(mode_ranks(8, 3, "grand")[1]) == list(range(1, 9))
    assert mode_ranks(8, 3, "posd")[0] == 3 and list(mode_ranks(8, 3, "posd")[1]) == [1, 2, 3]
    assert mode_ranks(8, 3, "osd")[0] == 8 and list(mode_ranks(8, 3, "osd")[1]) == [6, 7, 8]
    with pytest.raises(ValueError):
        mode_ranks(8, 3, "bcjr")


def test_profile_shapes_and_monotone():
    for mode, size in (("grand", 20), ("posd", 8), ("osd", 8)):
        p = expected_profile(rayleigh_ncsi_reliability(1.0), 20, 8, mode)
        assert p.positions == size
        assert np.all(np.diff(p.expected) >= 0)


def test_profile_rejects_decreasing_values():
    with pytest.raises(ValueError):
        OrderStatsProfile("grand", 2, 2, np.array([2.0, 1.0]), np.array([1, 2]))


def test_mixture_profile_tracks_simulation():
    p = expected_profile_from_signal(MIXTURE_CHANNEL_1, 32, 16, "posd").expected
    emp = sample_sorted_reliabilities(MIXTURE_CHANNEL_1, 32, 16, "posd", 20_000, np.random.default_rng(3))
    # order statistics of |y| mapped through the LLR only approximate E|L|
    assert np.all(np.diff(p) >= 0)
    assert np.corrcoef(p, emp)[0, 1] > 0.95


def test_reliability_for_rejects_mixture():
    with pytest.raises(TypeError):
        reliability_for(MIXTURE_CHANNEL_1)


def test_single_sample_order_stat_is_parent():
    dist = awgn_reliability(0.8)
    x = np.linspace(0.01, dist.l_max * 0.9, 25)
    assert np.allclose(order_stat_pdf(dist, 1, 1)(x), dist.pdf(x), rtol=1e-10)


@pytest.mark.parametrize("i", [1, 64, 128])
def test_order_stat_pdf_integrates_to_one(i):
    dist = awgn_reliability(0.7)
    total = integrate.quad(order_stat_pdf(dist, 128, i), 0, dist.l_max, limit=400)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_order_stats_average_back_to_parent():
    dist = rayleigh_ncsi_reliability(1.0)
    N = 12
    x = np.linspace(0.05, 0.9 * dist.l_max, 30)
    avg = sum(order_stat_pdf(dist, N, i)(x) for i in range(1, N + 1)) / N
    assert np.allclose(avg, dist.pdf(x), rtol=1e-8, atol=1e-12)


def test_posd_profile_is_grand_profile_on_k_samples():
    dist = awgn_reliability(0.6)
    assert np.allclose(expected_profile(dist, 100, 40, "posd").expected,
                       expected_profile(dist, 40, 20, "grand").expected)


def test_osd_profile_dominates_grand_prefix():
    dist = awgn_reliability(0.6)
    grand = expected_profile(dist, 64, 32, "grand").expected
    osd = expected_profile(dist, 64, 32, "osd").expected
    assert np.all(osd >= grand[:32])
    assert np.allclose(osd, grand[32:])


def test_channel_1_more_reliable_than_channel_2():
    from tepforge.channels import MIXTURE_CHANNEL_2

    p1 = expected_profile_from_signal(MIXTURE_CHANNEL_1, 32, 16, "grand").expected
    p2 = expected_profile_from_signal(MIXTURE_CHANNEL_2, 32, 16, "grand").expected
    # the two LLR maps coincide for the largest |y| ranks, so those entries tie
    assert np.all(p1 >= p2 - 1e-6)
    assert np.mean(p1 > p2) > 0.8
    rng = np.random.default_rng(12)
    e1 = sample_sorted_reliabilities(MIXTURE_CHANNEL_1, 32, 16, "grand", 20_000, rng)
    e2 = sample_sorted_reliabilities(MIXTURE_CHANNEL_2, 32, 16, "grand", 20_000, rng)
    assert np.all(e1[:-1] > e2[:-1])
    assert e1[-1] == pytest.approx(e2[-1], rel=0.01)


@pytest.mark.parametrize("dist", [awgn_reliability(0.7), rayleigh_csi_reliability(1.0), rayleigh_ncsi_reliability(1.0)],
                         ids=["awgn", "csi", "ncsi"])
def test_cdf_starts_at_zero(dist):
    assert abs(float(dist.cdf(0.0))) < 1e-12
