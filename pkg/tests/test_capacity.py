import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from amqd.allocation import VarianceAllocation, waterfill_exact
from amqd.capacity import (
    CapacityRegion,
    CovarianceMatrix,
    RateReport,
    awgn_capacity_complex,
    awgn_capacity_quadrature,
    capacity_region_2user,
    histogram_mutual_information,
    input_mutual_information_mc,
    mi_monte_carlo,
    mimo_mutual_information,
    partial_csi_rate,
    sum_capacity,
    symmetric_capacity,
)
from amqd.channel import ChannelBank
from amqd.gaussian_core import GaussianSource
from amqd.inputs import InputDistribution

from oracles import truncated_gaussian_mi, uniform_disc_mi


def unit_bank(noise):
    return ChannelBank.from_fourier(np.ones(len(noise)), noise)


def alloc_for_snrs(bank, snrs):
    # variance giving SNR * gain = snrs on each sub-channel
    return VarianceAllocation(np.asarray(snrs) * bank.noise_quad_variances / bank.fourier_gains,
                              "exact_waterfill")


def test_awgn_capacities():
    assert awgn_capacity_complex(1, 1) == 1
    assert awgn_capacity_complex(0, 1) == 0
    assert awgn_capacity_complex(3, 1) == 2
    assert awgn_capacity_quadrature(1, 1) == 0.5
    assert awgn_capacity_quadrature(3, 1) == 1
    with pytest.raises(ValueError):
        awgn_capacity_complex(1, 0)


@settings(max_examples=50)
@given(st.floats(0, 1e6), st.floats(1e-6, 1e6))
def test_quadrature_capacity_is_exactly_half(s, n):
    assert awgn_capacity_quadrature(s, n) == 0.5 * awgn_capacity_complex(s, n)


def test_sum_and_symmetric_capacity():
    bank = unit_bank([0.5])
    alloc = VarianceAllocation([0.5], "constant")
    assert sum_capacity(bank, alloc, [0]) == pytest.approx(1.0)
    bank2 = unit_bank([0.5, 0.5])
    alloc2 = VarianceAllocation([0.5, 0.5], "constant")
    assert sum_capacity(bank2, alloc2, [0, 1]) == 2 * sum_capacity(bank, alloc, [0])
    assert symmetric_capacity(bank2, alloc2, [0, 1], 1) == sum_capacity(bank2, alloc2, [0, 1])
    three = alloc_for_snrs(unit_bank([1.0, 1.0]), [1.0, 3.0])
    assert symmetric_capacity(unit_bank([1.0, 1.0]), three, [0, 1], 2) == pytest.approx(1.5)
    assert symmetric_capacity(bank2, alloc2, [0, 1], 4) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        symmetric_capacity(bank2, alloc2, [0, 1], 0)
    with pytest.raises(ValueError):
        sum_capacity(bank2, alloc2, [])


def test_region_membership():
    bank = unit_bank([0.2, 0.4])
    alloc = waterfill_exact(bank, 1.0)
    region = capacity_region_2user(bank, alloc, [0, 1])
    c = sum_capacity(bank, alloc, [0, 1])
    assert region.c1 == region.c2 == region.sum_bound == c
    assert region.contains(c, 0)
    assert region.contains(c / 2, c / 2)
    assert not region.contains(c, 1e-6)
    assert not region.contains(-1e-6, 0)


def test_region_boundary_has_64_points_on_the_triangle():
    region = CapacityRegion(2.0, 2.0, 2.0)
    pts = region.boundary(64)
    assert pts.shape == (64, 2)
    for r1, r2 in pts:
        assert region.contains(r1, r2, tol=1e-12)
        on_edge = min(abs(r1), abs(r2), abs(r1 + r2 - 2.0))
        assert on_edge < 1e-12


@settings(max_examples=100)
@given(st.floats(0.1, 10), st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=2, max_size=5),
       st.lists(st.floats(0.01, 1), min_size=5, max_size=5))
def test_region_is_convex(c, fractions, weights):
    region = CapacityRegion(c, c, c)
    # map unit-square points into the triangle
    members = [(c * a * (1 - b), c * a * b) for a, b in fractions]
    for m in members:
        assert region.contains(*m)
    w = np.asarray(weights[: len(members)])
    w = w / w.sum()
    combo = np.sum(w[:, None] * np.asarray(members), axis=0)
    assert region.contains(*combo, tol=1e-9)


def test_covariance_validation():
    CovarianceMatrix([[2, 1j], [-1j, 2]])
    with pytest.raises(ValueError):
        CovarianceMatrix([[1, 1], [0, 1]])
    with pytest.raises(ValueError):
        CovarianceMatrix([[1, 0], [0, -1]])
    with pytest.raises(ValueError):
        CovarianceMatrix([[1]], role="other")


def test_mimo_examples():
    assert mimo_mutual_information([1.0, 0.5], np.zeros((2, 2)), 1.0) == 0
    assert mimo_mutual_information([1.0], [[2.0]], 1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        mimo_mutual_information([1.0], [[-2.0]], 1.0)
    with pytest.raises(ValueError):
        mimo_mutual_information([1.0], [[2.0]], 0.0)


def test_mimo_diagonal_reduces_to_sum_capacity():
    rng = np.random.default_rng(2)
    coeff = rng.uniform(0.2, 1.2, 5) * np.exp(1j * rng.uniform(0, 2 * np.pi, 5))
    bank = ChannelBank.from_fourier(coeff, 0.3)
    alloc = VarianceAllocation(rng.uniform(0, 2, 5), "exact_waterfill")
    k_d = CovarianceMatrix.diagonal(2 * alloc.per_subchannel)
    # the determinant form uses 2 sigma_N^2 in the denominator with per-quadrature sigma_N^2
    val = mimo_mutual_information(coeff, k_d, 0.3)
    assert abs(val - sum_capacity(bank, alloc, range(5))) < 1e-12
    full = mimo_mutual_information(np.diag(coeff), k_d, 0.3)
    assert abs(full - val) < 1e-12


def test_rate_report_invariants():
    r = RateReport.from_rates([1.0, 0.5], [2.0, 2.0])
    assert r.sum_rate == 1.5 and r.symmetric_rate == 0.75
    assert r.to_dict()["per_user"] == [1.0, 0.5]
    assert r.csv_header()[:3] == ["rate_U1", "rate_U2", "sum_rate"]
    with pytest.raises(ValueError):
        RateReport.from_rates([3.0], [2.0])
    with pytest.raises(ValueError):
        RateReport((1.0,), 2.0, 1.0, (5.0,))


def test_partial_csi_degenerate_sampler():
    bank = unit_bank([0.2, 0.4])
    alloc = waterfill_exact(bank, 1.0)
    full = sum_capacity(bank, alloc, [0, 1])
    mean, err = partial_csi_rate(lambda rng: bank, alloc, 50, GaussianSource(1, 0))
    assert mean == pytest.approx(full, rel=1e-14) and err == 0
    mean1, err1 = partial_csi_rate(lambda rng: bank, alloc, 1, GaussianSource(1, 0))
    assert mean1 == full and err1 == 0
    with pytest.raises(ValueError):
        partial_csi_rate(lambda rng: bank, alloc, 0, GaussianSource(1, 0))


def test_partial_csi_two_point_sampler():
    a, b = unit_bank([0.2, 0.4]), unit_bank([0.6, 0.9])
    alloc = VarianceAllocation([0.8, 0.6], "exact_waterfill")
    ca, cb = sum_capacity(a, alloc, [0, 1]), sum_capacity(b, alloc, [0, 1])
    mean, err = partial_csi_rate(lambda rng: a if rng.random() < 0.5 else b, alloc, 10**4,
                                 GaussianSource(1, 12))
    assert abs(mean - (ca + cb) / 2) < 3 * err


def test_mi_monte_carlo_zero_signal():
    bank = unit_bank([0.3, 0.5])
    alloc = VarianceAllocation([0.0, 0.0], "constant")
    assert abs(mi_monte_carlo(bank, alloc, [0, 1], 10**5, GaussianSource(1, 3))) < 0.01
    with pytest.raises(ValueError):
        mi_monte_carlo(bank, alloc, [0, 1], 999, GaussianSource(1, 3))


def test_mi_monte_carlo_matches_closed_form():
    bank = ChannelBank.from_fourier([1.0, 0.8j, 0.6, 0.9 + 0.3j], [0.5, 0.3, 0.2, 0.1])
    alloc = alloc_for_snrs(bank, [0.1, 1.0, 10.0, 3.0])
    est = mi_monte_carlo(bank, alloc, range(4), 2 * 10**5, GaussianSource(1, 17))
    assert abs(est - sum_capacity(bank, alloc, range(4))) < 0.02


def test_mi_monte_carlo_error_shrinks_with_samples():
    bank = unit_bank([0.5, 0.5, 0.5, 0.5])
    alloc = alloc_for_snrs(bank, [0.1, 1.0, 10.0, 1.0])
    exact = sum_capacity(bank, alloc, range(4))
    err = {n: np.mean([abs(mi_monte_carlo(bank, alloc, range(4), n, GaussianSource(1, s)) - exact)
                       for s in range(20)]) for n in (4000, 8000)}
    assert err[8000] < err[4000]


def test_signal_and_transmittance_draws_are_independent():
    rng = np.random.default_rng(0)
    z = GaussianSource(1.0, 31).draw(10**5)
    t = rng.uniform(0, 1 / np.sqrt(2), 10**5)
    assert histogram_mutual_information(np.abs(z), t) < 0.01
    # and the estimator does see a real dependence
    assert histogram_mutual_information(np.abs(z), np.abs(z) + 0.1 * t) > 0.5


def test_gaussian_input_has_largest_mutual_information():
    snr, n = 1.0, 10**6
    gauss = input_mutual_information_mc(InputDistribution("ideal_gaussian"), snr, n, np.random.default_rng(1))
    assert abs(gauss - 1.0) < 0.01
    for dist in (InputDistribution("uniform_disc"), InputDistribution.qpsk(),
                 InputDistribution("truncated_gaussian", bound=1.0)):
        other = input_mutual_information_mc(dist, snr, n, np.random.default_rng(2))
        assert other < gauss, dist.kind


def test_input_mutual_information_matches_quadrature():
    rng = np.random.default_rng(33)
    cases = [(InputDistribution("truncated_gaussian", bound=1.0), truncated_gaussian_mi(1.0, 1.0)),
             (InputDistribution("uniform_disc"), uniform_disc_mi(1.0)),
             (InputDistribution("ideal_gaussian"), 1.0)]
    for dist, exact in cases:
        assert abs(input_mutual_information_mc(dist, 1.0, 4 * 10**5, rng) - exact) < 0.006, dist.kind
