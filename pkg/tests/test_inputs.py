import numpy as np
import pytest
from scipy import integrate

from amqd.inputs import InputDistribution

KINDS = [
    InputDistribution("ideal_gaussian", 0.7),
    InputDistribution("truncated_gaussian", 0.7, bound=1.0),
    InputDistribution("discrete_constellation", 0.7, points=(3, -1, 2j, -2j), probs=(0.1, 0.4, 0.25, 0.25)),
    InputDistribution("uniform_disc", 0.7),
]


@pytest.mark.parametrize("dist", KINDS, ids=lambda d: d.kind)
def test_second_moment_matches_target(dist):
    z = dist.sample(np.random.default_rng(0), 4 * 10**5)
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.4, rel=0.01)
    if dist.kind == "discrete_constellation":
        assert np.sum(dist.weights * np.abs(dist.unit_points) ** 2) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("dist", KINDS, ids=lambda d: d.kind)
def test_output_density_normalises(dist):
    lim = 8.0
    val, _ = integrate.dblquad(lambda b, a: float(dist.output_pdf(a + 1j * b, 2.0)), -lim, lim, -lim, lim,
                               epsabs=1e-8)
    assert abs(val - 1) < 1e-5


def test_truncated_output_density_matches_convolution():
    dist = InputDistribution("truncated_gaussian", bound=1.0)
    y = 0.3 - 0.8j
    snr = 1.5
    a = dist.quadrature_support()

    def quad_out(v):
        f = lambda x: dist.quadrature_pdf(x) * np.exp(-(v - np.sqrt(snr) * x) ** 2) / np.sqrt(np.pi)
        return integrate.quad(f, -a, a, epsabs=1e-14)[0]

    assert dist.output_pdf(y, snr) == pytest.approx(quad_out(y.real) * quad_out(y.imag), rel=1e-9)


def test_validation():
    with pytest.raises(ValueError):
        InputDistribution("laplace")
    with pytest.raises(ValueError):
        InputDistribution("truncated_gaussian")
    with pytest.raises(ValueError):
        InputDistribution("discrete_constellation", points=(1, -1), probs=(0.5, 0.6))
    with pytest.raises(ValueError):
        InputDistribution("discrete_constellation", points=(0, 0))
    with pytest.raises(ValueError):
        InputDistribution("ideal_gaussian", -1.0)


def test_point_masses_have_infinite_log_density():
    qpsk = InputDistribution.qpsk()
    logp = qpsk.log_pdf(qpsk.sample(np.random.default_rng(1), 10))
    assert np.all(np.isposinf(logp))


def test_dict_roundtrip():
    for dist in KINDS:
        again = InputDistribution.from_dict(dist.to_dict())
        assert again.kind == dist.kind and again.quad_variance == dist.quad_variance
    assert InputDistribution.from_dict({"kind": "discrete_constellation", "points": "qpsk"}).unit_points.size == 4
