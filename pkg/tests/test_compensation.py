import numpy as np
import pytest

import amqd.compensation as comp_mod
from amqd.channel import ChannelBank
from amqd.compensation import (
    ConvergenceError,
    compensate,
    g_delta,
    nu_sum_rate,
    xi_ideal,
    xi_inverse_ideal,
    xi_numeric,
)
from amqd.inputs import InputDistribution

from oracles import compensation_reference, truncated_gaussian_mmse

NU = [0.2, 0.35, 0.5, 0.9]
NU_EVE = 1.0
# frozen from the closed-form-posterior quadrature oracle in tests/oracles.py
TRUNCATED_1SIGMA_NU_KAPPA = 0.027264429641820166


def bank(nu=NU):
    return ChannelBank.from_fourier(np.ones(len(nu)), nu)


def check_identities(r):
    assert abs((r.sigma_omega_sq + r.sigma_kappa_sq) + r.nu_min - 1 / r.kappa) < 1e-9
    assert abs(r.nu_eve + r.sigma_kappa_sq - 1 / r.kappa) < 1e-9
    assert abs(r.nu_kappa - r.nu_min * (1 - r.g_delta)) < 1e-9


def test_xi_ideal():
    assert xi_ideal(0) == 1
    assert xi_ideal(0.5) == 0.5
    vals = [xi_ideal(q) for q in (0.1, 1, 10, 1e6)]
    assert all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] < 1e-6


def test_xi_inverse_ideal():
    assert xi_inverse_ideal(1) == 0
    assert xi_inverse_ideal(0.5) == 1
    for v in (1e-3, 0.3, 2.0, 50.0):
        assert abs(xi_inverse_ideal(xi_ideal(v)) - 2 * v) <= 1e-12 * max(1, 2 * v)
    for bad in (0, -0.1, 1.1):
        with pytest.raises(ValueError):
            xi_inverse_ideal(bad)


@pytest.mark.parametrize("q", [0.05, 0.5, 1.0, 4.0, 20.0])
def test_xi_numeric_gaussian_matches_closed_form(q):
    assert abs(xi_numeric(InputDistribution("ideal_gaussian"), q) - xi_ideal(q)) < 1e-4


def test_xi_numeric_limits():
    for dist in (InputDistribution("ideal_gaussian"), InputDistribution.qpsk(),
                 InputDistribution("truncated_gaussian", bound=1.0)):
        assert xi_numeric(dist, 0) == 1
    antipodal = InputDistribution("discrete_constellation", points=(1, -1))
    values = [xi_numeric(antipodal, q) for q in (1, 5, 25)]
    assert values[0] > values[1] > values[2] and values[2] < 1e-8
    with pytest.raises(ValueError):
        xi_numeric(InputDistribution("uniform_disc"), 1.0)


@pytest.mark.parametrize("snr", [0.5, 1.0, 4.0])
def test_xi_numeric_truncated_matches_oracle(snr):
    dist = InputDistribution("truncated_gaussian", bound=1.0)
    assert abs(xi_numeric(dist, snr / 2) - truncated_gaussian_mmse(1.0, snr)) < 1e-8


def test_gaussian_input_is_hardest_to_estimate():
    # smaller MMSE means a larger inverse term than the ideal one, hence G < 1
    for dist in (InputDistribution.qpsk(), InputDistribution("truncated_gaussian", bound=1.0)):
        for q in (0.25, 1.0, 3.0):
            xi = xi_numeric(dist, q)
            assert xi < xi_ideal(q)
            assert xi_inverse_ideal(xi) > 2 * q


def test_g_delta():
    nu_min, kappa = 0.2, 2.0
    ideal = (1 - nu_min * kappa) / (nu_min * kappa)
    assert g_delta(nu_min, kappa, ideal) == pytest.approx(1.0, abs=1e-15)
    assert g_delta(nu_min, kappa, ideal + 0.3) < 1
    for bad in (0.0, 5.0, 6.0):
        with pytest.raises(ValueError):
            g_delta(nu_min, bad, ideal)


def test_ideal_input_needs_no_compensation():
    r = compensate(bank(), NU_EVE, InputDistribution("ideal_gaussian"))
    assert abs(r.nu_kappa) < 1e-9 and abs(r.sigma_kappa_sq) < 1e-9
    assert abs(r.kappa - 1 / NU_EVE) < 1e-9
    assert abs(r.g_delta - 1) < 1e-9
    assert r.sigma_omega_sq == pytest.approx(NU_EVE - 0.2)
    np.testing.assert_allclose(r.lifted_nu, NU, atol=1e-9)
    check_identities(r)


def test_truncated_input_compensation_against_oracle():
    r = compensate(bank(), NU_EVE, InputDistribution("truncated_gaussian", bound=1.0))
    check_identities(r)
    assert r.nu_kappa > 0 and r.g_delta < 1
    assert r.nu_kappa == pytest.approx(TRUNCATED_1SIGMA_NU_KAPPA, rel=1e-6)
    ref = compensation_reference(NU, NU_EVE, truncated_gaussian_mmse(1.0, (NU_EVE - 0.2) / 0.2))
    for key in ("kappa", "g_delta", "nu_kappa", "sigma_kappa_sq", "xi_inv"):
        assert getattr(r, key) == pytest.approx(ref[key], rel=1e-7), key


def test_worse_inputs_get_larger_lift():
    dists = [InputDistribution("ideal_gaussian"), InputDistribution.qpsk(),
             InputDistribution("truncated_gaussian", bound=0.5),
             InputDistribution("truncated_gaussian", bound=1.0),
             InputDistribution("truncated_gaussian", bound=2.0)]
    results = sorted((compensate(bank(), NU_EVE, d) for d in dists), key=lambda r: r.xi_inv)
    lifts = [r.nu_kappa for r in results]
    assert all(b >= a for a, b in zip(lifts, lifts[1:]))
    for r in results:
        check_identities(r)


def test_lifted_channels_reaching_nu_eve_are_dropped():
    r = compensate(bank([0.2, 0.98, 0.5]), NU_EVE, InputDistribution("truncated_gaussian", bound=1.0))
    assert r.good == (0, 1, 2)
    assert r.active == (0, 2)
    assert all(r.lifted_nu[r.good.index(i)] < NU_EVE for i in r.active)


def test_lift_lowers_capacity():
    res = [compensate(bank(), NU_EVE, d) for d in
           (InputDistribution("ideal_gaussian"), InputDistribution("truncated_gaussian", bound=1.0))]
    for r in res:
        before = nu_sum_rate(NU, r.sigma_omega_sq)
        after = nu_sum_rate(r.lifted_nu, r.sigma_omega_sq)
        if abs(r.nu_kappa) < 1e-12:
            assert after == pytest.approx(before, rel=1e-12)
        else:
            assert after < before


def test_no_good_channel():
    with pytest.raises(ValueError):
        compensate(bank([1.5, 2.0]), NU_EVE, InputDistribution("ideal_gaussian"))


def test_unbracketed_fixed_point_reports_diagnostics(monkeypatch):
    monkeypatch.setattr(comp_mod, "xi_inverse_ideal", lambda u: -50.0)
    with pytest.raises(ConvergenceError, match="not bracketed"):
        compensate(bank(), NU_EVE, InputDistribution("truncated_gaussian", bound=1.0))
