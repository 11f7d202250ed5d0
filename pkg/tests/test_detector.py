"""Tests of the energy detector, thresholds, and Q-function machinery."""
import math

import numpy as np
import pytest

from specsense.detector import (
    EnergyStatistic,
    Verdict,
    closed_form_pd,
    closed_form_pfa,
    decide,
    dynamic_threshold,
    energy_statistic,
    q_function,
    q_inverse,
    static_threshold,
)

# Frozen from an independent statistics library (standard normal isf),
# regenerable with scipy.stats.norm.isf(p).
_QINV_TABLE = {
    0.001: 3.090232306167813,
    0.01: 2.3263478740408408,
    0.1: 1.2815515655446004,
    0.2: 0.8416212335729142,
    0.5: 0.0,
    0.9: -1.2815515655446004,
    0.999: -3.090232306167813,
}

# Frozen thresholds at sigma2=1, N=128: N + sqrt(2N) * isf(pfa).
_THRESHOLD_TABLE = {
    0.01: 165.22156598465347,
    0.1: 148.5048250487136,
    0.2: 141.46593973716662,
}


def test_q_function_known_values():
    assert abs(q_function(0.0) - 0.5) <= 1e-12
    np.testing.assert_allclose(q_function(1.2815515655446004), 0.1, atol=1e-12)
    np.testing.assert_allclose(q_function(-1.2815515655446004), 0.9, atol=1e-12)
    assert q_function(40.0) >= 0.0
    assert q_function(-40.0) <= 1.0


def test_q_function_symmetry():
    for x in (0.1, 0.7, 1.5, 3.0, 6.0):
        np.testing.assert_allclose(q_function(x) + q_function(-x), 1.0, atol=1e-14)


def test_q_inverse_matches_reference_table():
    for p, expected in _QINV_TABLE.items():
        assert abs(q_inverse(p) - expected) < 1e-9


def test_q_roundtrip():
    for p in (0.001, 0.01, 0.1, 0.2, 0.5, 0.9, 0.999):
        assert abs(q_function(q_inverse(p)) - p) <= 1e-9


def test_q_inverse_rejects_out_of_range():
    for p in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(ValueError):
            q_inverse(p)


def test_static_threshold_reference_values():
    for pfa, expected in _THRESHOLD_TABLE.items():
        got = static_threshold(1.0, pfa, 128)
        assert abs(got - expected) < 1e-9


def test_threshold_scales_linearly_with_noise_power():
    base = dynamic_threshold(1.0, 0.1, 128)
    np.testing.assert_allclose(dynamic_threshold(2.5, 0.1, 128), 2.5 * base, rtol=1e-14)


def test_static_equals_dynamic_at_same_power():
    # the two modes share one formula; only the power source differs
    assert static_threshold(1.3, 0.05, 64) == dynamic_threshold(1.3, 0.05, 64)


def test_threshold_monotonic_in_pfa():
    lams = [static_threshold(1.0, p, 128) for p in (0.01, 0.05, 0.1, 0.2, 0.4)]
    assert all(a > b for a, b in zip(lams, lams[1:]))


def test_threshold_rejects_bad_args():
    with pytest.raises(ValueError):
        static_threshold(0.0, 0.1, 128)
    with pytest.raises(ValueError):
        static_threshold(1.0, 0.0, 128)
    with pytest.raises(ValueError):
        static_threshold(1.0, 1.0, 128)
    with pytest.raises(ValueError):
        static_threshold(1.0, 0.1, 0)


def test_energy_statistic_hand_value():
    samples = np.array([1 + 1j, -2.0, 0.5j], dtype=np.complex128)
    stat = energy_statistic(samples)
    np.testing.assert_allclose(stat.value, 2.0 + 4.0 + 0.25, rtol=1e-15)
    assert stat.n == 3


def test_energy_statistic_rejects_empty():
    with pytest.raises(ValueError):
        energy_statistic(np.zeros(0, dtype=np.complex128))


def test_decide_tie_resolves_absent():
    stat = EnergyStatistic(value=10.0, n=4)
    assert decide(stat, 10.0).verdict is Verdict.ABSENT_H0
    assert decide(stat, 9.999).verdict is Verdict.PRESENT_H1
    assert decide(stat, 10.001).verdict is Verdict.ABSENT_H0


def test_decide_rejects_nonfinite_threshold():
    with pytest.raises(ValueError):
        decide(EnergyStatistic(value=1.0, n=1), math.inf)


def test_closed_form_pfa_inverts_threshold():
    # threshold built for a target must map back to that target
    for pfa in (0.01, 0.1, 0.2):
        lam = static_threshold(1.0, pfa, 128)
        np.testing.assert_allclose(closed_form_pfa(lam, 128, 1.0), pfa, atol=1e-12)


def test_closed_form_pd_reference_point():
    # z = (148.5048 - 128*1.5)/(1.5*16) => Pd = Q(z); frozen via normal sf
    lam = 148.5048250487136
    pd = closed_form_pd(lam, 128, 1.0, 0.5)
    z = (lam - 128 * 1.5) / (1.5 * math.sqrt(256.0))
    np.testing.assert_allclose(pd, q_function(z), rtol=1e-14)
    np.testing.assert_allclose(pd, 0.9650299921269051, atol=1e-12)


def test_closed_form_pd_monotone_in_snr():
    lam = static_threshold(1.0, 0.1, 128)
    pds = [closed_form_pd(lam, 128, 1.0, s) for s in (0.05, 0.1, 0.3, 1.0, 3.0)]
    assert all(a < b for a, b in zip(pds, pds[1:]))
    assert pds[-1] > 0.999


def test_closed_form_pd_at_zero_signal_equals_pfa():
    lam = static_threshold(1.0, 0.15, 128)
    np.testing.assert_allclose(
        closed_form_pd(lam, 128, 1.0, 0.0), closed_form_pfa(lam, 128, 1.0), rtol=1e-12
    )
