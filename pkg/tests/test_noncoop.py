import math

import pytest
from hypothesis import given, strategies as st

from specsense.model import Snr, SystemParams
from specsense.noncoop import (false_alarm_at, node_detection_from_tail, noncoop_false_alarm,
                               noncoop_fusion, noncoop_node_detection, noncoop_threshold)


@pytest.mark.parametrize("sigma_w2, alpha, expected", [
    (1.0, 0.1, 4.605170186), (2.0, 0.1, 9.210340372), (1.0, 1 - 1e-12, 2e-12)])
def test_threshold(sigma_w2, alpha, expected):
    p = SystemParams(sigma_w2=sigma_w2, alpha=alpha)
    assert noncoop_threshold(p) == pytest.approx(expected, abs=1e-8)


@given(st.floats(0.1, 10.0), st.floats(1e-6, 0.999999))
def test_threshold_calibrates_false_alarm(sigma_w2, alpha):
    p = SystemParams(sigma_w2=sigma_w2, alpha=alpha)
    assert false_alarm_at(p, noncoop_threshold(p)) == pytest.approx(alpha, rel=1e-12)


def test_node_detection_examples():
    p = SystemParams(alpha=0.1)
    assert noncoop_node_detection(p, Snr(0.0)) == pytest.approx(0.1)
    assert noncoop_node_detection(p, Snr(1.0)) == pytest.approx(0.316228, abs=1e-6)
    assert noncoop_node_detection(p, Snr(1e12)) == pytest.approx(1.0, abs=1e-10)


@given(st.floats(-20, 30), st.floats(0.1, 5.0), st.floats(1e-4, 0.5))
def test_closed_form_matches_tail(db, sigma_w2, alpha):
    p = SystemParams(sigma_w2=sigma_w2, alpha=alpha)
    snr = Snr.from_db(db)
    assert noncoop_node_detection(p, snr) == pytest.approx(node_detection_from_tail(p, snr),
                                                          rel=1e-10)


def test_fusion_examples():
    assert noncoop_fusion(SystemParams(n_nodes=1), Snr(1.0)).p_fusion == \
        pytest.approx(math.sqrt(0.1))
    assert noncoop_fusion(SystemParams(n_nodes=5), Snr(1.0)).p_fusion == \
        pytest.approx(0.185202, abs=1e-6)
    assert noncoop_fusion(SystemParams(n_nodes=5), Snr(1e12)).p_fusion == \
        pytest.approx(1.0, abs=1e-9)


@given(st.floats(-10, 20), st.floats(0.01, 5.0), st.integers(1, 60))
def test_fusion_monotone_in_snr(db, step, n):
    p = SystemParams(n_nodes=n)
    lo = noncoop_fusion(p, Snr.from_db(db)).p_fusion
    hi = noncoop_fusion(p, Snr.from_db(db + step)).p_fusion
    assert hi >= lo - 1e-15


def test_fusion_false_alarm():
    assert noncoop_false_alarm(SystemParams(n_nodes=1, alpha=0.05)) == pytest.approx(0.05)
