import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from godrons.classify import THRESHOLDS, classify_godron, coefficient_values
from godrons.errors import DegenerateRho


def test_positive_godron_labels():
    lab = classify_godron(2.0)
    assert lab.six_config == "(1,inf)"
    assert (lab.swallowtail4, lab.swallowtail7, lab.s_contour6) == ("e", "e1", "trivial")
    assert lab.convexity_side == "hyperbolic-convex"


def test_intermediate_rows():
    assert classify_godron(0.75).six_config == "(2/3,1)"
    lab = classify_godron(-0.25)
    assert lab.six_config == "(-1/2,0)" and lab.swallowtail4 == "h2"
    lab = classify_godron(0.5 + 1e-3)
    assert lab.swallowtail4 == "h1" and lab.s_contour6 == "h13"
    lab = classify_godron(-1.0)
    assert lab.swallowtail4 == "h3" and lab.swallowtail7 == "h31"
    assert classify_godron(1.2).contour_config == "(1,sqrt7/2)"
    assert classify_godron(0.95).section_config == "(8/9,1)"


@pytest.mark.parametrize("rho", [0.0, 5e-5, 1.0, 1 - 5e-5])
def test_degenerate_values_rejected(rho):
    with pytest.raises(DegenerateRho):
        classify_godron(rho)


def test_non_finite_rejected():
    with pytest.raises(DegenerateRho):
        classify_godron(math.nan)


def test_near_threshold_reported():
    assert classify_godron(4 / 3 + 1e-9).near_thresholds == ("4/3",)
    assert classify_godron(0.3).near_thresholds == ()


def test_coefficient_values():
    c = coefficient_values(0.5)
    assert (c["cTminus"], c["cTplus"]) == pytest.approx((0.29289, 1.70711), abs=1e-5)
    assert (c["cCminus"], c["cCplus"]) == pytest.approx((0.41886, 3.58114), abs=1e-5)
    c = coefficient_values(0.95)
    assert c["cTminus"] < c["cP"] < c["cF"] < c["cD"] < 1 < c["cTplus"]
    c = coefficient_values(2.0)
    assert c["cTminus"] is None and c["cCminus"] is None


rhos = st.floats(-3, 3).filter(lambda r: abs(r) > 1e-3 and abs(r - 1) > 1e-3)


@given(rhos, st.floats(0.1, 5))
def test_coefficient_invariants(rho, cs):
    c = coefficient_values(rho, cs)
    if c["cTminus"] is not None:
        assert c["cTminus"] + c["cTplus"] == pytest.approx(2 * cs)
        assert c["cTminus"] * c["cTplus"] == pytest.approx(rho * cs * cs, abs=1e-9)
    if c["cCminus"] is not None:
        assert c["cCminus"] + c["cCplus"] == pytest.approx(4 * cs)
        assert c["cCminus"] * c["cCplus"] == pytest.approx(3 * rho * cs * cs, abs=1e-9)


@given(rhos)
def test_labels_consistent(rho):
    lab = classify_godron(rho)
    # swallowtail type follows the index sign, convexity follows 2/3
    assert (lab.swallowtail4 == "e") == (rho > 1)
    assert lab.swallowtail7.startswith("e") == (rho > 1)
    assert (lab.s_contour6 == "trivial") == (rho > 1)
    assert (lab.convexity_side == "hyperbolic-convex") == (rho > 2 / 3)
    # the 7-labels refine the 4-labels
    assert lab.swallowtail7[:2] == lab.swallowtail4[:2] or lab.swallowtail4 == "e"


@given(st.sampled_from(sorted(THRESHOLDS.values())), st.sampled_from([-1, 1]))
def test_labels_change_only_at_thresholds(t, side):
    # the label tuple is constant on each side just next to a threshold
    a = classify_godron(t + side * 0.004)
    b = classify_godron(t + side * 0.009)
    assert a.six_config == b.six_config and a.swallowtail7 == b.swallowtail7 and a.s_contour6 == b.s_contour6
