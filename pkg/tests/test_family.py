import numpy as np
import pytest

from godrons import family
from godrons.errors import StepTooCoarse
from godrons.family import FamilySpec, Snapshot, _bisect, degenerate, family_scan, godron_count, snapshot


def test_values_cover_the_range():
    fs = FamilySpec("x*y", "a", (-0.3, 0.3), 0.1)
    assert np.allclose(fs.values(), np.linspace(-0.3, 0.3, 7))
    assert FamilySpec("x*y", "a", (0, 1), 0.3).values()[-1] == 1


@pytest.mark.parametrize("rng,step", [((1, 0), 0.1), ((0, 1), 0.0), ((0, 1), -1)])
def test_bad_range_rejected(rng, step):
    with pytest.raises(ValueError):
        FamilySpec("x*y", "a", rng, step)


def test_bisect():
    assert _bisect(lambda v: v < 0.3141, 0.0, 1.0, 1e-6) == pytest.approx(0.3141, abs=1e-6)
    assert _bisect(lambda v: v > -0.5, 0.0, -1.0, 1e-6) == pytest.approx(-0.5, abs=1e-6)


def test_degenerate_snapshot():
    assert degenerate(Snapshot(0.0, [{"rho": 2e-4}]))
    assert degenerate(Snapshot(0.0, [{"rho": 1.0005}]))
    assert not degenerate(Snapshot(0.0, [{"rho": 0.5}, {"rho": None}]))


def test_snapshot_of_normal_form():
    fs = FamilySpec("y^2/2 - x^2*y + l*x^4", "l", (0, 1), 0.5)
    snap = snapshot(fs, 1.0)
    (g,) = snap.godrons
    assert g["index"] == 1 and g["rho"] == pytest.approx(2, abs=1e-3)
    assert godron_count(fs, 1.0) == 1


def test_constant_family_has_no_events():
    fs = FamilySpec("y^2/2 - x^2*y + x^4 + 0*a", "a", (0, 0.2), 0.1)
    assert family_scan(fs) == []


def test_bigodron_pair():
    fs = FamilySpec("(y-x^2)^2/2 + x^3*y + e*x^3", "e", (-0.05, 0.05), 0.01)
    events = family_scan(fs)
    kinds = [e.kind for e in events]
    assert "bigodron" in kinds and "godron-death" in kinds
    (big,) = [e for e in events if e.kind == "bigodron"]
    assert abs(big.value) < 1e-3 and big.payload["indices"] == [-1, 1]


def test_flec_godron_event():
    fs = FamilySpec("y^2/2 - x^2*y + r/2*x^4 + x^5", "r", (-0.3, 0.3), 0.1)
    events = family_scan(fs)
    flec = [e for e in events if e.kind == "flec-godron"]
    assert len(flec) == 1 and abs(flec[0].value) < 1e-3
    assert any(e.kind == "biflecnode-branch-swap" for e in events)


def test_step_too_coarse(monkeypatch):
    # four godrons appearing in one step cannot be paired up
    fake = lambda fs, v, **kw: Snapshot(v, [{"x": k, "y": 0.0, "rho": 0.5, "index": -1} for k in range(4 if v > 0.5 else 0)])
    monkeypatch.setattr(family, "snapshot", fake)
    with pytest.raises(StepTooCoarse):
        family_scan(FamilySpec("x*y", "a", (0, 1), 1.0))
