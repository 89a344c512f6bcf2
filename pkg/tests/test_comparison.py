import math

import numpy as np
import pytest

from pxeig import (DomainSpec, ExponentField, FESpace, collapse_scan, generate_mesh,
                   quotient_mu, quotient_mubar)
from pxeig.comparison import homogeneous_quotient, smooth_bump, write_scan_csv
from pxeig.luxemburg import LuxemburgError

P_PARABOLA = ExponentField(lambda x: 2 + 2 * x[:, 0] ** 2, 2.0, 4.0)


@pytest.fixture(scope="module")
def unit_interval():
    return FESpace(generate_mesh(DomainSpec.interval(), 0.01, 2), quad_degree=15)


@pytest.fixture(scope="module")
def bump():
    s = FESpace(generate_mesh(DomainSpec.interval(-1, 1), 0.02, 2), quad_degree=15)
    return s.interpolate(smooth_bump(0.0, 0.9))


def test_mu_sine_constant_p(unit_interval):
    u = unit_interval.interpolate(lambda x: np.sin(np.pi * x[:, 0]))
    assert quotient_mu(u, ExponentField.constant(2)) == pytest.approx(math.pi ** 2, rel=1e-6)


@pytest.mark.parametrize("p0", [2.0, 3.0, 7.5])
def test_mu_equals_mubar_for_constant_p(bump, p0):
    p = ExponentField.constant(p0)
    assert quotient_mubar(bump, p) == pytest.approx(quotient_mu(bump, p), rel=1e-12)
    assert quotient_mu(2 * bump, p) == pytest.approx(quotient_mu(bump, p), rel=1e-12)


def test_nonhomogeneity_witness(bump):
    assert abs(quotient_mu(2 * bump, P_PARABOLA) - quotient_mu(bump, P_PARABOLA)) > 1e-6
    assert quotient_mu(bump, P_PARABOLA) > 0 and quotient_mubar(bump, P_PARABOLA) > 0
    assert quotient_mu(bump, P_PARABOLA) != quotient_mubar(bump, P_PARABOLA)


def test_homogeneous_quotient_invariant(bump):
    base = homogeneous_quotient(bump, P_PARABOLA)
    for t in (1e-6, 1e-3, 0.5, 7.0, 1e4):
        assert homogeneous_quotient(t * bump, P_PARABOLA) == pytest.approx(base, rel=1e-9)


def test_zero_field_rejected(bump):
    with pytest.raises(LuxemburgError):
        quotient_mu(bump.space.zero(), P_PARABOLA)


def test_scan_validation():
    with pytest.raises(ValueError):
        collapse_scan(P_PARABOLA, 0.0, [1.0, 1.0])
    with pytest.raises(ValueError):
        collapse_scan(P_PARABOLA, 0.0, [1.0])
    with pytest.raises(ValueError):
        collapse_scan(P_PARABOLA, 0.0, [1.0, 1e-1, 0.0])
    with pytest.raises(ValueError):
        collapse_scan(P_PARABOLA, 2.0, [1.0, 1e-1])


def test_scan_csv(tmp_path):
    scan = collapse_scan(P_PARABOLA, 0.0, [1.0, 1e-2, 1e-4], h=0.05)
    write_scan_csv(scan, tmp_path / "scan.csv")
    lines = (tmp_path / "scan.csv").read_text().splitlines()
    assert lines[0] == "t,mubar,homog"
    data = np.loadtxt(tmp_path / "scan.csv", delimiter=",", skiprows=1)
    np.testing.assert_array_equal(data[:, 1], scan.mubar)
    assert "centre=0.0" in scan.description


def test_scan_uses_custom_profile():
    hat = lambda x: np.maximum(0.0, 1 - np.abs(x[:, 0]) / 0.9)
    scan = collapse_scan(P_PARABOLA, 0.0, [1.0, 1e-3, 1e-6], h=0.01, profile=hat)
    # the hat keeps |phi'| = 1/0.9 at the peak, so mubar tends to a positive limit
    assert scan.mubar[-1] / scan.mubar[0] > 0.1
