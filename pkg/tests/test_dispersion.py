import numpy as np
import pytest
from hypothesis import given, strategies as st

from spdcwg.dispersion import (CrystalAxis, bulk_index, bulk_index_derivative, default_model,
                               group_index, load_sellmeier)
from spdcwg.errors import DispersionDomainError

AXES = list(CrystalAxis)


def test_indices_at_1064_match_published_table():
    # commonly tabulated KTP indices at 1064 nm: n_y = 1.7454, n_z = 1.8302
    assert bulk_index("z", 1064.0) == pytest.approx(1.8302, abs=2e-3)
    assert bulk_index("y", 1064.0) == pytest.approx(1.7454, abs=2e-3)


def test_axis_ordering_and_birefringence():
    for lam in (500.0, 801.26, 1064.0):
        assert bulk_index("z", lam) > bulk_index("y", lam) > bulk_index("x", lam)


@pytest.mark.parametrize("axis", AXES)
def test_normal_dispersion(axis):
    assert bulk_index(axis, 400.0) > bulk_index(axis, 800.0)
    lam = np.arange(450.0, 1101.0, 1.0)
    assert np.all(np.diff(bulk_index(axis, lam)) < 0)


@pytest.mark.parametrize("axis", AXES)
def test_group_index_matches_finite_difference(axis):
    lam = np.arange(420.0, 1600.0, 10.0)
    h = 0.01
    fd = (bulk_index(axis, lam + h) - bulk_index(axis, lam - h)) / (2 * h)
    assert np.allclose(bulk_index_derivative(axis, lam), fd, rtol=1e-6)
    ng_fd = bulk_index(axis, lam) - lam * fd
    assert np.allclose(group_index(axis, lam), ng_fd, rtol=1e-6)
    assert np.all(group_index(axis, lam) >= bulk_index(axis, lam))


def test_group_index_z_exceeds_y_at_800():
    assert group_index("z", 800.0) - group_index("y", 800.0) > 0


@given(lam=st.floats(390.0, 3540.0), axis=st.sampled_from(AXES))
def test_index_bounds(lam, axis):
    n = bulk_index(axis, lam)
    assert 1.0 < n < 3.0


@pytest.mark.parametrize("lam", [300.0, 5000.0, float("nan")])
def test_out_of_range_names_interval(lam):
    with pytest.raises(DispersionDomainError, match="390"):
        bulk_index("y", lam)


def test_group_index_requires_interior():
    lo, hi = default_model().valid_interval_nm("y")
    bulk_index("y", lo)  # endpoints are fine for the index itself
    with pytest.raises(DispersionDomainError):
        group_index("y", lo)
    with pytest.raises(DispersionDomainError):
        group_index("y", hi)


def test_custom_data_file(tmp_path):
    text = (
        "[meta]\nsource = test\n"
        + "".join(f"[{a}]\nA = 2.0\nB = 0.0\nC = 0.0\nD = 0.0\nE = 1.0\n"
                  "lambda_min_um = 0.4\nlambda_max_um = 1.2\n" for a in "xyz")
    )
    path = tmp_path / "flat.ini"
    path.write_text(text)
    model = load_sellmeier(path)
    assert bulk_index("y", 800.0, model) == pytest.approx(np.sqrt(2.0))
    with pytest.raises(DispersionDomainError):
        bulk_index("y", 1300.0, model)
