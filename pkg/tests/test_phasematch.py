import math
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spdcwg.errors import ModeCutoffError, UnpolableError
from spdcwg.modes import WaveguideSpec
from spdcwg.phasematch import (BandMap, ModeTriplet, band_map, calibrate_poling, delta_beta,
                               fixed_pump_line, guided_triplets, island_center, pm_amplitude,
                               pump_wavelength_of, ridge_slope)

FUND = ModeTriplet.fundamental()


def test_calibration_zeroes_mismatch(spec):
    assert abs(delta_beta(spec, FUND, 801.26, 801.26)) < 1e-9
    assert 0 < spec.poling_period_um < 100
    assert pm_amplitude(spec, FUND, 801.26, 801.26) == pytest.approx(1.0, abs=1e-9)


def test_calibration_point_matters(spec):
    assert calibrate_poling(spec, FUND, 802.0) != pytest.approx(spec.poling_period_um, rel=1e-9)


def test_removing_grating_shifts_by_its_wavevector(spec):
    flat = spec.with_poling(1e300)
    shift = delta_beta(flat, FUND, 795.0, 805.0) - delta_beta(spec, FUND, 795.0, 805.0)
    assert shift == pytest.approx(2 * math.pi / spec.poling_period_um, rel=1e-12)


def test_intermodal_dispersion_separates_triplets(spec):
    a = delta_beta(spec, FUND, 800.0, 802.0)
    b = delta_beta(spec, ModeTriplet.of(h=(0, 1)), 800.0, 802.0)
    assert abs(a - b) > 1e-4


def test_pump_wavelength_of_examples():
    assert pump_wavelength_of(801.26, 801.26) == pytest.approx(400.63, rel=1e-15)
    lv = 1.0 / (1.0 / 400.63 - 1.0 / 800.0)
    assert pump_wavelength_of(800.0, lv) == pytest.approx(400.63, rel=1e-13)


@given(a=st.floats(500.0, 2000.0), b=st.floats(500.0, 2000.0))
def test_pump_wavelength_symmetry(a, b):
    assert pump_wavelength_of(a, b) == pump_wavelength_of(b, a)


def test_sinc_zero_and_length_scaling(spec):
    # |Phi| vanishes where delta_beta L / 2 = pi
    lv = 801.26
    lh = np.linspace(795.0, 808.0, 20001)
    db = delta_beta(spec, FUND, lh, lv)
    k = np.argmin(np.abs(np.abs(db) * spec.length_um / 2 - math.pi))
    assert abs(pm_amplitude(spec, FUND, lh[k], lv)) < 2e-3
    width_1 = _core_width(spec, lh, lv)
    width_2 = _core_width(replace(spec, length_mm=2 * spec.length_mm), lh, lv)
    assert width_1 / width_2 == pytest.approx(2.0, rel=0.05)


def _core_width(spec, lh, lv):
    inten = np.abs(pm_amplitude(spec, FUND, lh, lv)) ** 2
    above = lh[inten >= 0.5]
    return above.max() - above.min()


def test_amplitude_modulus_bounded(spec):
    lh = np.linspace(780.0, 820.0, 401)
    amp = pm_amplitude(spec, FUND, lh, 801.26)
    assert np.all(np.abs(amp) <= 1.0 + 1e-15)
    assert np.allclose(np.abs(pm_amplitude(spec, FUND, lh, 801.26, keep_phase=False)), np.abs(amp))


def test_unpolable_configuration():
    spec = WaveguideSpec(axis_map={"H": "z", "V": "z", "P": "x"})
    with pytest.raises(UnpolableError, match="unpolable|<= 0"):
        calibrate_poling(spec)


def test_fixed_pump_line():
    line = fixed_pump_line(400.63, [801.26])
    assert line[0, 1] == pytest.approx(801.26, rel=1e-13)
    lh = np.array([789.99, 790.0, 790.01])
    pts = fixed_pump_line(400.63, lh)
    slope = (pts[2, 1] - pts[0, 1]) / (pts[2, 0] - pts[0, 0])
    assert slope == pytest.approx(-(pts[1, 1] / 790.0) ** 2, rel=1e-6)
    assert abs(slope + 1) < 0.06
    deg = fixed_pump_line(400.63, [801.25, 801.26, 801.27])
    assert (deg[2, 1] - deg[0, 1]) / 0.02 == pytest.approx(-1.0, abs=1e-4)
    with pytest.raises(ValueError):
        fixed_pump_line(400.63, [400.0, 800.0])


@given(lp=st.floats(395.0, 410.0), lh=st.floats(700.0, 950.0))
def test_energy_conservation(lp, lh):
    (h, v), = fixed_pump_line(lp, [lh])
    assert 1 / h + 1 / v == pytest.approx(1 / lp, rel=1e-12)


def test_band_map_structure(spec):
    trips = guided_triplets(spec)
    assert trips[0] == FUND and len(trips) == 25
    bm = band_map(spec, trips[:3], (800.0, 802.52), (800.0, 802.52), 64)
    assert bm.intensity.shape == (3, 64, 64)
    assert np.all((bm.intensity >= 0) & (bm.intensity <= 1))
    # node nearest the calibration point sits on the fundamental ridge
    ih = np.argmin(np.abs(bm.lambda_h_grid - 801.26))
    iv = np.argmin(np.abs(bm.lambda_v_grid - 801.26))
    assert bm.intensity[0, iv, ih] > 0.99
    with pytest.raises(ValueError):
        band_map(spec, trips[:1], (800, 802), (800, 802), 1)


def test_band_map_flags_cutoff(spec):
    high = ModeTriplet.of(h=(4, 0))
    bm = band_map(spec, [high], (790.0, 810.0), (790.0, 810.0), 5)
    assert bm.cutoff.all() and not bm.intensity.any()
    with pytest.raises(ModeCutoffError):
        delta_beta(spec, high, 801.0, 801.0)


def test_bands_separate_along_constant_lambda_h(spec):
    trips = guided_triplets(spec)
    bm = band_map(spec, trips, (781.0, 861.0), (781.0, 861.0), 281)
    # ridge positions in lambda_V along each lambda_H column
    fund = bm.intensity[0]
    fwhm_v = 3.0  # generous upper bound on the band FWHM in lambda_V
    separated = False
    for k in range(1, len(trips)):
        other = bm.intensity[k]
        for ih in range(0, 281, 10):
            if fund[:, ih].max() > 0.9 and other[:, ih].max() > 0.9:
                dv = abs(bm.lambda_v_grid[fund[:, ih].argmax()] - bm.lambda_v_grid[other[:, ih].argmax()])
                separated |= dv > fwhm_v
    assert separated


def test_ridge_slope_differs_from_energy_line(spec):
    slope = ridge_slope(spec, FUND, 801.26, 801.26)
    assert abs(slope + 1) > 0.05
    assert slope < 0


def test_island_centers(spec):
    c = island_center(spec, FUND, 400.63, (700.0, 900.0))
    assert c == pytest.approx((801.26, 801.26), abs=1e-6)
    assert island_center(spec, FUND, 400.63, (810.0, 900.0)) is None


def test_band_map_exports(spec, tmp_path):
    bm = band_map(spec, [FUND], (800.0, 802.0), (800.0, 802.0), 4)
    bm.write_csv(tmp_path / "b.csv", ["hello"])
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "# hello"
    assert lines[1] == "lambda_h_nm,lambda_v_nm,triplet_id,intensity,cutoff_flag"
    assert len(lines) == 2 + 16
    bm.write_matrix(tmp_path / "m.dat", 0)
    block = np.loadtxt(tmp_path / "m.dat")
    assert block.shape == (5, 5) and block[0, 0] == 4
    assert np.allclose(block[1:, 1:], bm.intensity[0], rtol=1e-8)
    with pytest.raises(ValueError):
        BandMap(np.array([2.0, 1.0]), np.array([1.0, 2.0]), [FUND], np.zeros((1, 2, 2)),
                np.zeros((1, 2, 2), bool))


def test_band_map_timing(spec):
    t0 = time.perf_counter()
    band_map(spec, guided_triplets(spec), (780.0, 820.0), (780.0, 820.0), 500)
    assert time.perf_counter() - t0 < 10.0


def test_triplet_validation():
    from spdcwg.modes import ModeLabel
    with pytest.raises(ValueError):
        ModeTriplet(ModeLabel(0, 0, "H"), ModeLabel(0, 0, "H"), ModeLabel(0, 0, "V"))
    assert ModeTriplet.of(h=(1, 0), v=(0, 2)).id == "P00-H10-V02"
