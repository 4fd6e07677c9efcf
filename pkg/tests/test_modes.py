import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spdcwg.dispersion import bulk_index
from spdcwg.errors import ModeCutoffError
from spdcwg.modes import (ModeLabel, WaveguideSpec, calibrate_index_step, effective_index,
                          list_guided_modes, mode_group_index, propagation_constant, slab_modes)


def test_symmetric_slab_below_first_cutoff_has_one_mode():
    # V = k t NA / 2 well below pi / 2
    assert len(slab_modes(1.5, 1.49, 1.49, 0.5, 800.0)) == 1
    assert len(slab_modes(1.5, 1.49, 1.49, 0.5, 800.0, "TM")) == 1


@given(n_sub=st.floats(1.4, 2.0), dn=st.floats(0.005, 0.2), t=st.floats(0.5, 12.0),
       lam=st.floats(400.0, 1600.0), pol=st.sampled_from(["TE", "TM"]))
def test_symmetric_slab_mode_count(n_sub, dn, t, lam, pol):
    n_core = n_sub + dn
    x = 2.0 * t * math.sqrt(n_core ** 2 - n_sub ** 2) / (lam * 1e-3)
    if abs(x - round(x)) < 1e-6:  # exactly at a cutoff the count is ambiguous
        return
    modes = slab_modes(n_core, n_sub, n_sub, t, lam, pol)
    assert len(modes) == math.floor(x) + 1
    assert all(a > b for a, b in zip(modes, modes[1:]))
    assert all(n_sub < n < n_core for n in modes)


def test_symmetric_te_slab_satisfies_textbook_relation():
    nf, ns, t, lam = 1.6, 1.5, 3.0, 0.8
    k0 = 2 * math.pi / lam
    for order, neff in enumerate(slab_modes(nf, ns, ns, t, lam * 1e3)):
        kx = k0 * math.sqrt(nf ** 2 - neff ** 2)
        gamma = k0 * math.sqrt(neff ** 2 - ns ** 2)
        phase = kx * t / 2
        lhs = kx * math.tan(phase) if order % 2 == 0 else -kx / math.tan(phase)
        assert lhs == pytest.approx(gamma, rel=1e-6)


def test_asymmetric_slab_can_guide_nothing():
    assert slab_modes(1.51, 1.5, 1.0, 0.2, 800.0) == []


def test_slab_rejects_bad_core():
    with pytest.raises(ValueError):
        slab_modes(1.4, 1.5, 1.0, 2.0, 800.0)


@pytest.mark.parametrize("pol", ["H", "V"])
def test_default_mode_count_and_order(pol):
    spec = WaveguideSpec()
    modes = list_guided_modes(spec, 801.0, pol)
    assert len(modes) >= 4
    assert modes[0] == ModeLabel(0, 0, pol)
    neffs = [effective_index(spec, m, 801.0) for m in modes]
    assert all(a >= b for a, b in zip(neffs, neffs[1:]))
    nb = bulk_index(spec.axis(pol), 801.0)
    assert all(nb < n < nb + spec.index_step for n in neffs)


def test_pump_guides_more_modes():
    spec = WaveguideSpec()
    assert len(list_guided_modes(spec, 400.6, "P")) > len(list_guided_modes(spec, 801.0, "V"))


def test_propagation_constants():
    spec = WaveguideSpec()
    b00 = propagation_constant(spec, ModeLabel(0, 0, "H"), 801.0)
    assert b00 > propagation_constant(spec, ModeLabel(1, 0, "H"), 801.0)
    assert b00 == pytest.approx(2 * math.pi * effective_index(spec, ModeLabel(0, 0, "H"), 801.0) / 0.801)
    assert (propagation_constant(spec, ModeLabel(0, 0, "H"), 801.26)
            != propagation_constant(spec, ModeLabel(0, 0, "V"), 801.26))


def test_cutoff_error_names_mode():
    with pytest.raises(ModeCutoffError, match="90_H"):
        effective_index(WaveguideSpec(), ModeLabel(9, 0, "H"), 801.0)
    arr = effective_index(WaveguideSpec(), ModeLabel(9, 0, "H"), np.array([801.0]), strict=False)
    assert np.isnan(arr).all()


def test_array_and_scalar_agree():
    spec = WaveguideSpec()
    lam = np.linspace(790.0, 810.0, 5)
    arr = effective_index(spec, ModeLabel(0, 1, "V"), lam)
    assert np.allclose(arr, [effective_index(spec, ModeLabel(0, 1, "V"), x) for x in lam], atol=1e-12)


@given(lam=st.floats(700.0, 900.0))
def test_effective_index_continuity(lam):
    spec = WaveguideSpec()
    mode = ModeLabel(0, 0, "H")
    assert abs(effective_index(spec, mode, lam + 0.1) - effective_index(spec, mode, lam)) < 1e-3


def test_group_index_exceeds_phase_index():
    spec = WaveguideSpec()
    for pol in "HV":
        mode = ModeLabel(0, 0, pol)
        assert mode_group_index(spec, mode, 801.26) > effective_index(spec, mode, 801.26)


def test_index_step_calibration():
    spec = WaveguideSpec()
    step = calibrate_index_step(spec)
    assert 0 < step <= spec.index_step
    trial = replace(spec, index_step=step)
    assert all(len(list_guided_modes(trial, 801.0, p)) >= 4 for p in "HV")
    smaller = replace(spec, index_step=step - 0.001)
    assert any(len(list_guided_modes(smaller, 801.0, p)) < 4 for p in "HV")


@pytest.mark.parametrize("kwargs", [dict(width_um=0), dict(index_step=0.25), dict(index_step=0),
                                    dict(axis_map={"H": "z", "V": "q", "P": "y"}),
                                    dict(poling_period_um=-1.0)])
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        WaveguideSpec(**kwargs)


def test_mode_label():
    assert str(ModeLabel(1, 2, "V")) == "12_V"
    assert ModeLabel().is_fundamental
    with pytest.raises(ValueError):
        ModeLabel(-1, 0, "H")
