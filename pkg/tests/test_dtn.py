import math

import numpy as np
import pytest
from scipy import special

from hplab.context import WaveContext
from hplab.dtn import dtn_1d, dtn_coefficient, dtn_csv, dtn_table
from hplab.errors import ValidationError

from oracles import j0_series, y0_series


def test_d0_at_kr_one_matches_series_composition():
    # d_0 = H_0'/H_0 = -H_1/H_0
    h0 = complex(j0_series(1.0), y0_series(1.0))
    h1 = special.hankel1(1, 1.0)
    d = dtn_coefficient(WaveContext(1.0), 0).value
    assert abs(d - (-h1 / h0)) < 1e-12


def test_large_argument_limit():
    d = dtn_coefficient(WaveContext(1000.0), 0).value
    assert abs(d - 1j) < 1e-2


@pytest.mark.parametrize("kR", [0.5, 1.0, 5.0, 20.0, 100.0, 200.0])
def test_sign_properties(kR):
    for c in dtn_table(WaveContext(kR), 100):
        assert c.dissipative and c.radiating


def test_imag_part_from_wronskian():
    for kR in (0.5, 3.0, 40.0):
        for c in dtn_table(WaveContext(kR), 60):
            h = abs(special.hankel1(c.mode, kR))
            if not np.isfinite(h):
                continue
            ref = math.log10(2 / (math.pi * kR)) - 2 * math.log10(h)
            assert abs(c.log10_imag() - ref) <= 1e-8 * max(1.0, abs(ref)) / math.log(10)
            if h < 1e100:
                assert math.isclose(c.value.imag, 10**ref, rel_tol=1e-8)


def test_dtn_1d():
    for k in (1.0, 3.3, 100.0):
        assert dtn_1d(WaveContext(k, d=1)) == 1j
    with pytest.raises(ValidationError):
        dtn_1d(WaveContext(1.0, d=2))


def test_dimension_three_rejected():
    with pytest.raises(ValidationError):
        WaveContext(1.0, d=3)


def test_csv_shape():
    text = dtn_csv(dtn_table(WaveContext(5.0), 20))
    lines = text.splitlines()
    assert lines[0] == "n,kR,re_d,im_d"
    assert len(lines) == 22
