import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ldpcglass import kernels
from ldpcglass.bp import MSG_CLIP, PRODUCT_CLAMP, check_update

needs_cython = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")

finite = st.floats(-40, 40, allow_nan=False)


@st.composite
def segmented(draw, min_deg=0):
    degs = draw(st.lists(st.integers(min_deg, 7), min_size=1, max_size=12))
    ptr = np.concatenate([[0], np.cumsum(degs)]).astype(np.int64)
    vals = draw(arrays(np.float64, int(ptr[-1]), elements=finite))
    return vals, ptr


def reference_extrinsic(msgs, ptr):
    out = np.empty_like(msgs)
    for a in range(len(ptr) - 1):
        seg = list(range(ptr[a], ptr[a + 1]))
        for e in seg:
            out[e] = check_update([msgs[j] for j in seg if j != e])
    return out


@given(segmented())
@settings(max_examples=200, deadline=None)
def test_python_check_extrinsic_matches_scalar_rule(data):
    msgs, ptr = data
    got = kernels.check_extrinsic(msgs, ptr, PRODUCT_CLAMP, backend="python")
    assert np.allclose(got, reference_extrinsic(msgs, ptr), rtol=1e-9, atol=1e-9)


@needs_cython
@given(segmented())
@settings(max_examples=200, deadline=None)
def test_backends_agree_check(data):
    msgs, ptr = data
    a = kernels.check_extrinsic(msgs, ptr, PRODUCT_CLAMP, backend="python")
    b = kernels.check_extrinsic(msgs, ptr, PRODUCT_CLAMP, backend="cython")
    assert np.array_equal(a, b)


@needs_cython
@given(segmented())
@settings(max_examples=200, deadline=None)
def test_backends_agree_segment(data):
    vals, ptr = data
    a = kernels.segment_combine(vals, ptr, PRODUCT_CLAMP, backend="python")
    b = kernels.segment_combine(vals, ptr, PRODUCT_CLAMP, backend="cython")
    assert np.array_equal(a, b)
    for k in range(len(ptr) - 1):
        assert a[k] == pytest.approx(check_update(vals[ptr[k] : ptr[k + 1]]), rel=1e-9, abs=1e-9)


@given(segmented(), st.data())
@settings(max_examples=200, deadline=None)
def test_variable_extrinsic(data, extra):
    msgs, ptr = data
    n = len(ptr) - 1
    h = np.asarray(extra.draw(arrays(np.float64, n, elements=finite)))
    out, total = kernels.variable_extrinsic(msgs, ptr, h, MSG_CLIP, backend="python")
    for i in range(n):
        seg = msgs[ptr[i] : ptr[i + 1]]
        assert total[i] == pytest.approx(h[i] + seg.sum(), abs=1e-9)
        for k in range(seg.size):
            expect = min(max(h[i] + seg.sum() - seg[k], -MSG_CLIP), MSG_CLIP)
            assert out[ptr[i] + k] == pytest.approx(expect, abs=1e-9)
    if kernels.BACKEND == "cython":
        out2, total2 = kernels.variable_extrinsic(msgs, ptr, h, MSG_CLIP, backend="cython")
        assert np.array_equal(out, out2) and np.array_equal(total, total2)


def test_empty_segment_is_clamped_max():
    ptr = np.array([0, 0, 2], dtype=np.int64)
    out = kernels.segment_combine(np.array([0.3, 0.4]), ptr, PRODUCT_CLAMP)
    assert out[0] == pytest.approx(math.atanh(PRODUCT_CLAMP))


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.check_extrinsic(np.zeros(2), np.array([0, 2]), PRODUCT_CLAMP, backend="fortran")
