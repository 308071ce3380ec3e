"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``.

Regular segment layouts reshape directly; irregular ones are padded with the
neutral element. Multiplication and addition orders follow the compiled loops.
"""

import numpy as np


def _layout(ptr):
    deg = np.diff(ptr)
    n_seg = deg.shape[0]
    width = int(deg.max()) if n_seg else 0
    regular = n_seg > 0 and bool(np.all(deg == width))
    return deg, n_seg, width, regular


def _padded(values, ptr, deg, n_seg, width, fill):
    rows = np.repeat(np.arange(n_seg), deg)
    cols = np.arange(ptr[-1]) - np.repeat(ptr[:-1], deg)
    mat = np.full((n_seg, width), fill)
    mat[rows, cols] = values
    return mat, rows, cols


def extrinsic_product(t, ptr, clamp):
    deg, n_seg, width, regular = _layout(ptr)
    if width == 0:
        return np.empty(0)
    if regular:
        mat, rows, cols = t.reshape(n_seg, width), None, None
    else:
        mat, rows, cols = _padded(t, ptr, deg, n_seg, width, 1.0)
    pre = np.ones((n_seg, width))
    suf = np.ones((n_seg, width))
    acc = np.ones(n_seg)
    for k in range(width):
        pre[:, k] = acc
        acc = acc * mat[:, k]
    acc = np.ones(n_seg)
    for k in range(width - 1, -1, -1):
        suf[:, k] = acc
        acc = acc * mat[:, k]
    p = np.clip(pre * suf, -clamp, clamp)
    return p.reshape(-1) if regular else p[rows, cols]


def segment_product(t, ptr, clamp):
    deg, n_seg, width, regular = _layout(ptr)
    if regular:
        mat = t.reshape(n_seg, width)
    else:
        mat, _, _ = _padded(t, ptr, deg, n_seg, width, 1.0)
    acc = np.ones(n_seg)
    for k in range(width):
        acc = acc * mat[:, k]
    return np.clip(acc, -clamp, clamp)


def extrinsic_sum(msgs, ptr, h, clip):
    deg, n_seg, width, regular = _layout(ptr)
    if regular:
        mat = msgs.reshape(n_seg, width)
    else:
        mat, rows, cols = _padded(msgs, ptr, deg, n_seg, width, 0.0)
    acc = np.zeros(n_seg)
    for k in range(width):
        acc = acc + mat[:, k]
    total = acc + h
    owner = np.repeat(np.arange(n_seg), deg)
    out = np.clip(total[owner] - msgs, -clip, clip)
    return out, total
