"""Time the compiled and pure-Python kernels on BP- and DE-sized inputs.

    python benchmarks/bench_kernels.py [--repeat 20]
"""

import argparse
import timeit

import numpy as np

from ldpcglass import kernels
from ldpcglass.bp import MSG_CLIP, PRODUCT_CLAMP


def segments(rng, n_seg, degrees):
    deg = rng.choice(degrees, size=n_seg)
    return np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)


def cases(rng):
    # check side of a (3,6) population step: 2^14 segments of degree 5
    reg = segments(rng, 1 << 14, [5])
    irr = segments(rng, 1 << 14, [2, 3, 5, 9, 19])
    edges = segments(rng, 20_000, [6])
    msgs = lambda ptr: rng.normal(2.0, 2.0, ptr[-1])  # noqa: E731
    h = rng.normal(2.0, 2.0, 40_000)
    var_ptr = segments(rng, 40_000, [3])
    return {
        "segment_combine regular": (kernels.segment_combine, (msgs(reg), reg, PRODUCT_CLAMP)),
        "segment_combine irregular": (kernels.segment_combine, (msgs(irr), irr, PRODUCT_CLAMP)),
        "check_extrinsic (3,6) edges": (kernels.check_extrinsic, (msgs(edges), edges, PRODUCT_CLAMP)),
        "variable_extrinsic dv=3": (kernels.variable_extrinsic, (msgs(var_ptr), var_ptr, h, MSG_CLIP)),
    }


def _tup(x):
    return x if isinstance(x, tuple) else (x,)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if kernels.BACKEND != "cython":
        raise SystemExit("compiled kernels not built; run `pip install -e . --no-build-isolation` first")

    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':32s} {'cython ms':>10s} {'python ms':>10s} {'speedup':>8s}")
    for name, (fn, fargs) in cases(rng).items():
        out = {}
        for backend in ("cython", "python"):
            t = timeit.repeat(lambda: fn(*fargs, backend=backend), number=1, repeat=args.repeat)
            out[backend] = 1e3 * min(t)
        a, b = fn(*fargs, backend="cython"), fn(*fargs, backend="python")
        same = all(np.array_equal(x, y) for x, y in zip(_tup(a), _tup(b)))
        flag = "" if same else "  outputs differ"
        print(f"{name:32s} {out['cython']:10.2f} {out['python']:10.2f} {out['python'] / out['cython']:7.1f}x{flag}")


if __name__ == "__main__":
    main()
