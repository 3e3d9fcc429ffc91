"""Time the numba kernels against their numpy twins and check they agree.

Usage: python benchmarks/compare_backends.py [--reps N]
"""
import argparse
import time

import numpy as np

from iqpstab import _kernels
from iqpstab.f2linalg import BitMatrix
from iqpstab.scheme import stabilizer_construct


def timed(fn, reps):
    fn()  # warm-up (JIT compile on first call)
    t0 = time.perf_counter()
    for _ in range(reps):
        out = fn()
    return (time.perf_counter() - t0) / reps, out


def cases(rng):
    a = BitMatrix.random(400, 300, rng)
    b = BitMatrix.random(300, 250, rng)
    inst = stabilizer_construct(60, 100, 2, 0, rng)
    h = inst.H
    sel = (h @ inst.s).to_array()
    g = _kernels.NUMPY.gram_selected(h.data, (h @ h.row(0)).to_array(), h.cols)
    piv = _kernels.NUMPY.rref(g, h.cols)
    kern = _kernels.NUMPY.kernel_rows(g, piv, h.cols, h.data.shape[1])[:12]
    hk = np.stack([_kernels.NUMPY.matvec(h.data, r) for r in kern])
    state = np.zeros(1 << 14, dtype=np.complex128)
    state[0] = 1
    masks = rng.integers(1, 1 << 14, size=40).astype(np.int64)
    return {
        "rref 400x300": lambda k: k.rref(a.data.copy(), a.cols),
        "matmul 400x300 @ 300x250": lambda k: k.matmul(a.data, a.cols, b.data),
        "gram_selected 100x60": lambda k: k.gram_selected(h.data, sel, h.cols),
        "check_candidate": lambda k: k.check_candidate(h.data, sel, h.cols, 2),
        "gray_search 2^12": lambda k: k.gray_search(h.data, kern, hk, h.cols, 0, 1 << 12, 1)[0],
        "x rotations n=14, 40 rows": lambda k: rotated(k, state, masks),
    }


def rotated(k, state, masks):
    out = state.copy()
    k.apply_x_rotations(out, masks, 0.92, 0.38)
    return out


def same(x, y):
    if isinstance(x, np.ndarray) and x.dtype.kind == "c":
        return np.allclose(x, y, atol=1e-12)
    if isinstance(x, np.ndarray):
        return np.array_equal(x, y)
    return x == y


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    if _kernels.NUMBA is None:
        print("numba not installed; nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}  agree")
    for name, fn in cases(rng).items():
        t_np, out_np = timed(lambda: fn(_kernels.NUMPY), args.reps)
        t_nb, out_nb = timed(lambda: fn(_kernels.NUMBA), args.reps)
        print(f"{name:<28}{t_np * 1e3:>12.3f}{t_nb * 1e3:>12.3f}{t_np / t_nb:>10.1f}  {same(out_np, out_nb)}")


if __name__ == "__main__":
    main()
