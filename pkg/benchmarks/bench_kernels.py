"""Compare the numba kernels against the pure-numpy fallbacks.

Run twice to see both paths:

    python benchmarks/bench_kernels.py
    SOLO_OPT_NO_NUMBA=1 python benchmarks/bench_kernels.py

or rely on this script's built-in side-by-side timing, which calls the
private numpy implementations directly.
"""
import time

import numpy as np

from solo_opt import kernels
from solo_opt.compliance import ComplianceProblem
from solo_opt.truss import build_tower


def timeit(fn, *args, repeat=20):
    fn(*args)  # warm up (and trigger JIT compilation)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def bench_truss(n_blocks):
    model = build_tower(n_blocks)
    rng = np.random.default_rng(0)
    areas = model.catalog[rng.integers(0, model.catalog.size, model.n_bars)]
    stiff = model.elastic_modulus * areas / model.lengths
    n_dof = 3 * model.n_nodes
    args = (model.bars, model.dircos, stiff, n_dof)

    t_np = timeit(kernels._assemble_truss_np, *args)
    if kernels.HAS_NUMBA:
        t_nb = timeit(kernels._assemble_truss_nb, *args)
        k_nb = kernels._assemble_truss_nb(*args)
        k_np = kernels._assemble_truss_np(*args)
        assert np.allclose(k_nb, k_np, rtol=1e-12, atol=1e-9)
    else:
        t_nb = float("nan")
    print(f"truss assemble  {model.n_bars:5d} bars   "
          f"numpy {t_np * 1e3:8.3f} ms   numba {t_nb * 1e3:8.3f} ms   "
          f"speedup {t_np / t_nb:5.1f}x" if kernels.HAS_NUMBA else
          f"truss assemble  {model.n_bars:5d} bars   numpy {t_np * 1e3:8.3f} ms")


def bench_plane(n):
    p = ComplianceProblem(n=n)
    cache = p._setup()
    rng = np.random.default_rng(1)
    y_gp = rng.random((cache["edof"].shape[0], 4))
    args = (cache["edof"], y_gp, cache["k0"], 2 * n * n)

    t_np = timeit(kernels._assemble_plane_np, *args)
    if kernels.HAS_NUMBA:
        t_nb = timeit(kernels._assemble_plane_nb, *args)
        assert np.allclose(kernels._assemble_plane_nb(*args),
                           kernels._assemble_plane_np(*args),
                           rtol=1e-12, atol=1e-9)
        print(f"plane assemble  {n:3d}x{n:<3d} grid   "
              f"numpy {t_np * 1e3:8.3f} ms   numba {t_nb * 1e3:8.3f} ms   "
              f"speedup {t_np / t_nb:5.1f}x")
    else:
        print(f"plane assemble  {n:3d}x{n:<3d} grid   numpy {t_np * 1e3:8.3f} ms")


if __name__ == "__main__":
    print(f"numba available: {kernels.HAS_NUMBA}")
    for blocks in (4, 24, 56):
        bench_truss(blocks)
    for n in (5, 11, 21):
        bench_plane(n)
