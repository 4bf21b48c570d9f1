"""Hot-kernel benchmark: numba @njit builds vs the pure-numpy fallbacks.

Times the fused log-posterior/gradient kernel (the HMC inner loop) and the
greedy-selection distance kernel on hexagon-sized problems, then a whole
sampling run under each backend.

Run with the package installed:

    python benchmarks/bench_kernels.py

The backend flag only affects fresh processes; this script imports both
implementations directly, so one invocation covers both.
"""

import time

import numpy as np

from conceptscope.backend import HAS_NUMBA
from conceptscope.kernels import numpy_impl

if HAS_NUMBA:
    from conceptscope.kernels import numba_impl


def bench(fn, *args, repeat=200):
    fn(*args)  # warm-up (and jit compile)
    t0 = time.perf_counter()
    for _ in range(repeat):
        fn(*args)
    return (time.perf_counter() - t0) / repeat


def main():
    rng = np.random.default_rng(0)
    N, D, K = 1200, 2, 3
    X = rng.normal(size=(N, D))
    y = rng.integers(0, 2, N).astype(np.float64)
    flat = rng.normal(size=K * D + 2 * K + 1)
    no_pin = np.empty(0)

    print(f"log-posterior + gradient  (N={N}, D={D}, K={K})")
    t_np = bench(numpy_impl.logp_grad, flat, X, y, K, -1, no_pin, 1.0, 1.0)
    print(f"  numpy : {t_np * 1e6:9.1f} us/call")
    if HAS_NUMBA:
        t_nb = bench(numba_impl.logp_grad, flat, X, y, K, -1, no_pin, 1.0, 1.0)
        print(f"  numba : {t_nb * 1e6:9.1f} us/call   ({t_np / t_nb:.1f}x)")

    pool = np.ascontiguousarray(rng.uniform(size=(1000, N * K)))
    print(f"\nrow distances             (pool=1000, width={N * K})")
    for metric_id, name in ((0, "euclidean"), (2, "absolute")):
        t_np = bench(numpy_impl.row_dists, pool, 7, metric_id, 1.0, repeat=20)
        line = f"  {name:9s} numpy: {t_np * 1e3:7.2f} ms/call"
        if HAS_NUMBA:
            t_nb = bench(numba_impl.row_dists, pool, 7, metric_id, 1.0, repeat=20)
            line += f"   numba: {t_nb * 1e3:7.2f} ms/call   ({t_np / t_nb:.1f}x)"
        print(line)

    print("\nfull sampling run (hexagon, 3 restarts x 50 draws, burn-in 200)")
    from conceptscope.datagen import gen_hexagon
    from conceptscope.hmc import HmcConfig, run_restarts
    from conceptscope.model import PriorSpec
    import conceptscope.model as model_mod
    import conceptscope.kernels as kernels_mod

    data, _ = gen_hexagon()
    cfg = HmcConfig(step_size=0.04, leapfrog_steps=10, burn_in_steps=200,
                    samples_per_restart=50, restarts=3, seed=0)

    for name, impl in [("numpy", numpy_impl)] + ([("numba", numba_impl)]
                                                 if HAS_NUMBA else []):
        kernels_mod.logp_grad = impl.logp_grad
        model_mod.kernels.logp_grad = impl.logp_grad
        run_restarts(data, 3, PriorSpec(), cfg)  # warm-up
        t0 = time.perf_counter()
        run_restarts(data, 3, PriorSpec(), cfg)
        print(f"  {name:6s}: {time.perf_counter() - t0:6.2f} s")


if __name__ == "__main__":
    main()
