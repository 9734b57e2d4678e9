"""Benchmark the numba kernels against the pure-numpy fallback.

Times each hot kernel on solver-realistic shapes (N=20 elements, M=8
antennas, K=4 users) and a full end-to-end solve under both backends.

Run: python benchmarks/bench_backends.py [--solves N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from aerisim import _kernels_numpy
from aerisim.channel import build_channel_set
from aerisim.config import SystemConfig
from aerisim.geometry import SurfaceKind, SurfaceOrientation, build_scenario

try:
    from aerisim import _kernels_numba
except ImportError:
    _kernels_numba = None


def _crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def kernel_cases(rng, n=20, m=8, k=4):
    T = np.ascontiguousarray(_crandn(rng, k, n, m))
    W = np.ascontiguousarray(_crandn(rng, m, k))
    theta_t, theta_r = _crandn(rng, n), _crandn(rng, n)
    sides = (rng.uniform(size=k) < 0.5).astype(np.int8)
    sigma2 = rng.uniform(0.1, 1.0, k)
    g = _kernels_numpy.effective_gains(T, W, theta_t, theta_r, sides)
    varpi, nu, _ = _kernels_numpy.wmmse_update(g, sigma2)
    h_eff = _kernels_numpy.effective_channels(T, theta_t, theta_r, sides)
    aux_t, aux_r = _crandn(rng, n), _crandn(rng, n)
    lam_t, lam_r = _crandn(rng, n), _crandn(rng, n)
    phi_t = rng.uniform(-np.pi, np.pi, n)
    psi = rng.uniform(0, np.pi / 2, n)
    return {
        "effective_gains": (T, W, theta_t, theta_r, sides),
        "effective_channels": (T, theta_t, theta_r, sides),
        "wmmse_update": (g, sigma2),
        "mse_vector": (g, nu, sigma2),
        "precoder_update": (h_eff, varpi, nu, 5.0, 1e-9, 0.0),
        "surface_update": (T, W, varpi, nu, sides, aux_t, aux_r,
                           lam_t, lam_r, 0.7, 1.0 / 1.4, False),
        "aux_amplitude_update": (aux_t, aux_r, phi_t, phi_t - np.pi / 2, False),
        "aux_phase_update": (aux_t, aux_r, np.sin(psi), np.cos(psi), False),
        "penalty_value": (theta_t, theta_r, aux_t, aux_r, lam_t, lam_r,
                          0.7, 1.0 / 1.4, False),
    }


def time_fn(fn, args, repeats=2000):
    fn(*args)  # warm up (also JIT-compiles)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def bench_kernels():
    rng = np.random.default_rng(0)
    cases = kernel_cases(rng)
    print(f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, args in cases.items():
        t_np = time_fn(getattr(_kernels_numpy, name), args)
        if _kernels_numba is None:
            print(f"{name:<22}{t_np*1e6:>10.1f}us{'-':>12}{'-':>10}")
            continue
        t_nb = time_fn(getattr(_kernels_numba, name), args)
        print(f"{name:<22}{t_np*1e6:>10.1f}us{t_nb*1e6:>10.1f}us"
              f"{t_np/t_nb:>9.1f}x")


def bench_solve(n_solves):
    # importing the solver binds kernels to the active backend, so the
    # end-to-end comparison swaps the bound functions explicitly
    from aerisim import kernels, optimizer
    from aerisim.optimizer import SolverOptions, solve

    system = SystemConfig()
    rng = np.random.default_rng(1)
    users = np.column_stack([rng.uniform(0, 100, 4),
                             rng.uniform(0, 100, 4), np.zeros(4)])
    scen = build_scenario((0, 0, 0), (50, 50, 40), users,
                          SurfaceOrientation(SurfaceKind.VERTICAL_STAR, 0.0))
    channels = build_channel_set(system, scen, 7)

    impls = [("numpy", _kernels_numpy)]
    if _kernels_numba is not None:
        impls.append(("numba", _kernels_numba))

    results = {}
    names = [k for k in kernel_cases(np.random.default_rng(0))]
    saved = {name: getattr(kernels, name) for name in names}
    try:
        for label, impl in impls:
            for name in names:
                setattr(kernels, name, getattr(impl, name))
            solve(channels, system.p_max, system.noise_power,
                  SolverOptions(mode="star"), 0)  # warm up
            t0 = time.perf_counter()
            for s in range(n_solves):
                solve(channels, system.p_max, system.noise_power,
                      SolverOptions(mode="star"), s)
            results[label] = (time.perf_counter() - t0) / n_solves
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)

    print(f"\nfull solve (N=20, M=8, K=4), mean of {n_solves}:")
    for label, t in results.items():
        print(f"  {label:<8}{t*1e3:8.1f} ms")
    if "numba" in results:
        print(f"  speedup {results['numpy']/results['numba']:.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--solves", type=int, default=5,
                        help="end-to-end solves per backend")
    args = parser.parse_args()
    if _kernels_numba is None:
        print("numba not importable: benchmarking the numpy fallback only")
    bench_kernels()
    bench_solve(args.solves)


if __name__ == "__main__":
    main()
