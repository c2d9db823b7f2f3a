"""Time each hot kernel on the numba and numpy backends.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Inputs are random but seeded, sized like a mid-sized solve.  Numba
compilation happens in a warm-up call outside the timed region.  Both
backends are also checked to return the same result.
"""
import argparse
import time

import numpy as np

from stochmakespan import kernels


def random_csr(rng, rows, cols, density):
    lists = [np.flatnonzero(rng.random(cols) < density) for _ in range(rows)]
    indptr = np.concatenate([[0], np.cumsum([len(l) for l in lists])]).astype(np.int64)
    return indptr, np.concatenate(lists).astype(np.int64)


def supports(rng, n, width):
    lens = rng.integers(1, width + 1, size=n).astype(np.int64)
    values = np.zeros((n, width))
    probs = np.zeros((n, width))
    for j, w in enumerate(lens):
        values[j, :w] = np.sort(rng.choice(np.arange(16) / 4.0, size=w, replace=False))
        p = rng.random(w) + 0.1
        probs[j, :w] = p / p.sum()
    cdf = np.cumsum(probs, axis=1)
    for j, w in enumerate(lens):
        cdf[j, w - 1 :] = 1.0
    return values, probs, cdf, lens


def workloads(scale):
    rng = np.random.default_rng(0)
    s = lambda x: max(1, int(x * scale))  # noqa: E731

    m, n = s(400), s(300)
    indptr, indices = random_csr(rng, m, n, 0.05)
    weights = rng.random(n)
    yield "greedy_coverage", (indptr, indices, weights, s(40))

    n, m = s(40), s(60)
    values, probs, cdf, lens = supports(rng, n, 4)
    t_indptr, t_indices = random_csr(rng, n, m, 0.2)
    yield "sample_max_loads", (values, cdf, lens, t_indptr, t_indices, rng.random((s(20000), n)))

    n_exact = 10
    values, probs, _, lens = supports(rng, n_exact, 3)
    t_indptr, t_indices = random_csr(rng, n_exact, 12, 0.4)
    yield "exact_expected_max", (values, probs, lens, t_indptr, t_indices)

    nv, n = s(200), s(150)
    p_indptr, p_vertices = random_csr(rng, n, nv, 0.03)
    sizes = rng.random(n)
    large = sizes > 0.5
    yield "tree_round", (
        rng.permutation(n).astype(np.int64), p_indptr, p_vertices, sizes, rng.random(n),
        rng.random(n) * 0.2, 1.0, large, rng.random(nv) < 0.8, rng.random((64, n)), nv,
    )

    k = s(60)
    cx, cy = rng.uniform(0, 10, k), rng.uniform(0, 10, k)
    r2 = rng.uniform(0.5, 3.0, k) ** 2
    yield "lattice_masks", (-1.0, -1.0, 0.03, 409, 409, cx, cy, r2)
    pts = s(50000)
    yield "point_masks", (rng.uniform(0, 10, pts), rng.uniform(0, 10, pts), cx, cy, r2, (k + 63) // 64)


def best_time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - start)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), atol=1e-9)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--scale", type=float, default=1.0, help="multiplies workload sizes")
    args = parser.parse_args()
    if kernels.numba_backend is None:
        raise SystemExit("numba is not installed; nothing to compare")

    print(f"{'kernel':<20}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}  agree")
    for name, kargs in workloads(args.scale):
        np_fn = getattr(kernels.numpy_backend, name)
        nb_fn = getattr(kernels.numba_backend, name)
        nb_fn(*kargs)  # compile
        t_np, out_np = best_time(np_fn, kargs, args.repeat)
        t_nb, out_nb = best_time(nb_fn, kargs, args.repeat)
        print(f"{name:<20}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x  {same(out_np, out_nb)}")


if __name__ == "__main__":
    main()
