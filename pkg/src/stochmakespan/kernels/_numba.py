"""numba-compiled twins of the kernels in ``_numpy``."""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def greedy_coverage(indptr, indices, weights, k):
    m = indptr.size - 1
    uncovered = np.ones(weights.size, dtype=np.bool_)
    used = np.zeros(m, dtype=np.bool_)
    chosen = np.empty(k, dtype=np.int64)
    covered = 0.0
    for step in range(k):
        best = -1
        best_gain = -1.0
        for i in range(m):
            if used[i]:
                continue
            gain = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                if uncovered[j]:
                    gain += weights[j]
            if gain > best_gain:
                best_gain = gain
                best = i
        chosen[step] = best
        used[best] = True
        covered += best_gain
        for p in range(indptr[best], indptr[best + 1]):
            uncovered[indices[p]] = False
    return chosen, covered


@njit(cache=True)
def _draw(values, cdf, width, u):
    idx = 0
    while idx < width - 1 and cdf[idx] <= u:
        idx += 1
    return values[idx]


@njit(cache=True)
def sample_max_loads(values, cdf, support_len, t_indptr, t_indices, uniforms):
    n_samples, n_sel = uniforms.shape
    out = np.zeros(n_samples)
    if n_sel == 0 or t_indices.size == 0:
        return out
    n_res = t_indices.max() + 1
    loads = np.zeros(n_res)
    for s in range(n_samples):
        best = 0.0
        for j in range(n_sel):
            x = _draw(values[j], cdf[j], support_len[j], uniforms[s, j])
            if x == 0.0:
                continue
            for p in range(t_indptr[j], t_indptr[j + 1]):
                i = t_indices[p]
                loads[i] += x
                if loads[i] > best:
                    best = loads[i]
        out[s] = best
        for j in range(n_sel):
            for p in range(t_indptr[j], t_indptr[j + 1]):
                loads[t_indices[p]] = 0.0
    return out


@njit(cache=True)
def exact_expected_max(values, probs, support_len, t_indptr, t_indices):
    n_sel = support_len.size
    if n_sel == 0 or t_indices.size == 0:
        return 0.0
    n_res = t_indices.max() + 1
    loads = np.zeros(n_res)
    digit = np.zeros(n_sel, dtype=np.int64)
    acc = 0.0
    while True:
        weight = 1.0
        best = 0.0
        for j in range(n_sel):
            weight *= probs[j, digit[j]]
            x = values[j, digit[j]]
            for p in range(t_indptr[j], t_indptr[j + 1]):
                loads[t_indices[p]] += x
        for j in range(n_sel):
            for p in range(t_indptr[j], t_indptr[j + 1]):
                i = t_indices[p]
                if loads[i] > best:
                    best = loads[i]
                loads[i] = 0.0
        acc += weight * best
        # odometer, last task least significant
        j = n_sel - 1
        while j >= 0:
            digit[j] += 1
            if digit[j] < support_len[j]:
                break
            digit[j] = 0
            j -= 1
        if j < 0:
            break
    return acc


@njit(cache=True)
def tree_round(order, p_indptr, p_vertices, sizes, rewards, y, theta, large,
               constrained, uniforms, n_vertices):
    reps = uniforms.shape[0]
    n = sizes.size
    chosen = np.zeros((reps, n), dtype=np.bool_)
    value = np.zeros(reps)
    loads = np.zeros((2, n_vertices))
    pools = np.zeros((2, n), dtype=np.bool_)
    for r in range(reps):
        loads[:] = 0.0
        pools[:] = False
        for t in range(order.size):
            j = order[t]
            if not uniforms[r, j] < y[j] / 4.0:
                continue
            pool = 1 if large[j] else 0
            fits = True
            for p in range(p_indptr[j], p_indptr[j + 1]):
                v = p_vertices[p]
                if constrained[v] and not loads[pool, v] + sizes[j] <= theta:
                    fits = False
                    break
            if fits:
                for p in range(p_indptr[j], p_indptr[j + 1]):
                    v = p_vertices[p]
                    if constrained[v]:
                        loads[pool, v] += sizes[j]
                pools[pool, j] = True
        small_reward = 0.0
        large_reward = 0.0
        for j in range(n):
            if pools[0, j]:
                small_reward += rewards[j]
            if pools[1, j]:
                large_reward += rewards[j]
        pick = 1 if large_reward > small_reward else 0
        for j in range(n):
            chosen[r, j] = pools[pick, j]
        value[r] = large_reward if pick == 1 else small_reward
    return chosen, value


@njit(cache=True)
def lattice_masks(x0, y0, step, nx, ny, cx, cy, r2):
    words = (cx.size + 63) // 64
    out = np.zeros((nx * ny, words), dtype=np.uint64)
    one = np.uint64(1)
    for i in range(nx):
        ix = i * step
        px = x0 + ix
        for j in range(ny):
            jy = j * step
            py = y0 + jy
            row = i * ny + j
            for d in range(cx.size):
                dx = px - cx[d]
                dy = py - cy[d]
                if dx * dx + dy * dy <= r2[d]:
                    out[row, d // 64] |= one << np.uint64(d % 64)
    return out


@njit(cache=True)
def point_masks(px, py, cx, cy, r2, words):
    out = np.zeros((px.size, words), dtype=np.uint64)
    one = np.uint64(1)
    for s in range(px.size):
        for d in range(cx.size):
            dx = px[s] - cx[d]
            dy = py[s] - cy[d]
            if dx * dx + dy * dy <= r2[d]:
                out[s, d // 64] |= one << np.uint64(d % 64)
    return out
