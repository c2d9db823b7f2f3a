"""Pure numpy implementations of the hot loops.

Every function here has a twin with the same signature in ``_numba``.  Random
inputs (uniforms) are drawn by the callers so both backends consume identical
streams and return identical selections.
"""
from __future__ import annotations

import numpy as np

_CHUNK_CELLS = 4_000_000


def greedy_coverage(indptr, indices, weights, k):
    """Greedy weighted max coverage over CSR sets; ties go to the smaller set id.

    Returns ``(chosen, covered_weight)``.
    """
    m = indptr.size - 1
    owner = np.repeat(np.arange(m), np.diff(indptr))
    uncovered = np.ones(weights.size, dtype=np.bool_)
    used = np.zeros(m, dtype=np.bool_)
    chosen = np.empty(k, dtype=np.int64)
    covered = 0.0
    for step in range(k):
        live = weights[indices] * uncovered[indices]
        gains = np.bincount(owner, weights=live, minlength=m)
        gains[used] = -1.0
        best = int(np.argmax(gains))
        chosen[step] = best
        used[best] = True
        covered += gains[best]
        uncovered[indices[indptr[best] : indptr[best + 1]]] = False
    return chosen, covered


def _incidence_matrix(t_indptr, t_indices):
    """Dense task x touched-resource matrix restricted to resources in use."""
    touched, local = np.unique(t_indices, return_inverse=True)
    a = np.zeros((t_indptr.size - 1, touched.size))
    rows = np.repeat(np.arange(t_indptr.size - 1), np.diff(t_indptr))
    a[rows, local] = 1.0
    return a


def sample_max_loads(values, cdf, support_len, t_indptr, t_indices, uniforms):
    """Per-sample makespan: sizes drawn by inverse cdf, loads summed per resource."""
    n_samples, n_sel = uniforms.shape
    if n_sel == 0 or t_indices.size == 0:
        return np.zeros(n_samples)
    drawn = np.empty((n_samples, n_sel))
    for j in range(n_sel):
        width = support_len[j]
        idx = np.searchsorted(cdf[j, :width], uniforms[:, j], side="right")
        drawn[:, j] = values[j, np.minimum(idx, width - 1)]
    a = _incidence_matrix(t_indptr, t_indices)
    out = np.empty(n_samples)
    step = max(1, _CHUNK_CELLS // max(1, a.shape[1]))
    for lo in range(0, n_samples, step):
        out[lo : lo + step] = (drawn[lo : lo + step] @ a).max(axis=1)
    return out


def exact_expected_max(values, probs, support_len, t_indptr, t_indices):
    """Expected makespan by enumerating the full outcome product."""
    n_sel = support_len.size
    if n_sel == 0 or t_indices.size == 0:
        return 0.0
    total = int(np.prod(support_len.astype(np.int64)))
    a = _incidence_matrix(t_indptr, t_indices)
    step = max(1, _CHUNK_CELLS // max(n_sel, a.shape[1]))
    acc = 0.0
    for lo in range(0, total, step):
        codes = np.arange(lo, min(total, lo + step), dtype=np.int64)
        drawn = np.empty((codes.size, n_sel))
        weight = np.ones(codes.size)
        for j in range(n_sel - 1, -1, -1):
            codes, digit = np.divmod(codes, support_len[j])
            drawn[:, j] = values[j, digit]
            weight *= probs[j, digit]
        acc += float(weight @ (drawn @ a).max(axis=1))
    return acc


def tree_round(order, p_indptr, p_vertices, sizes, rewards, y, theta, large,
               constrained, uniforms, n_vertices):
    """Repeated randomised path rounding; returns chosen masks and rewards.

    Paths are visited in ``order``.  A path is tried with probability
    ``y / 4`` and joins the small or large pool when every constrained vertex
    on it stays within ``theta``.  Each repetition keeps the better pool.
    """
    reps = uniforms.shape[0]
    n = sizes.size
    chosen = np.zeros((reps, n), dtype=np.bool_)
    value = np.zeros(reps)
    for r in range(reps):
        loads = np.zeros((2, n_vertices))
        pools = np.zeros((2, n), dtype=np.bool_)
        for j in order:
            if not uniforms[r, j] < y[j] / 4.0:
                continue
            pool = 1 if large[j] else 0
            verts = p_vertices[p_indptr[j] : p_indptr[j + 1]]
            verts = verts[constrained[verts]]
            if np.all(loads[pool, verts] + sizes[j] <= theta):
                loads[pool, verts] += sizes[j]
                pools[pool, j] = True
        small_reward = rewards[pools[0]].sum()
        large_reward = rewards[pools[1]].sum()
        pick = 1 if large_reward > small_reward else 0
        chosen[r] = pools[pick]
        value[r] = large_reward if pick else small_reward
    return chosen, value


def lattice_masks(x0, y0, step, nx, ny, cx, cy, r2):
    """Disk-membership bitmasks of the lattice ``(x0 + i*step, y0 + j*step)``.

    Row ``i * ny + j`` holds the mask words of lattice point ``(i, j)``.
    """
    words = (cx.size + 63) // 64
    xs = x0 + np.arange(nx) * step
    ys = y0 + np.arange(ny) * step
    px = np.repeat(xs, ny)
    py = np.tile(ys, nx)
    return point_masks(px, py, cx, cy, r2, words)


def point_masks(px, py, cx, cy, r2, words):
    out = np.zeros((px.size, words), dtype=np.uint64)
    for d in range(cx.size):
        inside = (px - cx[d]) ** 2 + (py - cy[d]) ** 2 <= r2[d]
        out[inside, d // 64] |= np.uint64(1) << np.uint64(d % 64)
    return out
