"""Independent reference implementations used only by the tests.

Everything here is written the dumbest possible way (explicit loops, no numpy
vectorization tricks, no code shared with the package) so it can serve as an
oracle for the optimized kernels and the metric suite.
"""

from __future__ import annotations

import math

import numpy as np


def naive_conv2d(x: np.ndarray, kernels: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Quadruple-loop valid cross-correlation, one image [c,h,w]."""
    c, h, w = x.shape
    out_maps, _, k, _ = kernels.shape
    oh, ow = h - k + 1, w - k + 1
    out = np.zeros((out_maps, oh, ow), dtype=np.float64)
    for o in range(out_maps):
        for i in range(oh):
            for j in range(ow):
                acc = 0.0
                for ci in range(c):
                    for ki in range(k):
                        for kj in range(k):
                            acc += float(x[ci, i + ki, j + kj]) * float(kernels[o, ci, ki, kj])
                out[o, i, j] = acc + float(bias[o])
    return out


def naive_maxpool(x: np.ndarray, p: int):
    """Window-max with first-index tie rule; returns (pooled, flat window index)."""
    c, h, w = x.shape
    oh, ow = h // p, w // p
    out = np.zeros((c, oh, ow), dtype=np.float64)
    mask = np.zeros((c, oh, ow), dtype=np.int64)
    for ci in range(c):
        for i in range(oh):
            for j in range(ow):
                best = -math.inf
                best_idx = 0
                for wi in range(p):
                    for wj in range(p):
                        v = float(x[ci, i * p + wi, j * p + wj])
                        if v > best:
                            best = v
                            best_idx = wi * p + wj
                out[ci, i, j] = best
                mask[ci, i, j] = best_idx
    return out, mask


def naive_linear(x: np.ndarray, weights: np.ndarray, bias: np.ndarray) -> np.ndarray:
    n_out, n_in = weights.shape
    out = np.zeros(n_out, dtype=np.float64)
    for o in range(n_out):
        acc = 0.0
        for i in range(n_in):
            acc += float(weights[o, i]) * float(x[i])
        out[o] = acc + float(bias[o])
    return out


def naive_l1(a, b) -> float:
    acc = 0.0
    for x, y in zip(a, b):
        acc += abs(float(x) - float(y))
    return acc


# -- brute-force retrieval metrics -------------------------------------------


def bf_precision_at(rel: list[int], k: int) -> float:
    return sum(rel[:k]) / k


def bf_average_precision(rel: list[int], total_relevant: int) -> float:
    acc = 0.0
    for k in range(1, len(rel) + 1):
        if rel[k - 1]:
            acc += bf_precision_at(rel, k)
    return acc / total_relevant


def bf_nearest_neighbor(rel: list[int]) -> float:
    return float(rel[0])


def bf_tiers(rel: list[int], total_relevant: int) -> tuple[float, float]:
    r = total_relevant
    ft = sum(rel[:r]) / r
    st = min(1.0, sum(rel[: 2 * r]) / r)
    return ft, st


def bf_e_measure(rel: list[int], total_relevant: int) -> float:
    top = sum(rel[:32])
    p = top / min(32, len(rel))
    rc = top / total_relevant if total_relevant else 0.0
    if p + rc == 0:
        return 0.0
    return 2 * p * rc / (p + rc)


def bf_ndcg(rel: list[int], total_relevant: int) -> float:
    def dcg(seq):
        acc = float(seq[0])
        for i in range(2, len(seq) + 1):
            acc += seq[i - 1] / math.log2(i)
        return acc

    ideal = [1] * total_relevant + [0] * (len(rel) - total_relevant)
    return dcg(rel) / dcg(ideal)


def bf_pr_curve(rel: list[int], total_relevant: int, grid: list[float]) -> list[float]:
    """Right-max envelope of the precision staircase, linearly interpolated."""
    points = []  # (recall, precision) at each relevant hit
    seen = 0
    for k in range(1, len(rel) + 1):
        if rel[k - 1]:
            seen += 1
            points.append((seen / total_relevant, seen / k))
    env = []
    for i, (r, p) in enumerate(points):
        env.append((r, max(q for _, q in points[i:])))
    out = []
    for g in grid:
        if g <= env[0][0]:
            out.append(env[0][1])
            continue
        if g >= env[-1][0]:
            out.append(env[-1][1])
            continue
        for (r0, p0), (r1, p1) in zip(env, env[1:]):
            if r0 <= g <= r1:
                t = 0.0 if r1 == r0 else (g - r0) / (r1 - r0)
                out.append(p0 + t * (p1 - p0))
                break
    return out
