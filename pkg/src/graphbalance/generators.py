"""Deterministic, parameterized construction of the benchmark instance families."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graphcore import BaseGraph, lg
from .rng import child_seed, sample_uniform

DEFAULT_EDGE_BUDGET = 50_000_000


def gen_complete(n: int, edge_budget: int = DEFAULT_EDGE_BUDGET) -> BaseGraph:
    """K_n with edges in lexicographic order (matches the implicit indexing)."""
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    m = n * (n - 1) // 2
    if m > edge_budget:
        raise MemoryError(f"K_{n} has {m} edges, over budget {edge_budget}; "
                          "use the implicit complete graph instead")
    u, v = np.triu_indices(n, 1)
    return BaseGraph(n=n, edges_u=u.astype(np.int64), edges_v=v.astype(np.int64))


def gen_complete_bipartite(a: int, b: int) -> BaseGraph:
    """K_{a,b}; Left vertices 0..a-1."""
    if a < 1 or b < 1:
        raise ValueError("both sides must be nonempty")
    left = np.repeat(np.arange(a, dtype=np.int64), b)
    right = a + np.tile(np.arange(b, dtype=np.int64), a)
    return BaseGraph(n=a + b, edges_u=left, edges_v=right, n_left=a)


def gen_regular(n: int, d: int, seed: int) -> BaseGraph:
    """Simple d-regular graph by seeded stub pairing with conflict requeue.

    All n*d stubs are shuffled and paired; pairs that would create a
    self-loop or duplicate go back in the pool and are re-shuffled. If the
    pool stops shrinking the construction restarts from a fresh shuffle.
    Deterministic per seed.
    """
    if (n * d) % 2 != 0:
        raise ValueError("n*d must be even")
    if not 0 <= d < n:
        raise ValueError("need 0 <= d < n")
    if d == 0:
        return BaseGraph(n=n, edges_u=np.empty(0, np.int64), edges_v=np.empty(0, np.int64))
    restart = 0
    while True:
        edges = _try_pairing(n, d, child_seed(seed, restart))
        if edges is not None:
            eu, ev = edges
            return BaseGraph(n=n, edges_u=eu, edges_v=ev)
        restart += 1
        if restart > 64:
            raise RuntimeError("regular generator failed to converge")


def _try_pairing(n: int, d: int, seed: int):
    pending = np.repeat(np.arange(n, dtype=np.int64), d)
    seen: set[int] = set()
    eu: list[int] = []
    ev: list[int] = []
    stall = 0
    attempt = 0
    while pending.size:
        keys = sample_uniform(child_seed(seed, attempt), pending.size, 1 << 62)
        pending = pending[np.argsort(keys, kind="stable")]
        requeue: list[int] = []
        for u, v in zip(pending[0::2], pending[1::2]):
            u, v = int(u), int(v)
            if u > v:
                u, v = v, u
            key = u * n + v
            if u == v or key in seen:
                requeue.append(u)
                requeue.append(v)
                continue
            seen.add(key)
            eu.append(u)
            ev.append(v)
        stall = stall + 1 if len(requeue) == pending.size else 0
        if stall >= 16:
            return None  # pool is stuck (e.g. only copies of one vertex left)
        pending = np.asarray(requeue, dtype=np.int64)
        attempt += 1
    return np.asarray(eu, dtype=np.int64), np.asarray(ev, dtype=np.int64)


def gen_biregular_imbalanced(b_size: int, f: int, s: int, d: int) -> BaseGraph:
    """Imbalanced biregular bipartite graph: |A| = f^(s+1)*|B|, left degree
    d/f, right degree d*f^s, wired block-circulantly (A-vertex j meets
    B-vertices (j*dL + r) mod |B|)."""
    if f < 2 or s < 1 or b_size < 1 or d < 1:
        raise ValueError("need f >= 2, s >= 1, B_size >= 1, d >= 1")
    if d % f != 0 or d // f < 1:
        raise ValueError("left degree d/f must be a positive integer")
    d_left = d // f
    a_size = f ** (s + 1) * b_size
    d_right = d * f**s
    if d_left > b_size:
        raise ValueError(
            f"parameter error: left degree {d_left} exceeds |B|={b_size}; "
            "a simple graph needs B_size >= d/f"
        )
    j = np.arange(a_size, dtype=np.int64)
    r = np.arange(d_left, dtype=np.int64)
    left = np.repeat(j, d_left)
    right = a_size + ((j[:, None] * d_left + r[None, :]) % b_size).ravel()
    return BaseGraph(n=a_size + b_size, edges_u=left, edges_v=right, n_left=a_size)


@dataclass(frozen=True)
class LayeredLBParams:
    """Layered construction: layers V_1..V_b with |V_i| = t^i * g; between
    V_i and V_{i+1} sit t^i vertex-disjoint copies of K_{g, g*t}."""

    group_size: int
    ratio: int
    layers: int

    def __post_init__(self):
        if self.group_size < 2 or self.ratio < 2 or self.layers < 2:
            raise ValueError("need g >= 2, t >= 2, b >= 2")

    def layer_sizes(self) -> list[int]:
        return [self.ratio**i * self.group_size for i in range(1, self.layers + 1)]

    @property
    def total_vertices(self) -> int:
        return sum(self.layer_sizes())

    @property
    def total_edges(self) -> int:
        g, t = self.group_size, self.ratio
        return sum(t**i * g * g * t for i in range(1, self.layers))


def gen_layered_lb(p: LayeredLBParams, edge_budget: int = DEFAULT_EDGE_BUDGET) -> BaseGraph:
    """Build the layered graph; every vertex lies in at most two blocks."""
    if p.total_edges > edge_budget:
        raise MemoryError(f"layered instance has {p.total_edges} edges, over budget {edge_budget}")
    g, t, b = p.group_size, p.ratio, p.layers
    sizes = p.layer_sizes()
    offsets = np.zeros(b + 1, dtype=np.int64)
    np.cumsum(sizes, out=offsets[1:])
    chunks_u = []
    chunks_v = []
    for i in range(1, b):
        blocks = t**i
        gi = np.arange(g, dtype=np.int64)
        gt = np.arange(g * t, dtype=np.int64)
        base_lo = offsets[i - 1] + g * np.arange(blocks, dtype=np.int64)
        base_hi = offsets[i] + g * t * np.arange(blocks, dtype=np.int64)
        u = (base_lo[:, None, None] + gi[None, :, None] + 0 * gt[None, None, :]).ravel()
        v = (base_hi[:, None, None] + 0 * gi[None, :, None] + gt[None, None, :]).ravel()
        chunks_u.append(u)
        chunks_v.append(v)
    return BaseGraph(
        n=p.total_vertices,
        edges_u=np.concatenate(chunks_u),
        edges_v=np.concatenate(chunks_v),
    )


def layer_labels(p: LayeredLBParams) -> np.ndarray:
    """Layer index (1-based) of every vertex, for metadata emission."""
    out = np.empty(p.total_vertices, dtype=np.int64)
    pos = 0
    for i, size in enumerate(p.layer_sizes(), start=1):
        out[pos : pos + size] = i
        pos += size
    return out


def layered_params_for(n: int) -> LayeredLBParams:
    """Canonical coupling of the layered family for a target size:
    g ~ sqrt(n), t = lg(n)^3, and as many layers as fit in ~n vertices.
    Documentation helper; the experiments sweep (g, t, b) freely because the
    canonical coupling is far beyond desk scale."""
    g = max(2, math.isqrt(n))
    t = max(2, lg(n) ** 3)
    b = 2
    while LayeredLBParams(g, t, b + 1).total_vertices <= 4 * n:
        b += 1
    return LayeredLBParams(group_size=g, ratio=t, layers=b)
