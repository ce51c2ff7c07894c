"""Exact integer max s-t flow via Dinic's blocking-flow algorithm.

The network lives in flat int64 arrays (paired forward/reverse arcs at
indices 2k and 2k+1), with the hot loops JIT-compiled. Capacities must fit
int64 after any caller-side scaling; callers clamp "infinite" capacities to
the total achievable flow.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _build_adjacency(n_nodes, tails):
    first = np.full(n_nodes, -1, dtype=np.int64)
    nxt = np.full(tails.size, -1, dtype=np.int64)
    for j in range(tails.size):
        t = tails[j]
        nxt[j] = first[t]
        first[t] = j
    return first, nxt


@njit(cache=True)
def _dinic(first, nxt, to, cap, s, t):
    n = first.size
    level = np.empty(n, dtype=np.int64)
    cur = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    path_e = np.empty(n + 1, dtype=np.int64)
    path_v = np.empty(n + 2, dtype=np.int64)
    total = 0
    while True:
        for i in range(n):
            level[i] = -1
        level[s] = 0
        queue[0] = s
        qh, qt = 0, 1
        while qh < qt:
            u = queue[qh]
            qh += 1
            e = first[u]
            while e != -1:
                v = to[e]
                if cap[e] > 0 and level[v] < 0:
                    level[v] = level[u] + 1
                    queue[qt] = v
                    qt += 1
                e = nxt[e]
        if level[t] < 0:
            return total
        for i in range(n):
            cur[i] = first[i]
        plen = 0
        path_v[0] = s
        while True:
            u = path_v[plen]
            if u == t:
                aug = np.int64(1) << 62
                for k in range(plen):
                    r = cap[path_e[k]]
                    if r < aug:
                        aug = r
                for k in range(plen):
                    e = path_e[k]
                    cap[e] -= aug
                    cap[e ^ 1] += aug
                total += aug
                k2 = 0
                while k2 < plen and cap[path_e[k2]] > 0:
                    k2 += 1
                plen = k2
                continue
            e = cur[u]
            while e != -1:
                if cap[e] > 0 and level[to[e]] == level[u] + 1:
                    break
                e = nxt[e]
            cur[u] = e
            if e == -1:
                level[u] = -1  # dead end; prune from the layered graph
                if plen == 0:
                    break
                plen -= 1
            else:
                path_e[plen] = e
                path_v[plen + 1] = to[e]
                plen += 1


@njit(cache=True)
def _residual_reachable(first, nxt, to, cap, s):
    n = first.size
    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    stack[top] = s
    top += 1
    seen[s] = True
    while top:
        top -= 1
        u = stack[top]
        e = first[u]
        while e != -1:
            v = to[e]
            if cap[e] > 0 and not seen[v]:
                seen[v] = True
                stack[top] = v
                top += 1
            e = nxt[e]
    return seen


class FlowNetwork:
    """A directed flow network over nodes 0..n_nodes-1."""

    def __init__(self, n_nodes: int, tail: np.ndarray, head: np.ndarray, cap: np.ndarray):
        tail = np.asarray(tail, dtype=np.int64)
        head = np.asarray(head, dtype=np.int64)
        cap = np.asarray(cap, dtype=np.int64)
        if not (tail.size == head.size == cap.size):
            raise ValueError("arc arrays must have equal length")
        if cap.size and cap.min() < 0:
            raise ValueError("capacities must be non-negative")
        m = tail.size
        self.n_nodes = n_nodes
        self.n_arcs = m
        self.to = np.empty(2 * m, dtype=np.int64)
        self.to[0::2] = head
        self.to[1::2] = tail
        tails2 = np.empty(2 * m, dtype=np.int64)
        tails2[0::2] = tail
        tails2[1::2] = head
        self.cap = np.zeros(2 * m, dtype=np.int64)
        self.cap[0::2] = cap
        self._orig_cap = cap.copy()
        self.first, self.nxt = _build_adjacency(n_nodes, tails2)

    def max_flow(self, s: int, t: int) -> int:
        """Run Dinic to completion; residual capacities stay in self.cap."""
        return int(_dinic(self.first, self.nxt, self.to, self.cap, s, t))

    def flow_on(self, arc: int) -> int:
        """Flow carried by the arc-th added arc."""
        return int(self._orig_cap[arc] - self.cap[2 * arc])

    def flows(self) -> np.ndarray:
        return self._orig_cap - self.cap[0::2]

    def min_cut_source_side(self, s: int) -> np.ndarray:
        """Bool mask of nodes reachable from s in the residual network."""
        return _residual_reachable(self.first, self.nxt, self.to, self.cap, s)
