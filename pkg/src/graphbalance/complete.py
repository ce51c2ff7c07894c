"""Implicit complete graphs.

K_n at the harness's largest sizes has ~n^2/2 edges and can never be
materialized, but everything the pipeline needs exists in closed form:
rho*(K_n) = (n-1)/2 exactly, a round-robin tournament orients it with
maximum in-degree ceil((n-1)/2), and the bipartized companion decomposes
lazily because the sink capacities of every round dwarf any right degree,
so each left vertex just sheds its excess onto its first residual edges in
a fixed canonical order. Edge indices are lexicographic over pairs (u < v)
and decode arithmetically.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .graphcore import floor_frac, lg
from .offline import Bipartization, DensityCertificate


class CompleteGraph:
    """K_n with edges indexed lexicographically; nothing is materialized."""

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("complete graph needs n >= 2")
        self.n = n
        self.m = n * (n - 1) // 2
        self.n_left = None

    @property
    def is_bipartite(self) -> bool:
        return False

    def degrees(self) -> np.ndarray:
        return np.full(self.n, self.n - 1, dtype=np.int64)

    def endpoints(self, idx) -> tuple[np.ndarray, np.ndarray]:
        k = np.asarray(idx, dtype=np.int64)
        n = self.n
        # invert the triangular index: u is the largest value with
        # offset(u) = u*(2n-u-1)/2 <= k; float start, exact fix-up
        u = np.floor((2 * n - 1 - np.sqrt((2.0 * n - 1) ** 2 - 8.0 * k)) / 2).astype(np.int64)
        np.clip(u, 0, n - 2, out=u)
        for _ in range(4):
            off = u * (2 * n - u - 1) // 2
            over = off > k
            under = (u + 1) * (2 * n - u - 2) // 2 <= k
            if not (over.any() or under.any()):
                break
            u = u - over.astype(np.int64) + (under & (u < n - 2)).astype(np.int64)
        off = u * (2 * n - u - 1) // 2
        v = k - off + u + 1
        return u, v

    def edge(self, i: int) -> tuple[int, int]:
        u, v = self.endpoints(np.array([i]))
        return int(u[0]), int(v[0])

    def edge_index(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        return u * (2 * self.n - u - 1) // 2 + v - u - 1

    def hash_token(self) -> str:
        return f"complete:{self.n}".ljust(16, "0")[:16]

    def density_certificate(self) -> DensityCertificate:
        # every induced K_k has density (k-1)/2, maximized by the whole graph
        return DensityCertificate(
            value=Fraction(self.n - 1, 2),
            witness=np.arange(self.n, dtype=np.int64),
            exact=True,
        )

    # round-robin tournament: circle rule on n (odd) or n-1 plus a hub (even);
    # every in-degree is ceil((n-1)/2) or less, matching ceil(rho*)
    def orient_heads(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        n = self.n
        if n % 2 == 1:
            d = (v - u) % n
            return np.where(d <= (n - 1) // 2, v, u)
        c = n - 1
        hub = v == c
        hub_head = np.where(u % 2 == 0, c, u)
        d = np.where(hub, 0, (v - u) % c)
        circle_head = np.where(d <= (c - 1) // 2, v, u)
        return np.where(hub, hub_head, circle_head).astype(np.int64)

    def in_degree(self, w: np.ndarray) -> np.ndarray:
        n = self.n
        if n % 2 == 1:
            return np.full_like(w, (n - 1) // 2)
        base = np.full_like(w, n // 2 - 1)
        base = base + (w % 2 == 1)  # odd circle vertices receive the hub edge
        return np.where(w == n - 1, n // 2, base)

    def in_rank(self, w: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Rank of tail x among head w's in-neighbors, ascending by index.

        Circle in-neighbors of w are {(w-k) mod c : k=1..K}: a low block
        [max(w-K,0), w-1] followed, when w < K, by a wrapped high block
        [c-(K-w), c-1]; the hub tail (even n) sorts last.
        """
        n = self.n
        if n % 2 == 1:
            k = (n - 1) // 2
            return np.where(x < w, x - np.maximum(w - k, 0), x - (n - k)).astype(np.int64)
        c = n - 1
        k = (c - 1) // 2
        circ = np.where(x < w, x - np.maximum(w - k, 0), x - (c - k))
        rank = np.where(x == c, k, circ)  # hub edge ranks after all circle tails
        return np.where(w == c, x // 2, rank).astype(np.int64)

    def bipartized(self) -> Bipartization:
        return Bipartization(graph=BipartizedCompleteGraph(self), base=self, orientation=None)


class BipartizedCompleteGraph:
    """The orientation split of an implicit K_n: u_L = u, u_R = n + u."""

    def __init__(self, base: CompleteGraph):
        self.base = base
        self.n = 2 * base.n
        self.m = base.m
        self.n_left = base.n

    @property
    def is_bipartite(self) -> bool:
        return True

    def degrees(self) -> np.ndarray:
        ids = np.arange(self.base.n, dtype=np.int64)
        indeg = self.base.in_degree(ids)
        return np.concatenate([indeg, (self.base.n - 1) - indeg])

    def endpoints(self, idx) -> tuple[np.ndarray, np.ndarray]:
        u, v = self.base.endpoints(idx)
        heads = self.base.orient_heads(u, v)
        tails = u + v - heads
        return heads, self.base.n + tails

    def edge(self, i: int):
        u, v = self.endpoints(np.array([i]))
        return int(u[0]), int(v[0])

    def hash_token(self) -> str:
        return f"bipcomp:{self.base.n}".ljust(16, "0")[:16]

    def density_certificate(self) -> DensityCertificate:
        # rho(H) = m/2n = (n-1)/4 and bipartite rho* <= max_degree/2 <= n/4,
        # so this lower witness is within 1/4 of the true maximum
        return DensityCertificate(
            value=Fraction(self.base.n - 1, 4),
            witness=np.arange(self.n, dtype=np.int64),
            exact=False,
        )

    def chunked_decomposition(self, s: Fraction = Fraction(1)) -> "ChunkedDecomposition":
        return ChunkedDecomposition(self, s)


class ChunkedDecomposition:
    """Lazy per-edge class lookup replaying the decomposition rounds.

    Every round's sink capacity exceeds the maximum right degree of the
    split complete graph (verified at construction), so a maximum flow is
    obtained by letting each left vertex shed its excess onto its first
    residual in-edges in canonical (ascending tail) order. Class membership
    is then a pure function of (in-degree, in-rank).
    """

    certified = False

    def __init__(self, graph: BipartizedCompleteGraph, s: Fraction = Fraction(1)):
        self.graph = graph
        self.s = Fraction(s)
        if self.s < 1:
            raise ValueError("s must be >= 1")
        self.rho_star = graph.density_certificate().value
        self.log_n = lg(graph.n)
        self.exponent = math.ceil(2 * self.s)
        nb = graph.base.n
        if nb % 2 == 1:
            deltas = [(nb - 1) // 2]
            max_right = (nb - 1) // 2
        else:
            deltas = sorted({nb // 2 - 1, nb // 2})
            max_right = nb // 2
        self.f: list[int] = []
        self.residual_caps: list[int] = []
        self.sink_caps: list[int] = []
        bounds: dict[int, list[int]] = {d: [] for d in deltas}
        deg = {d: d for d in deltas}
        cum = {d: 0 for d in deltas}
        i = 0
        while True:
            i += 1
            f_i = 1 << (1 << i)
            cap_l = floor_frac(16 * self.rho_star / (f_i * f_i))
            cap_r = floor_frac(16 * self.rho_star * Fraction(f_i * self.log_n) ** self.exponent)
            if cap_r < max_right:
                raise AssertionError("sink capacity binds; implicit shortcut invalid")
            self.f.append(f_i)
            self.residual_caps.append(cap_l)
            self.sink_caps.append(cap_r)
            excess = {d: max(deg[d] - cap_l, 0) for d in deltas}
            if all(e == 0 for e in excess.values()):
                for d in deltas:
                    cum[d] = d  # flush the residual into this class
                    bounds[d].append(cum[d])
                break
            for d in deltas:
                cum[d] += excess[d]
                bounds[d].append(cum[d])
                deg[d] = min(deg[d], cap_l)
            if all(v == 0 for v in deg.values()):
                break
            if 16 * self.rho_star < f_i * f_i:
                for d in deltas:
                    cum[d] = d
                    bounds[d][-1] = cum[d]
                break
        self.h = i
        self._bounds = {d: np.asarray(b, dtype=np.int64) for d, b in bounds.items()}
        self.class_left_deg = [0] * self.h
        self.class_right_deg = [0] * self.h
        for d in deltas:
            prev = 0
            for ci, b in enumerate(bounds[d]):
                self.class_left_deg[ci] = max(self.class_left_deg[ci], b - prev)
                prev = b
        self.flushed = 0

    def class_of(self, idx) -> np.ndarray:
        g = self.graph
        u, v = g.base.endpoints(np.asarray(idx, dtype=np.int64))
        heads = g.base.orient_heads(u, v)
        tails = u + v - heads
        rank = g.base.in_rank(heads, tails)
        delta = g.base.in_degree(heads)
        out = np.empty(rank.size, dtype=np.int16)
        for d, b in self._bounds.items():
            sel = delta == d
            if sel.any():
                cls = np.searchsorted(b, rank[sel], side="right") + 1
                out[sel] = np.minimum(cls, self.h).astype(np.int16)
        return out

    def left_cap(self, i: int) -> Fraction:
        return 16 * self.rho_star / self.f[i - 1]

    def right_cap(self, i: int) -> Fraction:
        return 16 * self.rho_star * Fraction(self.f[i - 1] * self.log_n) ** self.exponent
