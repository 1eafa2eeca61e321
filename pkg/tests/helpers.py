"""Small exact oracles shared by the tests."""

from __future__ import annotations

from collections import deque

import numpy as np


def gf2_rank(m: np.ndarray) -> int:
    m = (np.asarray(m) % 2).astype(np.uint8).copy()
    rank = 0
    rows, cols = m.shape
    for c in range(cols):
        piv = np.flatnonzero(m[rank:, c])
        if len(piv) == 0:
            continue
        r = rank + piv[0]
        m[[rank, r]] = m[[r, rank]]
        below = np.flatnonzero(m[:, c])
        below = below[below != rank]
        m[below] ^= m[rank]
        rank += 1
        if rank == rows:
            break
    return rank


def gf2_solvable(a: np.ndarray, b: np.ndarray) -> bool:
    """Whether ``a x = b`` has a solution over GF(2)."""
    return gf2_rank(a) == gf2_rank(np.column_stack([a, b]))


def min_nontrivial_cycle(code, dual: bool = False) -> int:
    """Shortest nontrivial (relative) cycle by BFS over (vertex, cut parity)
    states.  The primal graph has sites as vertices; the dual graph has
    plaquettes.  Planar codes get one virtual vertex per open side pair
    (rough for primal, smooth for dual)."""
    from surfacelab.homology import cut_masks

    lat = code.lattice
    n_links = lat.n_cells(1)
    cuts = cut_masks(lat, 1, dual=dual)
    ends = lat.cofaces(1) if dual else lat.faces(1)
    n_v = lat.n_cells(2) if dual else lat.n_cells(0)
    virtual = n_v
    adj = [[] for _ in range(n_v + 1)]
    for link in range(n_links):
        a, b = (int(x) for x in ends[link])
        a = virtual if a < 0 else a
        b = virtual if b < 0 else b
        bits = sum(int(c[link]) << k for k, c in enumerate(cuts))
        adj[a].append((b, bits))
        adj[b].append((a, bits))
    best = None
    starts = [virtual] if not lat.periodic else range(n_v)
    for s in starts:
        dist = {(s, 0): 0}
        dq = deque([(s, 0)])
        while dq:
            v, w = dq.popleft()
            d = dist[(v, w)]
            if best is not None and d >= best:
                break
            for u, bits in adj[v]:
                st = (u, w ^ bits)
                if st not in dist:
                    dist[st] = d + 1
                    dq.append(st)
        for w in range(1, 1 << len(cuts)):
            if (s, w) in dist:
                best = dist[(s, w)] if best is None else min(best, dist[(s, w)])
    return best
