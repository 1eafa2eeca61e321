"""Exact minimum-weight perfect matching.

The solver is Edmonds' primal-dual blossom algorithm in its dense O(n^3)
form, compiled with numba.  Weights are non-negative integers; the decoder
produces them by fixed-point scaling of log-likelihood ratios, so all
comparisons are exact.

A brute-force enumerator over all (n-1)!! perfect matchings is provided as an
independent oracle for testing.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numba
import numpy as np

__all__ = [
    "InfeasibleMatchingError",
    "MatchingProblem",
    "Matching",
    "min_weight_perfect_matching",
    "min_weight_perfect_matching_dense",
    "brute_force_matching",
    "dump_problem",
    "load_problem",
    "dump_matching",
    "load_matching",
]

BRUTE_FORCE_MAX_NODES = 14
NO_EDGE = -1


class InfeasibleMatchingError(ValueError):
    """Raised when the graph has no perfect matching."""

    def __init__(self, n_nodes: int, unmatched: list[int]):
        self.n_nodes = n_nodes
        self.unmatched = unmatched
        super().__init__(
            f"no perfect matching on {n_nodes} nodes; unmatched after solve: {unmatched[:8]}"
        )


@dataclass(frozen=True)
class MatchingProblem:
    """Undirected graph with non-negative integer edge weights.

    Parameters
    ----------
    n : int
        Number of nodes, labelled ``0..n-1``.
    edges : sequence of (u, v, w)
        At most one edge per unordered pair; ``w`` is an integer >= 0.
    """

    n: int
    edges: tuple[tuple[int, int, int], ...] = ()

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("node count must be non-negative")
        seen = set()
        clean = []
        for u, v, w in self.edges:
            u, v, w = int(u), int(v), int(w)
            if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
                raise ValueError(f"bad edge ({u}, {v})")
            if w < 0:
                raise ValueError(f"negative weight on edge ({u}, {v})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            clean.append((key[0], key[1], w))
        object.__setattr__(self, "edges", tuple(clean))

    @classmethod
    def from_dense(cls, weights: np.ndarray) -> "MatchingProblem":
        """Build from a symmetric matrix; negative entries mean "no edge"."""
        weights = np.asarray(weights)
        n = weights.shape[0]
        iu, ju = np.triu_indices(n, k=1)
        keep = weights[iu, ju] >= 0
        edges = tuple(
            (int(u), int(v), int(w))
            for u, v, w in zip(iu[keep], ju[keep], weights[iu, ju][keep])
        )
        return cls(n, edges)

    def dense(self) -> np.ndarray:
        mat = np.full((self.n, self.n), NO_EDGE, dtype=np.int64)
        for u, v, w in self.edges:
            mat[u, v] = mat[v, u] = w
        return mat


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[int, int], ...]
    total_weight: int = 0
    _partner: dict = field(default=None, repr=False, compare=False)

    def partner(self, node: int) -> int:
        if self._partner is None:
            lookup = {}
            for u, v in self.pairs:
                lookup[u] = v
                lookup[v] = u
            object.__setattr__(self, "_partner", lookup)
        return self._partner[node]


def _canonical(pairs, weights) -> Matching:
    pairs = tuple(sorted((min(u, v), max(u, v)) for u, v in pairs))
    total = sum(int(weights[u, v]) for u, v in pairs)
    return Matching(pairs, total)


# ---------------------------------------------------------------------------
# Blossom algorithm (maximum weight matching on a dense graph, 1-based nodes;
# entry 0 is the null vertex).  Blossoms occupy ids n+1 .. 2n.
# ---------------------------------------------------------------------------


@numba.njit(cache=True)
def _dist(lab, gw, u, v):
    return lab[u] + lab[v] - gw[u, v] * 2


@numba.njit(cache=True)
def _update_slack(u, x, lab, gu, gv, gw, slack):
    if slack[x] == 0:
        slack[x] = u
        return
    s = slack[x]
    if _dist(lab, gw, gu[u, x], gv[u, x]) < _dist(lab, gw, gu[s, x], gv[s, x]):
        slack[x] = u


@numba.njit(cache=True)
def _set_slack(x, n, lab, gu, gv, gw, slack, st, S):
    slack[x] = 0
    for u in range(1, n + 1):
        if gw[u, x] > 0 and st[u] != x and S[st[u]] == 0:
            _update_slack(u, x, lab, gu, gv, gw, slack)


@numba.njit(cache=True)
def _q_push(x, n, flower, flen, queue, qstate, stack):
    # pushes every original vertex inside (possibly nested) blossom x
    top = 0
    stack[top] = x
    top += 1
    while top > 0:
        top -= 1
        y = stack[top]
        if y <= n:
            if qstate[1] - qstate[0] >= queue.shape[0]:
                raise RuntimeError("blossom queue overflow")
            queue[qstate[1] % queue.shape[0]] = y
            qstate[1] += 1
        else:
            for i in range(flen[y] - 1, -1, -1):
                stack[top] = flower[y, i]
                top += 1


@numba.njit(cache=True)
def _set_st(x, b, n, flower, flen, st, stack):
    top = 0
    stack[top] = x
    top += 1
    while top > 0:
        top -= 1
        y = stack[top]
        st[y] = b
        if y > n:
            for i in range(flen[y]):
                stack[top] = flower[y, i]
                top += 1


@numba.njit(cache=True)
def _get_pr(b, xr, flower, flen):
    m = flen[b]
    pr = 0
    while flower[b, pr] != xr:
        pr += 1
    if pr % 2 == 1:
        # reverse flower[b][1:]
        lo = 1
        hi = m - 1
        while lo < hi:
            t = flower[b, lo]
            flower[b, lo] = flower[b, hi]
            flower[b, hi] = t
            lo += 1
            hi -= 1
        return m - pr
    return pr


@numba.njit(cache=True)
def _set_match(u0, v0, n, gu, gv, match, flower, flen, flower_from, pair_stack, tmp):
    top = 0
    pair_stack[top, 0] = u0
    pair_stack[top, 1] = v0
    top += 1
    while top > 0:
        top -= 1
        u = pair_stack[top, 0]
        v = pair_stack[top, 1]
        match[u] = gv[u, v]
        if u > n:
            xr = flower_from[u, gu[u, v]]
            pr = _get_pr(u, xr, flower, flen)
            for i in range(pr):
                pair_stack[top, 0] = flower[u, i]
                pair_stack[top, 1] = flower[u, i ^ 1]
                top += 1
            pair_stack[top, 0] = xr
            pair_stack[top, 1] = v
            top += 1
            m = flen[u]
            for i in range(m):
                tmp[i] = flower[u, (i + pr) % m]
            for i in range(m):
                flower[u, i] = tmp[i]


@numba.njit(cache=True)
def _augment(u, v, n, gu, gv, match, st, pa, flower, flen, flower_from, pair_stack, tmp):
    while True:
        xnv = st[match[u]]
        _set_match(u, v, n, gu, gv, match, flower, flen, flower_from, pair_stack, tmp)
        if xnv == 0:
            return
        _set_match(xnv, st[pa[xnv]], n, gu, gv, match, flower, flen, flower_from, pair_stack, tmp)
        u = st[pa[xnv]]
        v = xnv


@numba.njit(cache=True)
def _get_lca(u, v, st, match, pa, vis, tick):
    tick[0] += 1
    t = tick[0]
    while u != 0 or v != 0:
        if u != 0:
            if vis[u] == t:
                return u
            vis[u] = t
            u = st[match[u]]
            if u != 0:
                u = st[pa[u]]
        u, v = v, u
    return 0


@numba.njit(cache=True)
def _add_blossom(u, lca, v, n, nx, lab, gu, gv, gw, match, slack, st, pa, S,
                 flower, flen, flower_from, queue, qstate, stack):
    b = n + 1
    while b <= nx[0] and st[b] != 0:
        b += 1
    if b > nx[0]:
        nx[0] += 1
    lab[b] = 0
    S[b] = 0
    match[b] = match[lca]
    m = 0
    flower[b, m] = lca
    m += 1
    x = u
    while x != lca:
        flower[b, m] = x
        m += 1
        y = st[match[x]]
        flower[b, m] = y
        m += 1
        _q_push(y, n, flower, flen, queue, qstate, stack)
        x = st[pa[y]]
    lo = 1
    hi = m - 1
    while lo < hi:
        t = flower[b, lo]
        flower[b, lo] = flower[b, hi]
        flower[b, hi] = t
        lo += 1
        hi -= 1
    x = v
    while x != lca:
        flower[b, m] = x
        m += 1
        y = st[match[x]]
        flower[b, m] = y
        m += 1
        _q_push(y, n, flower, flen, queue, qstate, stack)
        x = st[pa[y]]
    flen[b] = m
    _set_st(b, b, n, flower, flen, st, stack)
    for x in range(1, nx[0] + 1):
        gw[b, x] = 0
        gw[x, b] = 0
    for x in range(1, n + 1):
        flower_from[b, x] = 0
    for i in range(m):
        xs = flower[b, i]
        for x in range(1, nx[0] + 1):
            if gw[b, x] == 0 or _dist(lab, gw, gu[xs, x], gv[xs, x]) < _dist(lab, gw, gu[b, x], gv[b, x]):
                gu[b, x] = gu[xs, x]
                gv[b, x] = gv[xs, x]
                gw[b, x] = gw[xs, x]
                gu[x, b] = gu[x, xs]
                gv[x, b] = gv[x, xs]
                gw[x, b] = gw[x, xs]
        for x in range(1, n + 1):
            if flower_from[xs, x] != 0:
                flower_from[b, x] = xs
    _set_slack(b, n, lab, gu, gv, gw, slack, st, S)


@numba.njit(cache=True)
def _expand_blossom(b, n, lab, gu, gv, gw, slack, st, pa, S,
                    flower, flen, flower_from, queue, qstate, stack):
    for i in range(flen[b]):
        _set_st(flower[b, i], flower[b, i], n, flower, flen, st, stack)
    xr = flower_from[b, gu[b, pa[b]]]
    pr = _get_pr(b, xr, flower, flen)
    for i in range(0, pr, 2):
        xs = flower[b, i]
        xns = flower[b, i + 1]
        pa[xs] = gu[xns, xs]
        S[xs] = 1
        S[xns] = 0
        slack[xs] = 0
        _set_slack(xns, n, lab, gu, gv, gw, slack, st, S)
        _q_push(xns, n, flower, flen, queue, qstate, stack)
    S[xr] = 1
    pa[xr] = pa[b]
    for i in range(pr + 1, flen[b]):
        xs = flower[b, i]
        S[xs] = -1
        _set_slack(xs, n, lab, gu, gv, gw, slack, st, S)
    st[b] = 0


@numba.njit(cache=True)
def _on_found_edge(eu, ev, n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, tick,
                   flower, flen, flower_from, queue, qstate, stack, pair_stack, tmp):
    u = st[eu]
    v = st[ev]
    if S[v] == -1:
        pa[v] = eu
        S[v] = 1
        nu = st[match[v]]
        slack[v] = 0
        slack[nu] = 0
        S[nu] = 0
        _q_push(nu, n, flower, flen, queue, qstate, stack)
    elif S[v] == 0:
        lca = _get_lca(u, v, st, match, pa, vis, tick)
        if lca == 0:
            _augment(u, v, n, gu, gv, match, st, pa, flower, flen, flower_from, pair_stack, tmp)
            _augment(v, u, n, gu, gv, match, st, pa, flower, flen, flower_from, pair_stack, tmp)
            return True
        _add_blossom(u, lca, v, n, nx, lab, gu, gv, gw, match, slack, st, pa, S,
                     flower, flen, flower_from, queue, qstate, stack)
    return False


@numba.njit(cache=True)
def _stage(n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, tick,
           flower, flen, flower_from, queue, qstate, stack, pair_stack, tmp):
    """One augmentation stage; returns False when no augmenting path improves."""
    INF = np.int64(1) << 62
    for x in range(1, nx[0] + 1):
        S[x] = -1
        slack[x] = 0
    qstate[0] = 0
    qstate[1] = 0
    for x in range(1, nx[0] + 1):
        if st[x] == x and match[x] == 0:
            pa[x] = 0
            S[x] = 0
            _q_push(x, n, flower, flen, queue, qstate, stack)
    if qstate[1] == 0:
        return False
    while True:
        while qstate[0] < qstate[1]:
            u = queue[qstate[0] % queue.shape[0]]
            qstate[0] += 1
            if S[st[u]] == 1:
                continue
            for v in range(1, n + 1):
                if gw[u, v] > 0 and st[u] != st[v]:
                    if _dist(lab, gw, gu[u, v], gv[u, v]) == 0:
                        if _on_found_edge(gu[u, v], gv[u, v], n, nx, lab, gu, gv, gw, match, slack,
                                          st, pa, S, vis, tick, flower, flen, flower_from,
                                          queue, qstate, stack, pair_stack, tmp):
                            return True
                    else:
                        _update_slack(u, st[v], lab, gu, gv, gw, slack)
        d = INF
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1:
                half = lab[b] // 2
                if half < d:
                    d = half
        for x in range(1, nx[0] + 1):
            if st[x] == x and slack[x] != 0:
                s = slack[x]
                dd = _dist(lab, gw, gu[s, x], gv[s, x])
                if S[x] == -1:
                    if dd < d:
                        d = dd
                elif S[x] == 0:
                    if dd // 2 < d:
                        d = dd // 2
        for u in range(1, n + 1):
            if S[st[u]] == 0:
                if lab[u] <= d:
                    return False
                lab[u] -= d
            elif S[st[u]] == 1:
                lab[u] += d
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b:
                if S[st[b]] == 0:
                    lab[b] += d * 2
                elif S[st[b]] == 1:
                    lab[b] -= d * 2
        qstate[0] = 0
        qstate[1] = 0
        for x in range(1, nx[0] + 1):
            s = slack[x]
            if st[x] == x and s != 0 and st[s] != x and _dist(lab, gw, gu[s, x], gv[s, x]) == 0:
                if _on_found_edge(gu[s, x], gv[s, x], n, nx, lab, gu, gv, gw, match, slack,
                                  st, pa, S, vis, tick, flower, flen, flower_from,
                                  queue, qstate, stack, pair_stack, tmp):
                    return True
        for b in range(n + 1, nx[0] + 1):
            if st[b] == b and S[b] == 1 and lab[b] == 0:
                _expand_blossom(b, n, lab, gu, gv, gw, slack, st, pa, S,
                                flower, flen, flower_from, queue, qstate, stack)


@numba.njit(cache=True)
def _max_weight_matching(w):
    """Maximum weight matching; ``w[i, j] > 0`` are edges (0-based input).

    Returns ``mate`` with ``mate[i] = j`` or -1.
    """
    n = w.shape[0]
    m = 2 * n + 1
    gu = np.zeros((m, m), dtype=np.int64)
    gv = np.zeros((m, m), dtype=np.int64)
    gw = np.zeros((m, m), dtype=np.int64)
    for u in range(1, n + 1):
        for v in range(1, n + 1):
            gu[u, v] = u
            gv[u, v] = v
            gw[u, v] = w[u - 1, v - 1] if w[u - 1, v - 1] > 0 else 0
    lab = np.zeros(m, dtype=np.int64)
    match = np.zeros(m, dtype=np.int64)
    slack = np.zeros(m, dtype=np.int64)
    st = np.zeros(m, dtype=np.int64)
    pa = np.zeros(m, dtype=np.int64)
    S = np.zeros(m, dtype=np.int64)
    vis = np.zeros(m, dtype=np.int64)
    tick = np.zeros(1, dtype=np.int64)
    flower = np.zeros((m, m), dtype=np.int64)
    flen = np.zeros(m, dtype=np.int64)
    flower_from = np.zeros((m, n + 1), dtype=np.int64)
    queue = np.zeros(4 * m + 16, dtype=np.int64)
    qstate = np.zeros(2, dtype=np.int64)
    stack = np.zeros(4 * m + 16, dtype=np.int64)
    pair_stack = np.zeros((4 * m + 16, 2), dtype=np.int64)
    tmp = np.zeros(m, dtype=np.int64)
    nx = np.zeros(1, dtype=np.int64)
    nx[0] = n
    for u in range(0, n + 1):
        st[u] = u
    w_max = 0
    for u in range(1, n + 1):
        flower_from[u, u] = u
        for v in range(1, n + 1):
            if gw[u, v] > w_max:
                w_max = gw[u, v]
    for u in range(1, n + 1):
        lab[u] = w_max
    while _stage(n, nx, lab, gu, gv, gw, match, slack, st, pa, S, vis, tick,
                 flower, flen, flower_from, queue, qstate, stack, pair_stack, tmp):
        pass
    mate = np.full(n, -1, dtype=np.int64)
    for u in range(1, n + 1):
        if match[u] != 0:
            mate[u - 1] = match[u] - 1
    return mate


def min_weight_perfect_matching_dense(weights: np.ndarray) -> Matching:
    """Minimum-weight perfect matching of a dense integer weight matrix.

    ``weights[i, j] < 0`` marks a missing edge.  Raises
    :class:`InfeasibleMatchingError` if no perfect matching exists.
    """
    weights = np.asarray(weights, dtype=np.int64)
    n = weights.shape[0]
    if n == 0:
        return Matching((), 0)
    if n % 2:
        raise InfeasibleMatchingError(n, list(range(n)))
    present = weights >= 0
    np.fill_diagonal(present, False)
    w_max = int(weights[present].max()) if present.any() else 0
    # A perfect matching outweighs every smaller one once
    # big > (n/2) * w_max; all transformed weights stay >= 1.
    big = (n // 2) * w_max + 1
    if big * (n + 2) > np.iinfo(np.int64).max // 8:
        raise OverflowError("edge weights too large for exact integer matching")
    # doubled so that every dual stays integral under halving
    transformed = np.where(present, 2 * (big - weights), 0).astype(np.int64)
    mate = _max_weight_matching(transformed)
    unmatched = [int(i) for i in np.flatnonzero(mate < 0)]
    if unmatched:
        raise InfeasibleMatchingError(n, unmatched)
    pairs = [(i, int(mate[i])) for i in range(n) if i < mate[i]]
    return _canonical(pairs, weights)


def _lexicographic_refine(weights: np.ndarray, total: int) -> Matching:
    # Fix partners greedily: smallest open node, smallest partner that still
    # admits a completion of optimal weight.
    n = weights.shape[0]
    open_nodes = list(range(n))
    pairs = []
    remaining = total
    while open_nodes:
        u = open_nodes[0]
        for v in open_nodes[1:]:
            w_uv = int(weights[u, v])
            if w_uv < 0 or w_uv > remaining:
                continue
            rest = [x for x in open_nodes if x != u and x != v]
            try:
                sub = min_weight_perfect_matching_dense(weights[np.ix_(rest, rest)])
            except InfeasibleMatchingError:
                continue
            if w_uv + sub.total_weight == remaining:
                pairs.append((u, v))
                remaining -= w_uv
                open_nodes = rest
                break
        else:  # pragma: no cover - the optimum always extends
            raise RuntimeError("lexicographic refinement lost the optimum")
    return Matching(tuple(pairs), total)


def min_weight_perfect_matching(problem: MatchingProblem, lexicographic: bool = False) -> Matching:
    """Exact minimum-weight perfect matching (Edmonds' blossom algorithm).

    The plain solver is deterministic but, among several optimal matchings,
    returns whichever the search reaches first.  ``lexicographic=True``
    returns the optimum with the smallest sorted pair list instead (the same
    tie-break as :func:`brute_force_matching`) at the cost of O(n^2) extra
    solves.
    """
    dense = problem.dense()
    best = min_weight_perfect_matching_dense(dense)
    if lexicographic and problem.n:
        return _lexicographic_refine(dense, best.total_weight)
    return best


def brute_force_matching(problem: MatchingProblem) -> Matching:
    """Exhaustive minimum over every perfect matching.

    Among optimal matchings the lexicographically smallest sorted pair list is
    returned.  Limited to ``n <= 14`` (135135 matchings).
    """
    n = problem.n
    if n > BRUTE_FORCE_MAX_NODES:
        raise ValueError(f"brute force limited to {BRUTE_FORCE_MAX_NODES} nodes, got {n}")
    if n % 2:
        raise InfeasibleMatchingError(n, list(range(n)))
    w = problem.dense().tolist()
    best_weight = None
    best_pairs = None
    pairs: list[tuple[int, int]] = []
    used = [False] * n

    def recurse(acc):
        nonlocal best_weight, best_pairs
        if best_weight is not None and acc >= best_weight:
            # equal weight found later is lexicographically larger
            return
        try:
            first = used.index(False)
        except ValueError:
            if best_weight is None or acc < best_weight:
                best_weight, best_pairs = acc, list(pairs)
            return
        used[first] = True
        for j in range(first + 1, n):
            if not used[j] and w[first][j] >= 0:
                used[j] = True
                pairs.append((first, j))
                recurse(acc + w[first][j])
                pairs.pop()
                used[j] = False
        used[first] = False

    recurse(0)
    if best_pairs is None:
        raise InfeasibleMatchingError(n, list(range(n)))
    return Matching(tuple(best_pairs), int(best_weight))


# ---------------------------------------------------------------------------
# Line-based text format:
#   problem:  "<n> <m>" then m lines "u v w"
#   matching: "<k> <total_weight>" then k lines "u v"
# ---------------------------------------------------------------------------


def dump_problem(problem: MatchingProblem) -> str:
    out = io.StringIO()
    out.write(f"{problem.n} {len(problem.edges)}\n")
    for u, v, w in problem.edges:
        out.write(f"{u} {v} {w}\n")
    return out.getvalue()


def load_problem(text: str) -> MatchingProblem:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    n, m = int(lines[0][0]), int(lines[0][1])
    if len(lines) - 1 != m:
        raise ValueError(f"expected {m} edge lines, found {len(lines) - 1}")
    return MatchingProblem(n, tuple((int(a), int(b), int(c)) for a, b, c in lines[1:]))


def dump_matching(matching: Matching) -> str:
    body = "".join(f"{u} {v}\n" for u, v in matching.pairs)
    return f"{len(matching.pairs)} {matching.total_weight}\n{body}"


def load_matching(text: str) -> Matching:
    lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
    k, total = int(lines[0][0]), int(lines[0][1])
    pairs = tuple((int(a), int(b)) for a, b in lines[1 : 1 + k])
    return Matching(pairs, total)
