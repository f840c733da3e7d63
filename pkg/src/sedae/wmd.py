"""Word Mover's Distance solved exactly with the transportation simplex."""

from collections import Counter, deque
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .corpus import RESERVED
from .errors import ContractViolation, NumericError

_TOL = 1e-12


@dataclass(frozen=True)
class NBowSignature:
    ids: tuple          # unique word ids, ascending
    masses: np.ndarray  # normalized counts, aligned with ids
    vectors: np.ndarray  # (k, d) L2-normalized embeddings

    def __eq__(self, other):
        return (isinstance(other, NBowSignature) and self.ids == other.ids
                and np.array_equal(self.masses, other.masses))

    def __hash__(self):
        return hash((self.ids, self.masses.tobytes()))


@dataclass(frozen=True)
class TransportPlan:
    flow: np.ndarray
    cost: np.ndarray
    objective: float


def normalize_rows(table):
    norms = np.linalg.norm(table, axis=1, keepdims=True)
    return table / np.where(norms > 0, norms, 1.0)


def signature(ids, unit_embeddings):
    """Normalized bag of words over non-reserved ids.

    ``unit_embeddings`` must already be row-normalized (see :func:`normalize_rows`).
    """
    counts = Counter(int(i) for i in ids if int(i) >= len(RESERVED))
    if not counts:
        raise ContractViolation("no in-vocabulary tokens to build a signature from")
    keys = tuple(sorted(counts))
    mass = np.array([counts[k] for k in keys], dtype=np.float64)
    return NBowSignature(keys, mass / mass.sum(), unit_embeddings[list(keys)])


def _northwest_corner(a, b):
    m, n = len(a), len(b)
    a = a.copy()
    b = b.copy()
    flow = np.zeros((m, n))
    basis = []
    i = j = 0
    while True:
        x = min(a[i], b[j])
        flow[i, j] = x
        basis.append((i, j))
        a[i] -= x
        b[j] -= x
        if i == m - 1 and j == n - 1:
            break
        if i == m - 1:
            j += 1
        elif j == n - 1:
            i += 1
        elif a[i] <= b[j]:
            i += 1
        else:
            j += 1
    return flow, basis


def _potentials(cost, basis, m, n):
    # basis cells form a spanning tree over row nodes 0..m-1 and column nodes m..m+n-1
    adj = [[] for _ in range(m + n)]
    for i, j in basis:
        adj[i].append(m + j)
        adj[m + j].append(i)
    u = np.full(m, np.nan)
    v = np.full(n, np.nan)
    u[0] = 0.0
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for other in adj[node]:
            if node < m:
                j = other - m
                if np.isnan(v[j]):
                    v[j] = cost[node, j] - u[node]
                    queue.append(other)
            else:
                i = other
                if np.isnan(u[i]):
                    u[i] = cost[i, node - m] - v[node - m]
                    queue.append(other)
    return u, v, adj


def _tree_path(adj, start, goal):
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        if node == goal:
            break
        for other in adj[node]:
            if other not in parent:
                parent[other] = node
                queue.append(other)
    path = [goal]
    while path[-1] != start:
        path.append(parent[path[-1]])
    return path[::-1]


def transport(a, b, cost, max_iter=None):
    """Exact balanced transportation problem ``min <T, cost>`` s.t. marginals ``a``, ``b``.

    Northwest-corner start, MODI pricing with Dantzig's rule, and cycle pivots
    along the basis tree. Degenerate (zero-flow) basic cells are kept so the
    basis always has ``m + n - 1`` cells.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    m, n = len(a), len(b)
    if cost.shape != (m, n):
        raise ContractViolation(f"cost {cost.shape} vs marginals ({m}, {n})")
    if abs(a.sum() - b.sum()) > 1e-9:
        raise ContractViolation("unbalanced marginals")
    flow, basis = _northwest_corner(a, b)
    basis_set = set(basis)
    max_iter = max_iter or 50 * (m + n) ** 2
    for _ in range(max_iter):
        u, v, adj = _potentials(cost, basis, m, n)
        reduced = cost - u[:, None] - v[None, :]
        for cell in basis_set:
            reduced[cell] = 0.0
        ei, ej = np.unravel_index(np.argmin(reduced), reduced.shape)
        if reduced[ei, ej] >= -_TOL * max(1.0, np.abs(cost).max()):
            obj = float(np.sum(flow * cost))
            return TransportPlan(flow, cost, obj)
        # path in the tree from row ei to column ej closes the cycle with the entering cell
        nodes = _tree_path(adj, int(ei), m + int(ej))
        cells = []
        for p, q in zip(nodes[:-1], nodes[1:]):
            cells.append((p, q - m) if p < m else (q, p - m))
        minus = cells[0::2]
        plus = cells[1::2]
        theta = min(flow[c] for c in minus)
        leave = next(c for c in minus if flow[c] == theta)
        for c in minus:
            flow[c] -= theta
        for c in plus:
            flow[c] += theta
        flow[ei, ej] += theta
        flow[leave] = 0.0
        basis.remove(leave)
        basis_set.discard(leave)
        basis.append((int(ei), int(ej)))
        basis_set.add((int(ei), int(ej)))
    raise NumericError("transportation simplex exceeded its iteration cap")


def wmd_plan(sig1, sig2):
    cost = cdist(sig1.vectors, sig2.vectors)
    return transport(sig1.masses, sig2.masses, cost)


def wmd(sig1, sig2):
    if sig1 == sig2:
        return 0.0
    return max(0.0, wmd_plan(sig1, sig2).objective)


def con_score(candidate_sig, source_sig):
    return -wmd(candidate_sig, source_sig)


def format_plan(plan, sig1, sig2, vocab):
    lines = []
    for i, j in zip(*np.nonzero(plan.flow > 0)):
        w1 = vocab.itos[sig1.ids[i]]
        w2 = vocab.itos[sig2.ids[j]]
        lines.append(f"{w1} → {w2} : {plan.flow[i, j]:.6f} × {plan.cost[i, j]:.6f}")
    lines.append(f"total : {plan.objective:.6f}")
    return "\n".join(lines)


class WmdScorer:
    """Con scores against a frozen embedding table, memoized per signature pair."""

    def __init__(self, embeddings):
        self.unit = normalize_rows(np.asarray(embeddings, dtype=np.float64))
        self._cache = {}

    def signature(self, ids):
        return signature(ids, self.unit)

    def distance(self, ids1, ids2):
        s1, s2 = self.signature(ids1), self.signature(ids2)
        key = (s1.ids, s1.masses.tobytes(), s2.ids, s2.masses.tobytes())
        d = self._cache.get(key)
        if d is None:
            d = self._cache[key] = wmd(s1, s2)
        return d

    def con(self, candidate_ids, source_ids):
        return -self.distance(candidate_ids, source_ids)
