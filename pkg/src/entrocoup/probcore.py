"""Probability vectors, entropy, sparse couplings and minimum-entropy coupling.

Distributions are plain 1-d ``numpy`` float64 arrays.  :func:`as_dist`
validates and (if needed) renormalizes a vector; everything else in the
package assumes its inputs went through it.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

#: Absolute tolerance on the sum of a probability vector.
SUM_TOL = 1e-9
#: Probability masses at or below this value are treated as zero.
PRUNE_TOL = 1e-15
#: Size cap (rows * cols) for the exhaustive exact-MEC oracle.
EXACT_MEC_CAP = 12


class DecodeError(ValueError):
    """An observed symbol has zero probability under the replayed model."""


class CorruptionError(RuntimeError):
    """Encoder state is inconsistent with the element being encoded."""


def as_dist(probs, *, renormalize: bool = True) -> np.ndarray:
    """Validate ``probs`` as a probability vector.

    Entries must lie in [0, 1] and sum to one within ``SUM_TOL``.  The
    returned array is a fresh float64 copy, rescaled to sum to one when
    ``renormalize`` is true.
    """
    p = np.array(probs, dtype=np.float64).ravel()
    if p.size == 0:
        raise ValueError("empty distribution")
    if not np.all(np.isfinite(p)):
        raise ValueError("distribution has non-finite entries")
    if p.min() < 0.0 or p.max() > 1.0 + SUM_TOL:
        raise ValueError(f"entries outside [0, 1]: min={p.min()}, max={p.max()}")
    s = p.sum()
    if abs(s - 1.0) > SUM_TOL:
        raise ValueError(f"distribution sums to {s!r}, not 1")
    if renormalize and s != 1.0:
        p /= s
    return p


def entropy(p) -> float:
    """Shannon entropy in bits, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=np.float64)
    nz = p[p > 0]
    return float(max(0.0, -np.sum(nz * np.log2(nz))))


def normalize(weights) -> np.ndarray:
    """Scale nonnegative ``weights`` to sum to one."""
    w = np.asarray(weights, dtype=np.float64)
    s = w.sum()
    if not s > 0:
        raise ValueError("cannot normalize a zero vector")
    return w / s


def sample_index(weights, rng: np.random.Generator) -> int:
    """Draw an index with probability proportional to ``weights``.

    Inverse-CDF over a sequential running sum, so interleaved zero weights
    do not change which index a given uniform draw selects.
    """
    cum = list(itertools.accumulate(float(w) for w in weights))
    if not cum or cum[-1] <= 0.0:
        raise ValueError("no positive weight to sample from")
    u = rng.random() * cum[-1]
    last = 0
    for k, (c, w) in enumerate(zip(cum, weights)):
        if w > 0:
            last = k
            if u < c:
                return k
    return last


@dataclass(frozen=True)
class SparseCoupling:
    """Sparse joint distribution over (row, column) index pairs.

    Only strictly positive entries are stored.
    """

    entries: Mapping[tuple[int, int], float]
    shape: tuple[int, int]
    _dense: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        r, c = self.shape
        for (i, j), v in self.entries.items():
            if not (0 <= i < r and 0 <= j < c):
                raise ValueError(f"entry {(i, j)} outside shape {self.shape}")
            if not v > 0:
                raise ValueError(f"non-positive entry {v} at {(i, j)}")

    @classmethod
    def from_dense(cls, table, tol: float = 0.0) -> "SparseCoupling":
        t = np.asarray(table, dtype=np.float64)
        entries = {(int(i), int(j)): float(t[i, j]) for i, j in zip(*np.nonzero(t > tol))}
        return cls(entries, t.shape)

    def to_dense(self) -> np.ndarray:
        if self._dense is None:
            out = np.zeros(self.shape)
            for (i, j), v in self.entries.items():
                out[i, j] = v
            object.__setattr__(self, "_dense", out)
        return self._dense.copy()

    def row_marginal(self) -> np.ndarray:
        return self.to_dense().sum(axis=1)

    def col_marginal(self) -> np.ndarray:
        return self.to_dense().sum(axis=0)

    def __len__(self) -> int:
        return len(self.entries)


def coupling_entropy(c: SparseCoupling) -> float:
    """Joint entropy (bits) of a coupling."""
    return entropy(np.fromiter(c.entries.values(), dtype=np.float64))


def greedy_mec(mu, nu) -> SparseCoupling:
    """Greedy approximate minimum-entropy coupling.

    Repeatedly matches the largest remaining mass of ``mu`` with the largest
    remaining mass of ``nu`` (highest index wins ties), placing the smaller of
    the two at their intersection.  The result is within one bit of the
    minimum-entropy coupling and has at most ``len(mu) + len(nu) - 1``
    entries.  Runs in O(N log N) with two heaps.

    Inputs are validated but not rescaled, so callers replaying a coupling
    get bit-identical entries for bit-identical inputs.
    """
    p = as_dist(mu, renormalize=False)
    q = as_dist(nu, renormalize=False)
    # max-heaps keyed (-mass, -index): largest mass first, highest index on ties
    hp = [(-float(v), -i) for i, v in enumerate(p) if v > 0]
    hq = [(-float(v), -j) for j, v in enumerate(q) if v > 0]
    heapq.heapify(hp)
    heapq.heapify(hq)
    entries: dict[tuple[int, int], float] = {}
    while hp and hq:
        a, i = hp[0]
        b, j = hq[0]
        a, b, i, j = -a, -b, -i, -j
        m = a if a < b else b
        if m <= PRUNE_TOL:
            break
        entries[(i, j)] = m
        heapq.heappop(hp)
        heapq.heappop(hq)
        if a <= b:
            rest = b - m
            if rest > PRUNE_TOL:
                heapq.heappush(hq, (-rest, -j))
        else:
            rest = a - m
            if rest > PRUNE_TOL:
                heapq.heappush(hp, (-rest, -i))
    return SparseCoupling(entries, (p.size, q.size))


def _vertex_from_tree(cells, mu, nu):
    """Solve a transportation-polytope vertex supported on a spanning tree.

    Peels leaves: a row or column with one unsolved cell fixes that cell.
    Returns None when the solution is infeasible (negative entry).
    """
    r_res = [float(v) for v in mu]
    c_res = [float(v) for v in nu]
    open_cells = set(cells)
    row_cells = {i: {c for c in open_cells if c[0] == i} for i in range(len(mu))}
    col_cells = {j: {c for c in open_cells if c[1] == j} for j in range(len(nu))}
    values = {}
    while open_cells:
        progress = False
        for i, cs in row_cells.items():
            if len(cs) == 1:
                (cell,) = cs
                v = r_res[i]
                values[cell] = v
                r_res[i] -= v
                c_res[cell[1]] -= v
                open_cells.discard(cell)
                cs.clear()
                col_cells[cell[1]].discard(cell)
                progress = True
        for j, cs in col_cells.items():
            if len(cs) == 1:
                (cell,) = cs
                v = c_res[j]
                values[cell] = v
                c_res[j] -= v
                r_res[cell[0]] -= v
                open_cells.discard(cell)
                cs.clear()
                row_cells[cell[0]].discard(cell)
                progress = True
        if not progress:
            return None
    if min(values.values()) < -1e-12:
        return None
    if max(map(abs, r_res)) > 1e-9 or max(map(abs, c_res)) > 1e-9:
        return None
    return values


def _is_spanning_tree(cells, r, c) -> bool:
    parent = list(range(r + c))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i, j in cells:
        a, b = find(i), find(r + j)
        if a == b:
            return False
        parent[a] = b
    return True


def exact_mec(mu, nu, *, cap: int = EXACT_MEC_CAP) -> SparseCoupling:
    """Exhaustive minimum-entropy coupling for tiny marginals.

    Entropy is concave, so its minimum over the transportation polytope is
    attained at a vertex.  Every vertex is the unique solution supported on
    some spanning tree of the complete bipartite row/column graph; all of
    those are enumerated.
    """
    mu = as_dist(mu)
    nu = as_dist(nu)
    r, c = mu.size, nu.size
    if r * c > cap:
        raise ValueError(f"exact MEC limited to rows*cols <= {cap}, got {r}x{c}")
    all_cells = [(i, j) for i in range(r) for j in range(c)]
    best, best_h = None, np.inf
    for cells in itertools.combinations(all_cells, r + c - 1):
        if not _is_spanning_tree(cells, r, c):
            continue
        vals = _vertex_from_tree(cells, mu, nu)
        if vals is None:
            continue
        kept = {k: v for k, v in vals.items() if v > PRUNE_TOL}
        h = entropy(list(kept.values()))
        if h < best_h - 1e-15:
            best, best_h = kept, h
    return SparseCoupling(best, (r, c))


def conditional_row(c: SparseCoupling, col: int) -> np.ndarray:
    """Distribution over rows given the column index (Bayes)."""
    colv = c.to_dense()[:, col]
    s = colv.sum()
    if not s > 0:
        raise ValueError(f"column {col} has zero probability")
    return colv / s


def conditional_col(c: SparseCoupling, row: int) -> np.ndarray:
    """Distribution over columns given the row index."""
    rowv = c.to_dense()[row, :]
    s = rowv.sum()
    if not s > 0:
        raise ValueError(f"row {row} has zero probability")
    return rowv / s
