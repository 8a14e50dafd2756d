"""Prefix-tree partition set: IMEC for arbitrary autoregressive messages.

Every prefix ``v`` of a message defines a partition with one block per
child (messages extending ``v + (s,)``), one block for messages that do not
extend ``v``, and one block for the message equal to ``v``.  Block order is
``[children in symbol order..., NOT_EXTEND, EQUAL]``.

Nodes are created lazily.  Each stores its block masses as of the last time
it was touched; a stale node adjacent to an up-to-date node is refreshed by
setting the block facing that neighbour from the neighbour's masses and
rescaling its other blocks proportionally.  Complementary masses are
computed as sums of the neighbour's other blocks rather than ``1 - p`` so
that near-certain prefixes do not lose precision.

The maximum-entropy partition is found by a breadth-first search from the
current working node that skips every subtree whose entropy is provably
below the best found, using :func:`entropy_upper_bound`.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .partitions import PartitionSet, _bayes
from .probcore import entropy

# Relative tie tolerance when comparing partition entropies.
_TIE = 1e-12


def entropy_upper_bound(q: float, kappa: int) -> float:
    """Largest entropy (bits) of a ``kappa``-outcome distribution whose
    largest mass is at least ``q``.

    The remaining ``1 - q`` is spread evenly over the other ``kappa - 1``
    outcomes.  Valid for ``1/kappa <= q <= 1``; nonincreasing there.
    """
    if kappa < 2:
        raise ValueError("kappa must be at least 2")
    if q < 1.0 / kappa - _TIE or q > 1.0 + _TIE:
        raise ValueError(f"bound needs 1/kappa <= q <= 1, got q={q}, kappa={kappa}")
    return _bound(q, kappa)


def _bound(q: float, kappa: int) -> float:
    q = min(max(q, 1.0 / kappa), 1.0)
    if q >= 1.0:
        return 0.0
    r = 1.0 - q
    return -q * math.log2(q) - r * math.log2(r / (kappa - 1))


class PrefixNode:
    __slots__ = ("prefix", "masses", "stamp")

    def __init__(self, prefix: tuple, masses: np.ndarray, stamp: int):
        self.prefix = prefix
        self.masses = masses
        self.stamp = stamp

    @property
    def depth(self) -> int:
        return len(self.prefix)

    def __repr__(self):
        return f"PrefixNode({self.prefix}, stamp={self.stamp})"


@dataclass
class SearchStats:
    touched: int
    materialized: int
    selected: tuple
    pruned: list  # (from_prefix, neighbour_prefix, bound) when recording


class PrefixTreePartitionSet(PartitionSet):
    """Prefix-tree partition set over messages drawn from ``model``.

    ``model`` provides ``alphabet_size``, ``eos`` (symbol index or None) and
    ``next_dist(prefix)``.  Messages are tuples of non-EOS symbols of length
    at most ``max_len``; a message reaching ``max_len`` ends there.  Without
    an EOS symbol every message has length exactly ``max_len``.
    """

    def __init__(self, model, max_len: int | None = None, *, kappa: int | None = None,
                 record_pruning: bool = False):
        self.model = model
        self.max_len = int(max_len if max_len is not None else model.max_len)
        self.eos = getattr(model, "eos", None)
        self.child_symbols = [s for s in range(model.alphabet_size) if s != self.eos]
        self._child_pos = {s: k for k, s in enumerate(self.child_symbols)}
        self.n_blocks = len(self.child_symbols) + 2
        self.NOT_EXTEND = self.n_blocks - 2
        self.EQUAL = self.n_blocks - 1
        self.kappa = int(kappa) if kappa is not None else self.n_blocks
        if self.kappa < self.n_blocks:
            raise ValueError("kappa must bound the number of blocks per partition")
        self.record_pruning = record_pruning
        self._clock = 0
        self._nodes: dict[tuple, PrefixNode] = {}
        root = PrefixNode((), self._inside_prior(()), 0)
        self._nodes[()] = root
        self.working: tuple = ()
        self.search_log: list[SearchStats] = []

    # -- node state ---------------------------------------------------

    def _inside_prior(self, prefix: tuple) -> np.ndarray:
        """Block masses of a fresh node, conditional on extending ``prefix``."""
        w = np.zeros(self.n_blocks)
        if len(prefix) >= self.max_len:
            w[self.EQUAL] = 1.0
            return w
        d = np.asarray(self.model.next_dist(prefix), dtype=np.float64)
        w[: len(self.child_symbols)] = d[self.child_symbols]
        if self.eos is not None:
            w[self.EQUAL] = d[self.eos]
        return w

    def _touch(self, prefix: tuple, source: PrefixNode) -> PrefixNode:
        """Bring ``prefix`` up to date from its current neighbour ``source``."""
        node = self._nodes.get(prefix)
        if node is None:
            node = PrefixNode(prefix, self._inside_prior(prefix), -1)
            self._nodes[prefix] = node
        if node.stamp == self._clock:
            return node
        if source.stamp != self._clock:
            raise RuntimeError("propagation source is stale")
        if prefix[:-1] == source.prefix:
            self._pull_from_parent(node, source)
        elif source.prefix[:-1] == prefix:
            self._pull_from_child(node, source)
        else:
            raise ValueError(f"{prefix} and {source.prefix} are not adjacent")
        node.stamp = self._clock
        return node

    def _pull_from_parent(self, node: PrefixNode, parent: PrefixNode):
        k = self._child_pos[node.prefix[-1]]
        pw = parent.masses
        toward = pw[k]
        outside = pw[:k].sum() + pw[k + 1:].sum()
        w = node.masses
        inside = np.ones(self.n_blocks, dtype=bool)
        inside[self.NOT_EXTEND] = False
        tot = w[inside].sum()
        if tot > 0:
            w[inside] *= toward / tot
        elif toward > 0:
            raise RuntimeError(f"node {node.prefix} lost mass that its parent still holds")
        w[self.NOT_EXTEND] = outside

    def _pull_from_child(self, node: PrefixNode, child: PrefixNode):
        k = self._child_pos[child.prefix[-1]]
        cw = child.masses
        toward = cw[self.NOT_EXTEND]
        into_child = cw[: self.NOT_EXTEND].sum() + cw[self.EQUAL]
        w = node.masses
        others = np.ones(self.n_blocks, dtype=bool)
        others[k] = False
        tot = w[others].sum()
        if tot > 0:
            w[others] *= toward / tot
        elif toward > 0:
            raise RuntimeError(f"node {node.prefix} lost mass that its child still holds")
        w[k] = into_child

    def _path(self, src: tuple, dst: tuple) -> list[tuple]:
        """Prefixes strictly after ``src`` on the tree path to ``dst``."""
        common = 0
        while common < min(len(src), len(dst)) and src[common] == dst[common]:
            common += 1
        up = [src[:i] for i in range(len(src) - 1, common - 1, -1)]
        down = [dst[:i] for i in range(common + 1, len(dst) + 1)]
        return up + down

    def walk_to(self, prefix: tuple) -> PrefixNode:
        """Touch every node on the path from the working node to ``prefix``."""
        prefix = tuple(prefix)
        node = self._nodes[self.working]
        for p in self._path(self.working, prefix):
            node = self._touch(p, node)
        return node

    def posterior_at(self, prefix) -> np.ndarray:
        """Current block posterior of the partition at ``prefix``."""
        return self.walk_to(tuple(prefix)).masses.copy()

    def _neighbours(self, node: PrefixNode):
        if node.prefix:
            yield node.prefix[:-1], self.NOT_EXTEND
        if node.depth < self.max_len:
            for k, s in enumerate(self.child_symbols):
                yield node.prefix + (s,), k

    # -- search -------------------------------------------------------

    def search(self) -> SearchStats:
        """Maximum-entropy partition search from the working node.

        A neighbour reached through a block of mass ``q`` is explored if
        ``q > 1 - 1/kappa`` (likely direction) or if the entropy bound for
        everything beyond it, ``U(1 - q)``, exceeds the best entropy seen.
        Ties go to the shallower, then lexicographically smaller, prefix.
        """
        start = self._nodes[self.working]
        if start.stamp != self._clock:
            raise RuntimeError("working node is stale")
        thresh = 1.0 - 1.0 / self.kappa
        best = start
        best_h = -1.0
        queue = deque([start])
        seen = {start.prefix}
        touched = 0
        pruned = []
        while queue:
            u = queue.popleft()
            touched += 1
            h = entropy(u.masses)
            if h > best_h + _TIE or (
                abs(h - best_h) <= _TIE and (u.depth, u.prefix) < (best.depth, best.prefix)
            ):
                best, best_h = u, max(h, best_h)
            for nb, blk in self._neighbours(u):
                if nb in seen:
                    continue
                q = u.masses[blk]
                if q > thresh:
                    explore = True
                else:
                    bound = _bound(1.0 - q, self.kappa)
                    explore = bound > best_h
                    if not explore and self.record_pruning:
                        pruned.append((u.prefix, nb, bound))
                if explore:
                    seen.add(nb)
                    queue.append(self._touch(nb, u))
        stats = SearchStats(touched, len(self._nodes), best.prefix, pruned)
        self.search_log.append(stats)
        return stats

    # -- PartitionSet interface ----------------------------------------

    def select(self) -> tuple:
        return self.search().selected

    def block_posterior(self, key) -> np.ndarray:
        node = self._nodes[tuple(key)]
        if node.stamp != self._clock:
            raise RuntimeError(f"partition {key} is stale; select() it first")
        return node.masses / node.masses.sum()

    def block_of(self, key, x) -> int:
        v = tuple(key)
        x = tuple(x)
        if x[: len(v)] != v:
            return self.NOT_EXTEND
        if len(x) == len(v):
            return self.EQUAL
        return self._child_pos[x[len(v)]]

    def update(self, key, evidence) -> None:
        node = self._nodes[tuple(key)]
        if node.stamp != self._clock:
            raise RuntimeError(f"cannot update stale partition {key}")
        node.masses = _bayes(evidence)
        self._clock += 1
        node.stamp = self._clock
        self.working = node.prefix

    def map_estimate(self, beam: int = 1) -> tuple:
        """Approximate MAP message by beam descent over prefix masses.

        Keeps the ``beam`` most probable open prefixes per depth and returns
        the complete message with the largest posterior mass encountered.
        Unexplored subtrees are filled in from the prior via propagation.
        """
        root = self.walk_to(())
        frontier = [root]
        best, best_p = None, -1.0
        while frontier:
            cand = []
            for v in frontier:
                w = v.masses
                if w[self.EQUAL] > best_p:
                    best, best_p = v.prefix, w[self.EQUAL]
                if v.depth < self.max_len:
                    for k, s in enumerate(self.child_symbols):
                        if w[k] > 0:
                            cand.append((-w[k], v.prefix + (s,), v))
            cand.sort(key=lambda t: (t[0], t[1]))
            # an open prefix lighter than the best complete message cannot beat it
            frontier = [self._touch(p, src) for neg, p, src in cand[:beam] if -neg > best_p]
        return best

    def clone(self) -> "PrefixTreePartitionSet":
        out = object.__new__(PrefixTreePartitionSet)
        out.__dict__.update(self.__dict__)
        out._nodes = {p: PrefixNode(p, n.masses.copy(), n.stamp) for p, n in self._nodes.items()}
        out.search_log = list(self.search_log)
        return out

    def element_posterior(self, x) -> float:
        """Posterior probability of the complete message ``x``."""
        x = tuple(x)
        return float(self.walk_to(x).masses[self.EQUAL])

    # -- enumeration --------------------------------------------------

    def elements(self):
        out = []

        def rec(prefix, p):
            if len(prefix) >= self.max_len:
                out.append(prefix)
                return
            d = self.model.next_dist(prefix)
            if self.eos is not None and d[self.eos] > 0:
                out.append(prefix)
            for s in self.child_symbols:
                if d[s] > 0:
                    rec(prefix + (s,), p * d[s])

        rec((), 1.0)
        return out

    def element_prior(self, x) -> float:
        x = tuple(x)
        p = 1.0
        for i, s in enumerate(x):
            p *= float(self.model.next_dist(x[:i])[s])
        if len(x) < self.max_len:
            p *= float(self.model.next_dist(x)[self.eos]) if self.eos is not None else 0.0
        return p

    @property
    def n_materialized(self) -> int:
        return len(self._nodes)
