"""Partition sets and the generic iterative MEC (IMEC) loop.

An IMEC iteration picks, from a family of partitions of the message space,
the partition whose block posterior has maximum entropy, couples that block
posterior with the next-symbol distribution of the target, and then either
samples the next symbol given the true message's block (encoding) or
conditions on an observed symbol (decoding).  Encoding and decoding share
:func:`couple_step`, so a decoder replays exactly the couplings the encoder
built.

Partition sets implement :class:`PartitionSet`.  Two live here:
:class:`SingletonPartitionSet` (tabular posterior) and
:class:`FactoredPartitionSet` (one partition per independent component).
The prefix-tree family is in :mod:`entrocoup.arimec`.
"""

from __future__ import annotations

import itertools
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

from .merging import group_columns
from .probcore import (
    PRUNE_TOL,
    CorruptionError,
    DecodeError,
    as_dist,
    entropy,
    greedy_mec,
    sample_index,
)


class PartitionSet(ABC):
    """A family of partitions of the message space with a shared posterior.

    Blocks of a partition are addressed by integer index in a fixed
    canonical order.  ``update`` receives, per block, the joint mass of that
    block and the observed evidence; the new block posterior is that vector
    renormalized, and mass inside each block is rescaled uniformly.
    """

    @abstractmethod
    def select(self) -> Hashable:
        """Key of a partition whose block posterior has maximum entropy."""

    @abstractmethod
    def block_posterior(self, key) -> np.ndarray: ...

    @abstractmethod
    def block_of(self, key, x) -> int: ...

    @abstractmethod
    def update(self, key, evidence: np.ndarray) -> None: ...

    @abstractmethod
    def map_estimate(self): ...

    @abstractmethod
    def clone(self) -> "PartitionSet": ...

    # Enumeration hooks, only needed by exhaustive checks.
    def elements(self) -> Iterable:
        raise NotImplementedError

    def element_prior(self, x) -> float:
        raise NotImplementedError

    def element_posterior(self, x) -> float:
        raise NotImplementedError


def _bayes(evidence) -> np.ndarray:
    ev = np.asarray(evidence, dtype=np.float64)
    s = ev.sum()
    if not s > 0:
        raise DecodeError("evidence has zero probability")
    return ev / s


class SingletonPartitionSet(PartitionSet):
    """Partition of singletons: the posterior over the whole space (TIMEC)."""

    def __init__(self, prior):
        if isinstance(prior, (int, np.integer)):
            prior = np.full(int(prior), 1.0 / int(prior))
        self.posterior = as_dist(prior)

    def select(self):
        return 0

    def block_posterior(self, key):
        return self.posterior

    def block_of(self, key, x):
        return int(x)

    def update(self, key, evidence):
        self.posterior = _bayes(evidence)

    def map_estimate(self) -> int:
        return int(np.argmax(self.posterior))

    def posterior_entropy(self) -> float:
        return entropy(self.posterior)

    def clone(self):
        out = object.__new__(SingletonPartitionSet)
        out.posterior = self.posterior.copy()
        return out

    def elements(self):
        return range(self.posterior.size)

    def element_prior(self, x):
        return float(self.posterior[int(x)])

    element_posterior = element_prior


class FactoredPartitionSet(PartitionSet):
    """One partition per component of a factorable message (FIMEC).

    Partition ``i`` groups messages by their ``i``-th component, so its
    block posterior is the marginal posterior of that component.  Selection
    takes the component of maximum posterior entropy, lowest index on ties.
    """

    def __init__(self, components: Sequence):
        self.posteriors = [as_dist(c) for c in components]
        if not self.posteriors:
            raise ValueError("need at least one component")

    def select(self) -> int:
        return int(np.argmax([entropy(p) for p in self.posteriors]))

    def block_posterior(self, key):
        return self.posteriors[key]

    def block_of(self, key, x):
        return int(x[key])

    def update(self, key, evidence):
        self.posteriors[key] = _bayes(evidence)

    def map_estimate(self) -> tuple[int, ...]:
        return tuple(int(np.argmax(p)) for p in self.posteriors)

    def posterior_entropy(self) -> float:
        return sum(entropy(p) for p in self.posteriors)

    def clone(self):
        out = object.__new__(FactoredPartitionSet)
        out.posteriors = [p.copy() for p in self.posteriors]
        return out

    def elements(self):
        return itertools.product(*(range(p.size) for p in self.posteriors))

    def element_prior(self, x):
        return math.prod(float(p[v]) for p, v in zip(self.posteriors, x))

    element_posterior = element_prior


@dataclass
class StepRecord:
    """One coupling performed inside an IMEC iteration."""

    key: Hashable
    prior: np.ndarray  # full block posterior before the coupling
    live: np.ndarray  # block indices that entered the coupling
    symbols: np.ndarray  # symbol indices that entered the coupling
    table: np.ndarray  # len(live) x len(symbols) coupling
    group: list[int] = field(default_factory=list)  # chosen columns


def couple_step(
    pset: PartitionSet,
    nu,
    *,
    merge: bool = False,
    x=None,
    y: int | None = None,
    rng: np.random.Generator | None = None,
    track: Sequence | None = None,
    record: list | None = None,
):
    """Run one IMEC iteration against next-symbol distribution ``nu``.

    Exactly one of ``x`` (encode: sample a symbol for message ``x``) and
    ``y`` (decode: condition on observed symbol ``y``) drives the step;
    both may be given to score ``y`` under ``x``.  ``pset`` is updated in
    place.

    With ``merge``, columns of the coupling that induce the same block
    posterior are grouped; a group is chosen, the posterior conditioned on
    it, and a fresh max-entropy partition is coupled against ``nu``
    restricted to the group, until a single symbol remains.

    Returns ``(symbol, probs)`` where ``probs[k]`` is the probability that
    the encoder would emit ``symbol`` at this step given message
    ``track[k]`` (``track`` defaults to ``[x]``); ``probs`` is None when
    nothing is tracked.
    """
    if x is None and y is None:
        raise ValueError("need x (encode) or y (decode)")
    nu = np.asarray(nu, dtype=np.float64)
    symbols = np.flatnonzero(nu > PRUNE_TOL)
    weights = nu[symbols]
    pos = None
    if y is not None:
        pos = int(np.searchsorted(symbols, y))
        if pos >= symbols.size or symbols[pos] != y:
            raise DecodeError(f"symbol {y} has zero probability under the target")
    elif rng is None:
        raise ValueError("encoding needs an rng")
    if track is None and x is not None:
        track = [x]
    probs = np.ones(len(track)) if track is not None else None

    for _ in range(nu.size + 1):
        key = pset.select()
        prior = pset.block_posterior(key)
        live = np.flatnonzero(prior > PRUNE_TOL)
        table = greedy_mec(prior[live], weights).to_dense()
        ncols = symbols.size
        groups = group_columns(table) if merge else None
        if groups is None or len(groups) == 1:
            groups = [[k] for k in range(ncols)]

        rows = None
        if track is not None:
            row_of = {int(b): r for r, b in enumerate(live)}
            rows = [row_of.get(pset.block_of(key, t), -1) for t in track]
        if y is not None:
            gi = next(i for i, g in enumerate(groups) if pos in g)
        else:
            r = rows[0]
            if r < 0:
                raise CorruptionError(f"message block has zero posterior mass in partition {key!r}")
            gi = sample_index([table[r, g].sum() for g in groups], rng)
        g = groups[gi]

        if probs is not None:
            rowsum = table.sum(axis=1)
            for k, r in enumerate(rows):
                probs[k] *= table[r, g].sum() / rowsum[r] if r >= 0 else 0.0
        evidence = np.zeros(prior.size)
        evidence[live] = table[:, g].sum(axis=1)
        if record is not None:
            record.append(StepRecord(key, prior.copy(), live, symbols.copy(), table, list(g)))
        pset.update(key, evidence)

        if len(g) == 1:
            return int(symbols[g[0]]), probs
        if pos is not None:
            pos = g.index(pos)
        symbols = symbols[g]
        w = weights[g]
        weights = w / w.sum()
    raise RuntimeError("merging failed to terminate within the alphabet size")


class CouplerSession:
    """An in-progress IMEC encoding of one message.

    ``nu_source`` supplies ``next_dist(prefix)`` for the target sequence.
    Sampling uses a counter-based Philox generator seeded with ``seed``.
    """

    def __init__(self, pset: PartitionSet, nu_source, *, merge: bool = False, seed: int = 0):
        self.pset = pset
        self.nu_source = nu_source
        self.merge = merge
        self.seed = seed
        self.rng = np.random.Generator(np.random.Philox(seed))
        self.prefix: list[int] = []
        self.log2_prob = 0.0  # log2 P(emitted prefix | message)

    @property
    def iteration(self) -> int:
        return len(self.prefix)

    def step(self, x) -> int:
        nu = self.nu_source.next_dist(tuple(self.prefix))
        y, p = couple_step(self.pset, nu, merge=self.merge, x=x, rng=self.rng)
        self.prefix.append(y)
        self.log2_prob += math.log2(p[0])
        return y

    def run(self, x, m: int) -> list[int]:
        for _ in range(m):
            self.step(x)
        return list(self.prefix)


def imec_encode(pset, nu_source, x, m: int, *, merge: bool = False, seed: int = 0) -> list[int]:
    return CouplerSession(pset, nu_source, merge=merge, seed=seed).run(x, m)


def imec_decode(pset, nu_source, y: Sequence[int], *, merge: bool = False):
    """Condition ``pset`` on the observed sequence; return (MAP, pset)."""
    prefix: list[int] = []
    for sym in y:
        nu = nu_source.next_dist(tuple(prefix))
        couple_step(pset, nu, merge=merge, y=int(sym))
        prefix.append(int(sym))
    return pset.map_estimate(), pset


def enumerate_joint(pset: PartitionSet, nu_source, m: int, *, merge: bool = False, elements=None):
    """Exact conditional law of the IMEC output for every message.

    Walks every target sequence of length ``m`` with positive probability.
    Returns ``(elements, table)`` where ``table`` maps each sequence ``y`` to
    the vector of ``P(y | x)`` over ``elements``.  The posterior path
    depends only on ``y``, so one replay per prefix scores all messages.
    """
    elements = list(pset.elements() if elements is None else elements)
    out: dict[tuple[int, ...], np.ndarray] = {}

    def walk(state, prefix, probs):
        if len(prefix) == m:
            out[prefix] = probs
            return
        nu = np.asarray(nu_source.next_dist(prefix), dtype=np.float64)
        for sym in np.flatnonzero(nu > PRUNE_TOL):
            child = state.clone()
            try:
                _, p = couple_step(child, nu, merge=merge, y=int(sym), track=elements)
            except DecodeError:
                continue  # symbol starved out of the coupling: probability 0
            walk(child, prefix + (int(sym),), probs * p)

    walk(pset.clone(), (), np.ones(len(elements)))
    return elements, out
