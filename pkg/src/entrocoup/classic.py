"""Direct tabular and factored IMEC, written without partition sets.

These are straight transcriptions of the two classic iterative couplers and
serve as reference implementations: the generic loop in
:mod:`entrocoup.partitions` must reproduce their transcripts exactly when
given singleton or per-component partitions.
"""

from __future__ import annotations

import numpy as np

from .probcore import DecodeError, as_dist, entropy, greedy_mec, sample_index


def _table(post: np.ndarray, nu: np.ndarray) -> np.ndarray:
    return greedy_mec(post, nu).to_dense()


def timec_encode(mu, nu_source, x: int, m: int, seed: int = 0) -> list[int]:
    """Tabular IMEC, sampling ``m`` symbols for message index ``x``."""
    rng = np.random.Generator(np.random.Philox(seed))
    post = as_dist(mu)
    y: list[int] = []
    for _ in range(m):
        nu = np.asarray(nu_source.next_dist(tuple(y)), dtype=np.float64)
        table = _table(post, nu)
        sym = sample_index(table[x], rng)
        col = table[:, sym]
        post = col / col.sum()
        y.append(sym)
    return y


def timec_decode(mu, nu_source, y) -> np.ndarray:
    """Posterior over message indices after observing ``y``."""
    post = as_dist(mu)
    for j, sym in enumerate(y):
        nu = np.asarray(nu_source.next_dist(tuple(y[:j])), dtype=np.float64)
        col = _table(post, nu)[:, sym]
        if not col.sum() > 0:
            raise DecodeError(f"symbol {sym} impossible at step {j}")
        post = col / col.sum()
    return post


def fimec_encode(components, nu_source, x, m: int, seed: int = 0) -> list[int]:
    """Factored IMEC: couple the highest-entropy component each step."""
    rng = np.random.Generator(np.random.Philox(seed))
    posts = [as_dist(c) for c in components]
    y: list[int] = []
    for _ in range(m):
        nu = np.asarray(nu_source.next_dist(tuple(y)), dtype=np.float64)
        i = int(np.argmax([entropy(p) for p in posts]))
        table = _table(posts[i], nu)
        sym = sample_index(table[x[i]], rng)
        col = table[:, sym]
        posts[i] = col / col.sum()
        y.append(sym)
    return y


def fimec_decode(components, nu_source, y) -> list[np.ndarray]:
    posts = [as_dist(c) for c in components]
    for j, sym in enumerate(y):
        nu = np.asarray(nu_source.next_dist(tuple(y[:j])), dtype=np.float64)
        i = int(np.argmax([entropy(p) for p in posts]))
        col = _table(posts[i], nu)[:, sym]
        if not col.sum() > 0:
            raise DecodeError(f"symbol {sym} impossible at step {j}")
        posts[i] = col / col.sum()
    return posts
