"""Autoregressive sources: uniform strings and table-based n-gram models.

An autoregressive source exposes ``alphabet_size``, ``max_len``, ``eos``
(an absorbing end symbol, or None) and ``next_dist(prefix)``.

N-gram file format (UTF-8, line oriented)::

    ngram k=<order> vocab=<size> eos=<symbol|none> smoothing=uniform
    <symbol_0> <symbol_1> ... <symbol_{V-1}>
    <context symbols> : <p_0> <p_1> ... <p_{V-1}>
    ...

Contexts shorter than ``k`` cover the start of a sequence (the empty
context is a line starting with ``:``).  Contexts missing from the table
fall back to the uniform distribution.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .probcore import SUM_TOL, as_dist, entropy


class NgramFormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class AutoregressiveSource:
    """Base class; subclasses implement :meth:`next_dist`."""

    alphabet_size: int
    max_len: int | None = None
    eos: int | None = None

    def next_dist(self, prefix: Sequence[int]) -> np.ndarray:
        raise NotImplementedError

    def _absorbed(self, prefix) -> bool:
        return self.eos is not None and len(prefix) > 0 and prefix[-1] == self.eos

    def _point_eos(self) -> np.ndarray:
        d = np.zeros(self.alphabet_size)
        d[self.eos] = 1.0
        return d


class UniformSource(AutoregressiveSource):
    """I.i.d. uniform symbols over ``alphabet_size`` values, fixed length."""

    def __init__(self, alphabet_size: int, length: int):
        if length < 0 or alphabet_size < 1:
            raise ValueError("need length >= 0 and alphabet_size >= 1")
        self.alphabet_size = int(alphabet_size)
        self.max_len = int(length)
        self._d = np.full(self.alphabet_size, 1.0 / self.alphabet_size)

    def next_dist(self, prefix):
        return self._d

    def total_entropy(self) -> float:
        return self.max_len * math.log2(self.alphabet_size)


def uniform_bit_source(length_bits: int) -> UniformSource:
    return UniformSource(2, length_bits)


class FactoredSource(AutoregressiveSource):
    """Independent, position-dependent components (a factorable message)."""

    def __init__(self, components: Sequence):
        self.components = [as_dist(c) for c in components]
        self.alphabet_size = max(c.size for c in self.components)
        self.max_len = len(self.components)

    def next_dist(self, prefix):
        c = self.components[len(prefix)]
        if c.size == self.alphabet_size:
            return c
        out = np.zeros(self.alphabet_size)
        out[: c.size] = c
        return out


@dataclass
class NgramModel(AutoregressiveSource):
    """Order-``k`` Markov model over a token vocabulary."""

    order: int
    vocab: list[str]
    table: dict[tuple[int, ...], np.ndarray] = field(default_factory=dict)
    eos: int | None = None
    max_len: int | None = None
    smoothing: str = "uniform"

    def __post_init__(self):
        self.alphabet_size = len(self.vocab)
        self._index = {t: i for i, t in enumerate(self.vocab)}
        if len(self._index) != len(self.vocab):
            raise ValueError("duplicate vocabulary symbols")
        self._uniform = np.full(self.alphabet_size, 1.0 / self.alphabet_size)
        self.table = {tuple(int(s) for s in k): as_dist(v, renormalize=False)
                      for k, v in self.table.items()}
        for ctx, row in self.table.items():
            if row.size != self.alphabet_size:
                raise ValueError(f"row for context {ctx} has {row.size} entries")

    def context(self, prefix: Sequence[int]) -> tuple[int, ...]:
        if self.order == 0:
            return ()
        return tuple(prefix[-self.order:])

    def next_dist(self, prefix):
        if self._absorbed(prefix):
            return self._point_eos()
        return self.table.get(self.context(prefix), self._uniform)

    def with_max_len(self, n: int) -> "NgramModel":
        return NgramModel(self.order, list(self.vocab), dict(self.table), self.eos, n, self.smoothing)

    def encode(self, tokens: Iterable[str]) -> list[int]:
        try:
            return [self._index[t] for t in tokens]
        except KeyError as e:
            raise ValueError(f"unknown symbol {e.args[0]!r}") from None

    def decode(self, seq: Iterable[int]) -> list[str]:
        return [self.vocab[i] for i in seq]

    def entropy_rate_bound(self) -> float:
        """Largest per-step entropy over all table rows (bits)."""
        rows = list(self.table.values()) or [self._uniform]
        return max(entropy(r) for r in rows)


def sample(model: AutoregressiveSource, seed: int, max_len: int | None = None) -> list[int]:
    """Draw a sequence; stops after emitting EOS (kept) or at ``max_len``."""
    n = max_len if max_len is not None else model.max_len
    if n is None:
        raise ValueError("need a maximum length")
    rng = np.random.Generator(np.random.Philox(seed))
    seq: list[int] = []
    while len(seq) < n:
        d = model.next_dist(tuple(seq))
        s = int(rng.choice(d.size, p=d))
        seq.append(s)
        if s == model.eos:
            break
    return seq


def log_likelihood(model: AutoregressiveSource, seq: Sequence[int]) -> float:
    """Log2-probability of ``seq``; ``-inf`` if impossible."""
    total = 0.0
    for i, s in enumerate(seq):
        if not 0 <= s < model.alphabet_size:
            raise ValueError(f"unknown symbol index {s} at position {i}")
        p = float(model.next_dist(tuple(seq[:i]))[s])
        if p <= 0.0:
            return -math.inf
        total += math.log2(p)
    return total


def fit(corpus: Iterable[Sequence[str]], order: int, *, eos: str | None = None,
        add: float = 0.0) -> NgramModel:
    """Count-based n-gram estimate with optional additive smoothing.

    Each corpus item is a token sequence; ``eos`` (if given) is appended to
    every sequence and added to the vocabulary.
    """
    sents = [list(s) + ([eos] if eos is not None else []) for s in corpus]
    vocab = sorted({t for s in sents for t in s if t != eos})
    if eos is not None:
        vocab.append(eos)
    idx = {t: i for i, t in enumerate(vocab)}
    counts: dict[tuple, Counter] = defaultdict(Counter)
    for s in sents:
        ids = [idx[t] for t in s]
        for i, t in enumerate(ids):
            ctx = tuple(ids[max(0, i - order):i]) if order else ()
            counts[ctx][t] += 1
    V = len(vocab)
    table = {}
    for ctx, c in counts.items():
        row = np.full(V, float(add))
        for t, n in c.items():
            row[t] += n
        table[ctx] = row / row.sum()
    return NgramModel(order, vocab, table, idx.get(eos) if eos is not None else None)


def _fmt(p: float) -> str:
    return repr(float(p))


def dumps(model: NgramModel) -> str:
    eos = model.vocab[model.eos] if model.eos is not None else "none"
    lines = [
        f"ngram k={model.order} vocab={len(model.vocab)} eos={eos} smoothing={model.smoothing}",
        " ".join(model.vocab),
    ]
    for ctx in sorted(model.table, key=lambda c: (len(c), c)):
        head = " ".join(model.vocab[i] for i in ctx)
        probs = " ".join(_fmt(p) for p in model.table[ctx])
        lines.append(f"{head} : {probs}" if head else f": {probs}")
    return "\n".join(lines) + "\n"


def save(model: NgramModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8")


def loads(text: str) -> NgramModel:
    lines = text.splitlines()
    if not lines:
        raise NgramFormatError(1, "empty file")
    head = lines[0].split()
    if not head or head[0] != "ngram":
        raise NgramFormatError(1, "header must start with 'ngram'")
    fields = {}
    for tok in head[1:]:
        if "=" not in tok:
            raise NgramFormatError(1, f"bad header field {tok!r}")
        k, v = tok.split("=", 1)
        fields[k] = v
    try:
        order = int(fields["k"])
        size = int(fields["vocab"])
        eos_sym = fields["eos"]
    except (KeyError, ValueError) as e:
        raise NgramFormatError(1, f"header needs k=, vocab=, eos= ({e})") from None
    smoothing = fields.get("smoothing", "uniform")
    if smoothing != "uniform":
        raise NgramFormatError(1, f"unsupported smoothing {smoothing!r}")
    if len(lines) < 2:
        raise NgramFormatError(2, "missing vocabulary line")
    vocab = lines[1].split()
    if len(vocab) != size:
        raise NgramFormatError(2, f"expected {size} symbols, found {len(vocab)}")
    index = {t: i for i, t in enumerate(vocab)}
    if eos_sym == "none":
        eos = None
    elif eos_sym in index:
        eos = index[eos_sym]
    else:
        raise NgramFormatError(1, f"eos symbol {eos_sym!r} not in vocabulary")
    table = {}
    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        if ":" not in line:
            raise NgramFormatError(lineno, "expected '<context> : <probs>'")
        ctx_txt, probs_txt = line.split(":", 1)
        ctx_toks = ctx_txt.split()
        if len(ctx_toks) > order:
            raise NgramFormatError(lineno, f"context longer than order {order}")
        try:
            ctx = tuple(index[t] for t in ctx_toks)
        except KeyError as e:
            raise NgramFormatError(lineno, f"unknown symbol {e.args[0]!r}") from None
        try:
            probs = [float(t) for t in probs_txt.split()]
        except ValueError as e:
            raise NgramFormatError(lineno, str(e)) from None
        if len(probs) != size:
            raise NgramFormatError(lineno, f"expected {size} probabilities, found {len(probs)}")
        if abs(sum(probs) - 1.0) > SUM_TOL or min(probs) < 0:
            raise NgramFormatError(lineno, "probabilities must be >= 0 and sum to 1")
        if ctx in table:
            raise NgramFormatError(lineno, f"duplicate context {ctx_txt.strip()!r}")
        table[ctx] = np.array(probs)
    return NgramModel(order, vocab, table, eos, None, smoothing)


def load_ngram(path) -> NgramModel:
    return loads(Path(path).read_text(encoding="utf-8"))


def random_ngram(vocab_size: int, order: int, seed: int, *, concentration: float = 1.0,
                 eos: bool = False, eos_prob: float | None = None) -> NgramModel:
    """Full n-gram table with Dirichlet(``concentration``) rows.

    With ``eos``, the last symbol ends sequences; ``eos_prob`` then fixes
    its probability in every row (other entries are rescaled).
    """
    rng = np.random.default_rng(seed)
    vocab = [f"t{i}" for i in range(vocab_size - 1)] + (["</s>"] if eos else [f"t{vocab_size - 1}"])
    table = {}
    for length in range(order + 1):
        for ctx in np.ndindex(*(vocab_size,) * length):
            row = rng.dirichlet(np.full(vocab_size, concentration))
            if eos and eos_prob is not None:
                head = row[:-1] / row[:-1].sum() if row[:-1].sum() > 0 else np.full(vocab_size - 1, 1 / (vocab_size - 1))
                row = np.append(head * (1 - eos_prob), eos_prob)
            table[tuple(int(c) for c in ctx)] = row
    return NgramModel(order, vocab, table, vocab_size - 1 if eos else None)


def permuted_rows_ngram(base, seed: int) -> NgramModel:
    """Order-1 model whose every row is a permutation of ``base``.

    Every context has the same next-symbol entropy, so the total entropy
    of any length-m sample is exactly ``m * H(base)``.
    """
    base = as_dist(base)
    V = base.size
    rng = np.random.default_rng(seed)
    table = {(): base[rng.permutation(V)]}
    for s in range(V):
        table[(s,)] = base[rng.permutation(V)]
    return NgramModel(1, [f"c{i}" for i in range(V)], table)
