"""Steganography on top of the coupling engine.

Pipeline: plaintext bits are XOR-encrypted with a uniform key, which makes
the ciphertext uniform whatever the plaintext distribution; the ciphertext
is then hidden in a covertext model by IMEC.  Because IMEC induces a
coupling of the ciphertext and covertext distributions, the stegotext is
distributed exactly as covertext.

Hex strings carry bits MSB-first within each byte.  A bit string whose
length is not a multiple of 8 is zero-padded on the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .arimec import PrefixTreePartitionSet
from .partitions import (
    CouplerSession,
    FactoredPartitionSet,
    PartitionSet,
    SingletonPartitionSet,
    enumerate_joint,
    imec_decode,
)
from .probcore import CorruptionError, entropy
from .seqmodel import UniformSource, log_likelihood

VARIANTS = ("timec", "fimec", "arimec")
# Largest ciphertext the tabular variant will enumerate.
TIMEC_MAX_BITS = 20


# -- bit strings ----------------------------------------------------------


def bits_from_hex(text: str, nbits: int | None = None) -> np.ndarray:
    text = text.strip().lower()
    if text.startswith("0x"):
        text = text[2:]
    if len(text) % 2:
        raise ValueError("hex string must have an even number of digits")
    raw = bytes.fromhex(text)
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8)) if raw else np.zeros(0, np.uint8)
    if nbits is None:
        return bits
    if nbits > bits.size or nbits <= bits.size - 8:
        raise ValueError(f"{len(raw)} bytes cannot hold exactly {nbits} bits")
    if bits[nbits:].any():
        raise ValueError("nonzero padding bits")
    return bits[:nbits]


def hex_from_bits(bits) -> str:
    b = np.asarray(bits, dtype=np.uint8)
    if b.size and b.max() > 1:
        raise ValueError("bits must be 0 or 1")
    return np.packbits(b).tobytes().hex()


def keygen(nbits: int, seed: int) -> str:
    """Uniform key of ``nbits`` bits, as hex."""
    if nbits < 0:
        raise ValueError("nbits must be nonnegative")
    rng = np.random.Generator(np.random.Philox(seed))
    return hex_from_bits(rng.integers(0, 2, size=nbits, dtype=np.uint8))


def encrypt(bits, key) -> np.ndarray:
    a = np.asarray(bits, dtype=np.uint8)
    k = np.asarray(key, dtype=np.uint8)
    if a.shape != k.shape:
        raise ValueError(f"message has {a.size} bits but key has {k.size}")
    return a ^ k


decrypt = encrypt


def bits_to_int(bits) -> int:
    return int("".join(str(int(b)) for b in bits), 2) if len(bits) else 0


def int_to_bits(v: int, nbits: int) -> np.ndarray:
    return np.array([(v >> (nbits - 1 - i)) & 1 for i in range(nbits)], dtype=np.uint8)


# -- message spaces -------------------------------------------------------


@dataclass(frozen=True)
class CipherSpace:
    """How a ``nbits``-bit uniform ciphertext is presented to a variant.

    ``component_bits`` sets the FIMEC component size; the ciphertext splits
    into ``nbits / component_bits`` components of ``2**component_bits``
    values each.
    """

    variant: str
    nbits: int
    component_bits: int = 1

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "timec" and self.nbits > TIMEC_MAX_BITS:
            raise ValueError(f"timec enumerates 2**nbits messages; nbits <= {TIMEC_MAX_BITS}")
        if self.variant == "fimec" and self.nbits % self.component_bits:
            raise ValueError("component_bits must divide nbits")

    def partition_set(self) -> PartitionSet:
        if self.variant == "timec":
            return SingletonPartitionSet(2 ** self.nbits)
        if self.variant == "fimec":
            n = self.nbits // self.component_bits
            k = 2 ** self.component_bits
            return FactoredPartitionSet([np.full(k, 1.0 / k)] * n if n else [[1.0]])
        return PrefixTreePartitionSet(UniformSource(2, self.nbits))

    def to_element(self, bits):
        bits = np.asarray(bits, dtype=np.uint8)
        if bits.size != self.nbits:
            raise ValueError(f"expected {self.nbits} bits, got {bits.size}")
        if self.variant == "timec":
            return bits_to_int(bits)
        if self.variant == "fimec":
            if self.nbits == 0:
                return (0,)
            c = self.component_bits
            return tuple(bits_to_int(bits[i:i + c]) for i in range(0, self.nbits, c))
        return tuple(int(b) for b in bits)

    def from_element(self, x) -> np.ndarray:
        if self.variant == "timec":
            return int_to_bits(int(x), self.nbits)
        if self.variant == "fimec":
            if self.nbits == 0:
                return np.zeros(0, np.uint8)
            parts = [int_to_bits(v, self.component_bits) for v in x]
            return np.concatenate(parts)
        out = np.zeros(self.nbits, dtype=np.uint8)
        out[: len(x)] = x
        return out


# -- transcripts ------------------------------------------------------------


@dataclass
class StegoTranscript:
    stegotext: list[int]
    estimate: np.ndarray  # MAP ciphertext (or plaintext) after decoding
    log2_prob: float  # log2 P(stegotext | hidden message)
    posterior_entropy: float | None = None  # bits, when the variant exposes it
    extra: dict = field(default_factory=dict)


def _posterior_entropy(pset) -> float | None:
    f = getattr(pset, "posterior_entropy", None)
    return f() if f is not None else None


def stego_encode(ciphertext, cover, m: int, *, variant: str = "arimec", merge: bool = False,
                 seed: int = 0, component_bits: int = 1) -> StegoTranscript:
    """Hide ``ciphertext`` (bit array) in ``m`` covertext symbols."""
    bits = np.asarray(ciphertext, dtype=np.uint8)
    space = CipherSpace(variant, bits.size, component_bits)
    pset = space.partition_set()
    sess = CouplerSession(pset, cover, merge=merge, seed=seed)
    x = space.to_element(bits)
    y = sess.run(x, m)
    est = space.from_element(pset.map_estimate())
    return StegoTranscript(y, est, sess.log2_prob, _posterior_entropy(pset),
                           {"true_posterior": pset.element_posterior(x)})


def stego_decode(stegotext: Sequence[int], cover, nbits: int, *, variant: str = "arimec",
                 merge: bool = False, component_bits: int = 1):
    """MAP ciphertext bits and the conditioned partition set."""
    space = CipherSpace(variant, nbits, component_bits)
    x_hat, pset = imec_decode(space.partition_set(), cover, list(stegotext), merge=merge)
    return space.from_element(x_hat), pset


def joint_entropy_estimate(stegotext, cover, posterior_entropy: float | None = None,
                           true_posterior: float | None = None) -> float:
    """Single-trial unbiased estimate of H(X, Y) in bits.

    Chain rule over Y, ``sum_j H(nu(.|y_<j))``, plus H(X | Y = y): exact
    when the partition set exposes its posterior entropy, otherwise
    estimated by ``-log2 P(x | y)`` for the true message ``x``.
    """
    h_y = sum(entropy(cover.next_dist(tuple(stegotext[:j]))) for j in range(len(stegotext)))
    if posterior_entropy is not None:
        return h_y + posterior_entropy
    if true_posterior is None or not true_posterior > 0:
        raise ValueError("need the posterior entropy or a positive true-message posterior")
    return h_y - math.log2(true_posterior)


# -- exact checks -----------------------------------------------------------


def perfect_security_gap(cover, nbits: int, m: int, *, variant: str = "arimec",
                         merge: bool = False, component_bits: int = 1) -> float:
    """Max over stegotexts of |sum_x P(x) P(y|x) - P_cover(y)|, computed exactly.

    Every ciphertext is equally likely; every covertext sequence of length
    ``m`` is enumerated.
    """
    space = CipherSpace(variant, nbits, component_bits)
    pset = space.partition_set()
    elements = list(pset.elements())
    prior = np.array([pset.element_prior(x) for x in elements])
    _, table = enumerate_joint(pset, cover, m, merge=merge, elements=elements)
    gap = 0.0
    seen = 0.0
    for y, cond in table.items():
        p_cover = 2.0 ** log_likelihood(cover, y)
        gap = max(gap, abs(float(prior @ cond) - p_cover))
        seen += p_cover
    # sequences never reached by the coupler must carry no cover mass
    return max(gap, abs(1.0 - seen))


def mutual_information(joint: np.ndarray) -> float:
    """I(A; B) in bits from a joint probability table."""
    j = np.asarray(joint, dtype=np.float64)
    return entropy(j.sum(axis=1)) + entropy(j.sum(axis=0)) - entropy(j.ravel())


def plugin_mutual_information(pairs) -> float:
    """Plug-in estimate of I(A; B) from observed (a, b) pairs."""
    pairs = list(pairs)
    if not pairs:
        return 0.0
    ia = {a: i for i, a in enumerate(sorted({a for a, _ in pairs}))}
    ib = {b: i for i, b in enumerate(sorted({b for _, b in pairs}))}
    j = np.zeros((len(ia), len(ib)))
    for a, b in pairs:
        j[ia[a], ib[b]] += 1
    return mutual_information(j / j.sum())


# -- linguistic steganography --------------------------------------------------


def _strip_eos(seq, eos):
    out = []
    for s in seq:
        if s == eos:
            break
        out.append(int(s))
    return tuple(out)


def plaintext_space(prior, variant: str):
    """Partition set for plaintexts: ARIMEC with ``prior``, or the
    uniform-prior FIMEC baseline with one component per position."""
    n = int(prior.max_len)
    if variant == "arimec":
        return PrefixTreePartitionSet(prior, n)
    if variant == "fimec":
        V = prior.alphabet_size
        return FactoredPartitionSet([np.full(V, 1.0 / V)] * n)
    raise ValueError(f"linguistic variant must be arimec or fimec, not {variant!r}")


def _plain_element(prior, plaintext, variant):
    msg = _strip_eos(plaintext, prior.eos)
    if variant == "arimec":
        return msg
    pad = prior.eos if prior.eos is not None else 0
    return msg + (pad,) * (int(prior.max_len) - len(msg))


def _plain_estimate(prior, x_hat, variant):
    return _strip_eos(x_hat, prior.eos) if variant == "fimec" else tuple(x_hat)


def correct_prefix(a: Sequence[int], b: Sequence[int]) -> int:
    n = 0
    for u, v in zip(a, b):
        if u != v:
            break
        n += 1
    return n


def linguistic_encode(prior, cover, plaintext, m: int, *, variant: str = "arimec",
                      merge: bool = False, seed: int = 0) -> StegoTranscript:
    """Hide a plaintext drawn from ``prior`` in ``m`` covertext symbols.

    ``prior`` must have a finite ``max_len``.  The transcript's ``extra``
    records the decoded plaintext and its correctly decoded prefix length.
    """
    msg = _strip_eos(plaintext, prior.eos)
    if len(msg) > prior.max_len:
        raise ValueError("plaintext longer than the prior's max_len")
    full = list(msg) + ([prior.eos] if prior.eos is not None and len(msg) < prior.max_len else [])
    if log_likelihood(prior, full) == -math.inf:
        raise CorruptionError("plaintext has zero prior probability")
    pset = plaintext_space(prior, variant)
    sess = CouplerSession(pset, cover, merge=merge, seed=seed)
    y = sess.run(_plain_element(prior, msg, variant), m)
    decoded, _ = imec_decode(plaintext_space(prior, variant), cover, y, merge=merge)
    est = _plain_estimate(prior, decoded, variant)
    return StegoTranscript(
        y, np.array(est, dtype=np.int64), sess.log2_prob, _posterior_entropy(pset),
        {"plaintext": msg, "decoded": est, "correct_prefix": correct_prefix(msg, est),
         "exact": est == msg},
    )


def linguistic_decode(prior, cover, stegotext, *, variant: str = "arimec",
                      merge: bool = False) -> tuple[int, ...]:
    x_hat, _ = imec_decode(plaintext_space(prior, variant), cover, list(stegotext), merge=merge)
    return _plain_estimate(prior, x_hat, variant)
