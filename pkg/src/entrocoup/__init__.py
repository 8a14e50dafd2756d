"""Low-entropy couplings of discrete distributions.

Greedy and exact minimum-entropy coupling, iterative coupling of a message
distribution with an autoregressive channel through partition sets
(tabular, factored and prefix-tree), merging, and steganography and Markov
coding game pipelines built on them.
"""

from .arimec import PrefixTreePartitionSet, entropy_upper_bound
from .merging import MergedCoupling, group_columns, merge_columns
from .partitions import (
    CouplerSession,
    FactoredPartitionSet,
    PartitionSet,
    SingletonPartitionSet,
    couple_step,
    enumerate_joint,
    imec_decode,
    imec_encode,
)
from .probcore import (
    CorruptionError,
    DecodeError,
    SparseCoupling,
    as_dist,
    conditional_col,
    conditional_row,
    coupling_entropy,
    entropy,
    exact_mec,
    greedy_mec,
)
from .experiments import default_cover, default_message_prior, default_plain_prior
from .mcg import (
    TabularMDP,
    bandit_mdp,
    chain_mdp,
    load_mdp,
    meme_decode,
    meme_encode,
    soft_value_iteration,
)
from .seqmodel import (
    NgramModel,
    UniformSource,
    fit,
    load_ngram,
    log_likelihood,
    random_ngram,
    sample,
    uniform_bit_source,
)
from .stego import (
    bits_from_hex,
    decrypt,
    encrypt,
    hex_from_bits,
    joint_entropy_estimate,
    keygen,
    linguistic_decode,
    linguistic_encode,
    perfect_security_gap,
    stego_decode,
    stego_encode,
)

__all__ = [
    "CorruptionError", "CouplerSession", "DecodeError", "FactoredPartitionSet", "MergedCoupling",
    "NgramModel", "PartitionSet", "PrefixTreePartitionSet", "SingletonPartitionSet",
    "SparseCoupling", "TabularMDP", "UniformSource", "as_dist", "bandit_mdp", "bits_from_hex",
    "chain_mdp", "conditional_col", "conditional_row", "couple_step", "coupling_entropy",
    "decrypt", "default_cover", "default_message_prior", "default_plain_prior", "encrypt",
    "entropy", "entropy_upper_bound", "enumerate_joint", "exact_mec", "fit", "greedy_mec",
    "group_columns", "hex_from_bits", "imec_decode", "imec_encode", "joint_entropy_estimate",
    "keygen", "linguistic_decode", "linguistic_encode", "load_mdp", "load_ngram",
    "log_likelihood", "meme_decode", "meme_encode", "merge_columns", "perfect_security_gap",
    "random_ngram", "sample", "soft_value_iteration", "stego_decode", "stego_encode",
    "uniform_bit_source",
]
