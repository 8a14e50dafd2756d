"""Desk-scale experiment drivers.

Each experiment runs independent trials and returns ``(rows, summary)``:
one dict per trial (CSV-ready, ordered by trial index) and a list of
per-group summaries with a seeded percentile-bootstrap 95% interval.

Seeds: trial ``t`` of a run with root seed ``r`` uses
``trial_seed(r, t)``, the first 32-bit word of ``SeedSequence([r, t])``.
Trials can run in worker processes (``ENTROCOUP_THREADS`` caps the count);
results are reassembled in trial order, so output does not depend on the
number of workers.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .arimec import PrefixTreePartitionSet
from .mcg import chain_mdp, meme_decode, meme_encode, soft_value_iteration
from .partitions import CouplerSession
from .seqmodel import permuted_rows_ngram, random_ngram, sample
from .stego import (
    bits_from_hex,
    encrypt,
    joint_entropy_estimate,
    keygen,
    linguistic_encode,
    stego_decode,
    stego_encode,
)

N_BOOTSTRAP = 10_000


def trial_seed(root: int, trial: int) -> int:
    return int(np.random.SeedSequence([root, trial]).generate_state(1)[0])


def n_workers() -> int:
    env = os.environ.get("ENTROCOUP_THREADS")
    n = int(env) if env else (os.cpu_count() or 1)
    return max(1, n)


def run_trials(fn, jobs: list, workers: int | None = None) -> list:
    workers = n_workers() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
        return list(ex.map(fn, jobs))


def bootstrap_ci(values, seed: int = 0, n_resamples: int = N_BOOTSTRAP, level: float = 0.95):
    """(mean, low, high) with a percentile bootstrap interval for the mean."""
    v = np.asarray(values, dtype=np.float64)
    mean = float(v.mean())
    if v.size < 2 or np.all(v == v[0]):
        return mean, mean, mean
    res = stats.bootstrap((v,), np.mean, n_resamples=n_resamples, confidence_level=level,
                          method="percentile", random_state=np.random.default_rng(seed))
    return mean, float(res.confidence_interval.low), float(res.confidence_interval.high)


def summarize(rows: list[dict], keys: list[str], metric: str, seed: int = 0) -> list[dict]:
    groups: dict[tuple, list[float]] = {}
    for r in rows:
        groups.setdefault(tuple(r[k] for k in keys), []).append(float(r[metric]))
    out = []
    for g, vals in groups.items():
        mean, lo, hi = bootstrap_ci(vals, seed)
        out.append({**dict(zip(keys, g)), "metric": metric, "n": len(vals),
                    "mean": mean, "ci_low": lo, "ci_high": hi})
    return out


# -- shared desk-scale models ---------------------------------------------------


def default_cover(vocab: int = 16, seed: int = 7):
    """Order-1 covertext whose rows are permutations of one Dirichlet(1)
    draw, so every step has the same entropy (about 3.4 bits at the
    defaults)."""
    base = np.sort(np.random.default_rng(seed).dirichlet(np.ones(vocab)))[::-1]
    return permuted_rows_ngram(base, seed + 4)


def default_plain_prior(max_len: int = 24, seed: int = 3):
    """Low-entropy order-2 plaintext prior over 7 tokens plus an end symbol."""
    return random_ngram(8, 2, seed, concentration=0.1, eos=True, eos_prob=0.02).with_max_len(max_len)


def default_message_prior(length: int = 3, seed: int = 5):
    """Order-1 prior over 4 tokens for fixed-length MCG messages."""
    return random_ngram(4, 1, seed, concentration=0.3).with_max_len(length)


# -- steganography ------------------------------------------------------------


@dataclass
class StegoConfig:
    variants: tuple = ("fimec", "arimec")
    bits: int = 16
    m: int = 100
    merge: bool = False
    component_bits: int = 1
    trials: int = 100
    seed: int = 0


def _stego_trial(job):
    cfg, variant, trial = job
    cover = default_cover()
    s = trial_seed(cfg.seed, trial)
    rng = np.random.Generator(np.random.Philox(s))
    plain = rng.integers(0, 2, size=cfg.bits, dtype=np.uint8)
    key = bits_from_hex(keygen(cfg.bits, s + 1), cfg.bits)
    cipher = encrypt(plain, key)
    t = stego_encode(cipher, cover, cfg.m, variant=variant, merge=cfg.merge, seed=s,
                     component_bits=cfg.component_bits)
    est, _ = stego_decode(t.stegotext, cover, cfg.bits, variant=variant, merge=cfg.merge,
                          component_bits=cfg.component_bits)
    return {
        "variant": variant, "seed": s, "bits": cfg.bits, "len": cfg.m,
        "error_rate": float(not np.array_equal(est, cipher)),
        "joint_entropy_bits": joint_entropy_estimate(t.stegotext, cover, t.posterior_entropy,
                                                     t.extra["true_posterior"]),
    }


def stego_experiment(cfg: StegoConfig = StegoConfig(), workers=None):
    jobs = [(cfg, v, t) for v in cfg.variants for t in range(cfg.trials)]
    rows = run_trials(_stego_trial, jobs, workers)
    return rows, summarize(rows, ["variant"], "error_rate", cfg.seed) + \
        summarize(rows, ["variant"], "joint_entropy_bits", cfg.seed)


# -- merging sweep -------------------------------------------------------------


@dataclass
class MergingConfig:
    bits: int = 80
    components: tuple = (10, 20, 40, 80)
    m: int = 30
    trials: int = 100
    seed: int = 0


def _merging_trial(job):
    cfg, merge, n, trial = job
    sub = StegoConfig(variants=("fimec",), bits=cfg.bits, m=cfg.m, merge=merge,
                      component_bits=cfg.bits // n, seed=cfg.seed)
    row = _stego_trial((sub, "fimec", trial))
    return {"variant": "fimec", "merge": int(merge), "components": n, **{
        k: row[k] for k in ("seed", "bits", "len", "error_rate", "joint_entropy_bits")}}


def merging_experiment(cfg: MergingConfig = MergingConfig(), workers=None):
    """Joint entropy with and without merging as the ciphertext is split
    into more, smaller components (total ciphertext entropy fixed)."""
    jobs = [(cfg, mg, n, t) for mg in (False, True) for n in cfg.components
            for t in range(cfg.trials)]
    rows = run_trials(_merging_trial, jobs, workers)
    return rows, summarize(rows, ["merge", "components"], "joint_entropy_bits", cfg.seed)


# -- linguistic steganography ------------------------------------------------------


@dataclass
class LinguisticConfig:
    variants: tuple = ("arimec", "fimec")
    m: int = 8
    max_len: int = 24
    merge: bool = False
    trials: int = 100
    seed: int = 0


def _linguistic_trial(job):
    cfg, variant, trial = job
    prior = default_plain_prior(cfg.max_len)
    cover = default_cover()
    s = trial_seed(cfg.seed, trial)
    plain = sample(prior, s)
    t = linguistic_encode(prior, cover, plain, cfg.m, variant=variant, merge=cfg.merge, seed=s)
    return {"variant": variant, "seed": s, "plain_len": len(t.extra["plaintext"]),
            "len": cfg.m, "correct_prefix": t.extra["correct_prefix"],
            "exact": int(t.extra["exact"]),
            "throughput": t.extra["correct_prefix"] / cfg.m}


def linguistic_experiment(cfg: LinguisticConfig = LinguisticConfig(), workers=None):
    """ARIMEC with the true autoregressive prior against the uniform-prior
    FIMEC baseline, at a fixed stegotext length."""
    jobs = [(cfg, v, t) for v in cfg.variants for t in range(cfg.trials)]
    rows = run_trials(_linguistic_trial, jobs, workers)
    return rows, summarize(rows, ["variant"], "correct_prefix", cfg.seed) + \
        summarize(rows, ["variant"], "exact", cfg.seed)


# -- Markov coding games -----------------------------------------------------------


@dataclass
class McgConfig:
    variants: tuple = ("arimec", "fimec")
    alphas: tuple = (0.25, 0.5, 1.0, 2.0)
    msg_len: int = 3
    n_states: int = 5
    horizon: int = 12
    merge: bool = False
    trials: int = 100
    seed: int = 0


def _mcg_trial(job):
    cfg, variant, alpha, trial = job
    prior = default_message_prior(cfg.msg_len)
    mdp = chain_mdp(cfg.n_states, cfg.horizon)
    policy = soft_value_iteration(mdp, alpha)
    s = trial_seed(cfg.seed, trial)
    msg = tuple(sample(prior, s))
    ep = meme_encode(msg, prior, mdp, policy, variant=variant, merge=cfg.merge, seed=s)
    est, _ = meme_decode(ep.states[:-1], ep.actions, prior, policy, variant=variant,
                         merge=cfg.merge)
    return {"variant": variant, "alpha": alpha, "seed": s, "msg_len": cfg.msg_len,
            "decode_error": float(tuple(est) != msg), "return": ep.total_return}


def mcg_experiment(cfg: McgConfig = McgConfig(), workers=None):
    jobs = [(cfg, v, a, t) for v in cfg.variants for a in cfg.alphas for t in range(cfg.trials)]
    rows = run_trials(_mcg_trial, jobs, workers)
    return rows, summarize(rows, ["variant", "alpha"], "decode_error", cfg.seed) + \
        summarize(rows, ["variant", "alpha"], "return", cfg.seed)


# -- prefix-tree search cost ---------------------------------------------------------


@dataclass
class SearchNodesConfig:
    max_len: int = 24
    m: int = 40
    trials: int = 20
    seed: int = 0


def _search_trial(job):
    cfg, trial = job
    prior = default_plain_prior(cfg.max_len)
    cover = default_cover()
    s = trial_seed(cfg.seed, trial)
    plain = sample(prior, s)
    eos = prior.eos
    x = tuple(v for v in plain if v != eos)
    pset = PrefixTreePartitionSet(prior, cfg.max_len)
    CouplerSession(pset, cover, seed=s).run(x, cfg.m)
    return [{"seed": s, "iteration": k, "touched": st.touched, "materialized": st.materialized}
            for k, st in enumerate(pset.search_log)]


def search_nodes_experiment(cfg: SearchNodesConfig = SearchNodesConfig(), workers=None):
    """Nodes touched by each max-entropy search against tree size.

    The summary reports the mean touched count per materialized-size bin
    and the log-log slope of touched against materialized; a slope below
    one means the search cost grows sublinearly in the tree size.
    """
    jobs = [(cfg, t) for t in range(cfg.trials)]
    rows = [r for rs in run_trials(_search_trial, jobs, workers) for r in rs]
    touched = np.array([r["touched"] for r in rows], dtype=float)
    size = np.array([r["materialized"] for r in rows], dtype=float)
    bins = np.unique(np.floor(np.log2(size)).astype(int))
    summary = []
    for b in bins:
        sel = np.floor(np.log2(size)) == b
        mean, lo, hi = bootstrap_ci(touched[sel], cfg.seed)
        summary.append({"size_bin": f"[{2 ** b},{2 ** (b + 1)})", "n": int(sel.sum()),
                        "mean_touched": mean, "ci_low": lo, "ci_high": hi,
                        "mean_materialized": float(size[sel].mean())})
    slope = float(np.polyfit(np.log(size), np.log(touched), 1)[0]) if len(rows) > 1 else 0.0
    summary.append({"loglog_slope": slope, "mean_touched": float(touched.mean()),
                    "mean_materialized": float(size.mean())})
    return rows, summary


EXPERIMENTS = {
    "stego": (StegoConfig, stego_experiment),
    "merging": (MergingConfig, merging_experiment),
    "linguistic": (LinguisticConfig, linguistic_experiment),
    "mcg": (McgConfig, mcg_experiment),
    "search-nodes": (SearchNodesConfig, search_nodes_experiment),
}
