"""Markov coding games on tabular MDPs.

A sender must act well in an MDP while letting a receiver, who watches the
trajectory, infer a private message.  The sender first computes a
maximum-entropy policy by soft value iteration; then, at every step, it
couples the message posterior with the policy's action distribution at the
current state and samples its action from the coupling given the message.
Since the coupling's action marginal is the policy, expected return is
unchanged.  Environment transitions come from a separate random stream.

MDP file format (JSON)::

    {"n_states": S, "n_actions": A, "horizon": T,
     "init": [S floats],
     "transitions": [S][A][S floats],
     "rewards": [S][A][S floats]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp, softmax

from .arimec import PrefixTreePartitionSet
from .partitions import FactoredPartitionSet, SingletonPartitionSet, couple_step
from .probcore import SUM_TOL, CorruptionError, DecodeError


@dataclass
class TabularMDP:
    transitions: np.ndarray  # (S, A, S)
    rewards: np.ndarray  # (S, A, S)
    horizon: int
    init: np.ndarray  # (S,)

    def __post_init__(self):
        self.transitions = np.asarray(self.transitions, dtype=np.float64)
        self.rewards = np.asarray(self.rewards, dtype=np.float64)
        self.init = np.asarray(self.init, dtype=np.float64)
        S, A, S2 = self.transitions.shape
        if S != S2 or self.rewards.shape != (S, A, S) or self.init.shape != (S,):
            raise ValueError("inconsistent MDP shapes")
        if self.horizon < 1:
            raise ValueError("horizon must be a positive integer")
        if np.abs(self.transitions.sum(axis=2) - 1).max() > SUM_TOL or self.transitions.min() < 0:
            raise ValueError("transition rows must be distributions")
        if abs(self.init.sum() - 1) > SUM_TOL or self.init.min() < 0:
            raise ValueError("initial state distribution invalid")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transitions.shape[1]

    def to_json(self) -> str:
        return json.dumps({
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "horizon": self.horizon,
            "init": self.init.tolist(),
            "transitions": self.transitions.tolist(),
            "rewards": self.rewards.tolist(),
        }, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "TabularMDP":
        d = json.loads(text)
        mdp = cls(d["transitions"], d["rewards"], int(d["horizon"]), d["init"])
        if (mdp.n_states, mdp.n_actions) != (d["n_states"], d["n_actions"]):
            raise ValueError("declared dimensions disagree with the tables")
        return mdp


def load_mdp(path) -> TabularMDP:
    return TabularMDP.from_json(Path(path).read_text())


def save_mdp(mdp: TabularMDP, path) -> None:
    Path(path).write_text(mdp.to_json())


def chain_mdp(n_states: int = 5, horizon: int = 12, slip: float = 0.1,
              goal_reward: float = 1.0) -> TabularMDP:
    """Left/right chain.  Action 1 moves right, action 0 left; with
    probability ``slip`` the move is reversed.  Entering the last state pays
    ``goal_reward`` and it is absorbing."""
    S = n_states
    P = np.zeros((S, 2, S))
    R = np.zeros((S, 2, S))
    for s in range(S):
        if s == S - 1:
            P[s, :, s] = 1.0
            continue
        left, right = max(s - 1, 0), s + 1
        P[s, 1, right] += 1 - slip
        P[s, 1, left] += slip
        P[s, 0, left] += 1 - slip
        P[s, 0, right] += slip
        R[s, :, S - 1] = goal_reward
    init = np.zeros(S)
    init[0] = 1.0
    return TabularMDP(P, R, horizon, init)


def bandit_mdp(rewards, horizon: int = 1) -> TabularMDP:
    """One state with a deterministic self-loop; ``rewards`` per action."""
    r = np.asarray(rewards, dtype=np.float64)
    A = r.size
    return TabularMDP(np.ones((1, A, 1)), r.reshape(1, A, 1), horizon, [1.0])


@dataclass
class SoftPolicy:
    probs: np.ndarray  # (T, S, A)
    values: np.ndarray  # (T + 1, S), nats scaled by alpha
    alpha: float

    def __call__(self, t: int, s: int) -> np.ndarray:
        return self.probs[t, s]


def soft_value_iteration(mdp: TabularMDP, alpha: float) -> SoftPolicy:
    """Finite-horizon soft Bellman backups.

    Q_t(s, a) = E[r + V_{t+1}(s')],  V_t(s) = alpha * log sum_a exp(Q_t / alpha),
    pi_t(a | s) = softmax(Q_t(s, .) / alpha).
    """
    if not alpha > 0:
        raise ValueError("temperature must be positive")
    T, S, A = mdp.horizon, mdp.n_states, mdp.n_actions
    V = np.zeros((T + 1, S))
    pi = np.zeros((T, S, A))
    expected_r = np.einsum("sap,sap->sa", mdp.transitions, mdp.rewards)
    for t in range(T - 1, -1, -1):
        Q = expected_r + mdp.transitions @ V[t + 1]
        V[t] = alpha * logsumexp(Q / alpha, axis=1)
        pi[t] = softmax(Q / alpha, axis=1)
    return SoftPolicy(pi, V, float(alpha))


# -- message spaces ---------------------------------------------------------


def message_space(prior, variant: str):
    """Partition set over fixed-length messages.

    ``arimec`` uses the autoregressive prior; ``fimec`` is the uniform-prior
    baseline with one component per position; ``timec`` tabulates the exact
    prior over all messages (small spaces only).
    """
    n, V = int(prior.max_len), prior.alphabet_size
    if getattr(prior, "eos", None) is not None:
        raise ValueError("message priors here are fixed-length (no end symbol)")
    if variant == "arimec":
        return PrefixTreePartitionSet(prior, n)
    if variant == "fimec":
        return FactoredPartitionSet([np.full(V, 1.0 / V)] * n)
    if variant == "timec":
        pset = PrefixTreePartitionSet(prior, n)
        return SingletonPartitionSet([pset.element_prior(x) for x in all_messages(V, n)])
    raise ValueError(f"unknown variant {variant!r}")


def all_messages(V: int, n: int):
    return list(np.ndindex(*(V,) * n)) if n else [()]


def to_element(x, variant: str, V: int):
    x = tuple(int(v) for v in x)
    if variant == "timec":
        idx = 0
        for v in x:
            idx = idx * V + v
        return idx
    return x


def from_element(e, variant: str, V: int, n: int) -> tuple:
    if variant == "timec":
        return all_messages(V, n)[int(e)]
    return tuple(int(v) for v in e)


# -- episodes ---------------------------------------------------------------


@dataclass
class Episode:
    states: list[int]
    actions: list[int]
    rewards: list[float]
    policy_dists: list[np.ndarray] = field(default_factory=list)
    action_marginals: list[np.ndarray] = field(default_factory=list)
    posteriors: list[np.ndarray] = field(default_factory=list)

    @property
    def total_return(self) -> float:
        return float(sum(self.rewards))


def _rngs(seed: int):
    ss = np.random.SeedSequence(seed)
    coupling, env = ss.spawn(2)
    return (np.random.Generator(np.random.Philox(coupling)),
            np.random.Generator(np.random.Philox(env)))


def _action_marginal(pset, nu, merge, elements, belief):
    """Exact action distribution of the coupler with the message drawn from
    ``belief`` (a distribution over ``elements``)."""
    out = np.zeros(nu.size)
    for a in np.flatnonzero(nu > 0):
        try:
            _, p = couple_step(pset.clone(), nu, merge=merge, y=int(a), track=elements)
        except DecodeError:
            continue
        out[a] = belief @ p
    return out


def meme_encode(message, prior, mdp: TabularMDP, policy: SoftPolicy, *, variant: str = "arimec",
                merge: bool = False, seed: int = 0, check: bool = False) -> Episode:
    """Play one episode while encoding ``message`` into the actions.

    With ``check``, every step also records the exact message-marginalized
    action distribution and the sender's message posterior over all
    messages (small message spaces only).
    """
    V, n = prior.alphabet_size, int(prior.max_len)
    pset = message_space(prior, variant)
    x = to_element(message, variant, V)
    if pset.element_prior(x) <= 0:
        raise CorruptionError("message has zero prior probability")
    coupling_rng, env_rng = _rngs(seed)
    elements = [to_element(e, variant, V) for e in all_messages(V, n)] if check else None
    belief = None
    if check:
        belief = np.array([pset.element_prior(e) for e in elements])
    ep = Episode([], [], [])
    s = int(env_rng.choice(mdp.n_states, p=mdp.init))
    for t in range(mdp.horizon):
        nu = policy(t, s)
        ep.states.append(s)
        ep.policy_dists.append(nu.copy())
        if check:
            ep.action_marginals.append(_action_marginal(pset, nu, merge, elements, belief))
        a, lik = couple_step(pset, nu, merge=merge, x=x, rng=coupling_rng, track=elements)
        if check:
            belief = belief * lik / (belief @ lik)
            ep.posteriors.append(belief.copy())
        s2 = int(env_rng.choice(mdp.n_states, p=mdp.transitions[s, a]))
        ep.actions.append(int(a))
        ep.rewards.append(float(mdp.rewards[s, a, s2]))
        s = s2
    ep.states.append(s)
    return ep


def meme_decode(states, actions, prior, policy: SoftPolicy, *, variant: str = "arimec",
                merge: bool = False, check: bool = False):
    """MAP message from an observed trajectory.

    Returns ``(message, posteriors)``; ``posteriors`` lists the receiver's
    posterior over all messages after each step when ``check`` is set.
    """
    V, n = prior.alphabet_size, int(prior.max_len)
    pset = message_space(prior, variant)
    elements = [to_element(e, variant, V) for e in all_messages(V, n)] if check else None
    belief = np.array([pset.element_prior(e) for e in elements]) if check else None
    posteriors = []
    for t, (s, a) in enumerate(zip(states, actions)):
        _, lik = couple_step(pset, policy(t, s), merge=merge, y=int(a), track=elements)
        if check:
            belief = belief * lik / (belief @ lik)
            posteriors.append(belief.copy())
    return from_element(pset.map_estimate(), variant, V, n), posteriors
