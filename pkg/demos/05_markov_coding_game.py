"""
Sending a message through actions
==================================

An agent acts in a small chain MDP with a soft-optimal policy.  Every action
is drawn from a coupling between the policy and the receiver's belief about
the message, so the action distribution, and hence expected return, is that
of the policy, and an observer of the trajectory decodes the message.
"""

import numpy as np

from entrocoup import chain_mdp, default_message_prior, meme_decode, meme_encode, sample, soft_value_iteration

mdp = chain_mdp(n_states=5, horizon=4)
prior = default_message_prior(length=3)

for alpha in (0.1, 0.5, 2.0):
    policy = soft_value_iteration(mdp, alpha)
    errors, returns = 0, []
    for seed in range(50):
        msg = tuple(sample(prior, seed))
        ep = meme_encode(msg, prior, mdp, policy, seed=seed)
        est, _ = meme_decode(ep.states[:-1], ep.actions, prior, policy)
        errors += est != msg
        returns.append(ep.total_return)
    print("alpha %.1f: decode errors %2d/50, mean return %.2f" % (alpha, errors, np.mean(returns)))

# the per-step check: action marginal over the message equals the policy
policy = soft_value_iteration(mdp, 0.5)
ep = meme_encode((0, 1, 2), prior, mdp, policy, seed=3, check=True)
gap = max(np.abs(a - b).max() for a, b in zip(ep.action_marginals, ep.policy_dists))
print("largest per-step deviation from the policy: %.1e" % gap)
