"""
Autoregressive messages and the prefix-tree search
===================================================

When the hidden message is itself a sentence from a language model, the
encoder works on a prefix tree of that model.  Each node splits the message
space into its children's extensions, everything that does not extend the
node, and the node itself.  Only nodes the search visits are ever built, and
a bound on the entropy of far-away nodes lets the search stop early.
"""

from entrocoup import (
    CouplerSession,
    PrefixTreePartitionSet,
    default_cover,
    default_plain_prior,
    sample,
)

prior = default_plain_prior(max_len=24)
cover = default_cover()

plain = sample(prior, seed=11)
msg = tuple(s for s in plain if s != prior.eos)
print("plaintext:", " ".join(prior.decode(msg)))

pset = PrefixTreePartitionSet(prior, 24)
sess = CouplerSession(pset, cover, seed=11)
for j in range(12):
    sess.step(msg)
    st = pset.search_log[-1]
    guess = pset.map_estimate()
    right = next((i for i, (a, b) in enumerate(zip(guess, msg)) if a != b), min(len(guess), len(msg)))
    print("step %2d  working depth %2d  touched %2d  tree size %3d  correct prefix %2d"
          % (j, len(pset.working), st.touched, st.materialized, right))

print("decoded so far:", " ".join(prior.decode(pset.map_estimate())))
