"""
Merging symbols that say the same thing
========================================

If two covertext symbols induce the same update of the message posterior,
choosing between them carries no information; the randomness is wasted.
Merging treats them as one symbol and then spends that choice on a second
coupling, against the target restricted to the group.
"""

import numpy as np

from entrocoup import default_cover, greedy_mec, joint_entropy_estimate, merge_columns, stego_encode
from entrocoup.partitions import SingletonPartitionSet, StepRecord, couple_step

# the smallest example: a fair bit against [1/4, 1/4, 1/2]
c = greedy_mec([0.5, 0.5], [0.25, 0.25, 0.5])
print(c.to_dense())
mc = merge_columns(c)
print("groups", mc.groups)
print("merged table\n", mc.table)

rec: list[StepRecord] = []
couple_step(SingletonPartitionSet([0.5, 0.5]), np.array([0.25, 0.25, 0.5]), merge=True, y=0, record=rec)
print("second coupling is against", rec[1].table.sum(axis=0))

# with many small components, merging keeps the joint entropy near its floor
cover = default_cover()
rng = np.random.default_rng(0)
bits = rng.integers(0, 2, 80).astype(np.uint8)
for n in (10, 40, 80):
    row = []
    for merge in (False, True):
        t = stego_encode(bits, cover, 30, variant="fimec", merge=merge, seed=1, component_bits=80 // n)
        row.append(joint_entropy_estimate(t.stegotext, cover, t.posterior_entropy))
    print("%2d components: H(X, Y) without merging %.2f, with merging %.2f" % (n, *row))

