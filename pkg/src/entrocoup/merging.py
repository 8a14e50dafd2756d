"""Merging: group coupling columns that induce the same posterior update.

When several realizations of the emitted symbol leave the block posterior
in the same state, sampling among them carries no information about the
message.  Merging samples the group instead and spends the remaining
choice on a further coupling (see :func:`entrocoup.partitions.couple_step`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .probcore import SparseCoupling

#: Per-entry tolerance for "identical" normalized columns.
MERGE_TOL = 1e-12


@dataclass(frozen=True)
class MergedCoupling:
    groups: list[list[int]]
    table: np.ndarray  # rows x groups
    within: list[np.ndarray]  # per group, distribution over its members

    def expand(self) -> np.ndarray:
        """Rebuild the ungrouped rows x columns table."""
        ncols = sum(len(g) for g in self.groups)
        out = np.zeros((self.table.shape[0], ncols))
        for k, (g, w) in enumerate(zip(self.groups, self.within)):
            out[:, g] = np.outer(self.table[:, k], w)
        return out


def group_columns(table: np.ndarray, tol: float = MERGE_TOL) -> list[list[int]]:
    """Partition column indices by equality of their normalized columns.

    Groups are ordered by their smallest member; zero columns stay
    singletons.
    """
    table = np.asarray(table, dtype=np.float64)
    sums = table.sum(axis=0)
    groups: list[list[int]] = []
    reps: list[np.ndarray] = []
    rep_group: list[int] = []
    for j in range(table.shape[1]):
        if not sums[j] > 0:
            groups.append([j])
            continue
        col = table[:, j] / sums[j]
        if reps:
            diff = np.max(np.abs(np.stack(reps, axis=1) - col[:, None]), axis=0)
            hit = np.flatnonzero(diff <= tol)
            if hit.size:
                groups[rep_group[hit[0]]].append(j)
                continue
        reps.append(col)
        rep_group.append(len(groups))
        groups.append([j])
    return groups


def merge_columns(c: SparseCoupling | np.ndarray, tol: float = MERGE_TOL) -> MergedCoupling:
    table = c.to_dense() if isinstance(c, SparseCoupling) else np.asarray(c, dtype=np.float64)
    groups = group_columns(table, tol)
    grouped = np.stack([table[:, g].sum(axis=1) for g in groups], axis=1)
    colsum = table.sum(axis=0)
    within = []
    for g in groups:
        w = colsum[g]
        s = w.sum()
        within.append(w / s if s > 0 else np.full(len(g), 1.0 / len(g)))
    return MergedCoupling(groups, grouped, within)
