"""Maximal safe set: the evolving pool of presumed-clean sample indices used
for the supervised loss in the evolution phase.

Evolution per mini-batch B: newly memorized out-of-set members join, in-set
members whose plurality prediction no longer matches their label leave.
Indices outside B never change membership.
"""

import numpy as np

from .errors import DimensionError


class MaximalSafeSet:
    def __init__(self, members, creation_epoch, n_samples):
        members = np.asarray(members, dtype=np.int64)
        if members.size and (members.min() < 0 or members.max() >= n_samples):
            raise DimensionError("safe-set index out of range")
        self._members = set(int(i) for i in members)
        self.creation_epoch = creation_epoch
        self.n_samples = n_samples
        self.total_added = 0
        self.total_removed = 0

    @property
    def size(self):
        return len(self._members)

    def __contains__(self, idx):
        return int(idx) in self._members

    def as_sorted_array(self):
        return np.array(sorted(self._members), dtype=np.int64)

    def member_mask(self, indices):
        indices = np.asarray(indices, dtype=np.int64)
        return np.array([int(i) in self._members for i in indices], dtype=bool)

    def write_indices(self, path):
        """Sorted member indices, one per line (audit export)."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i in self.as_sorted_array():
                fh.write(f"{i}\n")


def init_safe_set(memorized_indices, t_tr, n_samples):
    """Seed the safe set from the memorized set at the transition epoch."""
    return MaximalSafeSet(np.unique(np.asarray(memorized_indices, dtype=np.int64)),
                          t_tr, n_samples)


def evolve(safe, batch_indices, hist, noisy_labels):
    """Apply one evolution step over a mini-batch; mutates `safe`.

    Returns (C_new, R_new) as sorted index arrays: batch samples newly
    memorized into the set and batch members newly forgotten out of it.
    """
    batch = np.unique(np.asarray(batch_indices, dtype=np.int64))
    if batch.size and (batch.min() < 0 or batch.max() >= safe.n_samples):
        raise DimensionError("batch index out of range")
    noisy_labels = np.asarray(noisy_labels, dtype=np.int64)
    counts = hist.label_counts(batch)
    memorized = np.argmax(counts, axis=1) == noisy_labels[batch]
    in_set = safe.member_mask(batch)
    c_new = batch[memorized & ~in_set]
    r_new = batch[~memorized & in_set]
    safe._members.update(int(i) for i in c_new)
    safe._members.difference_update(int(i) for i in r_new)
    safe.total_added += c_new.size
    safe.total_removed += r_new.size
    return c_new, r_new
