"""Per-sample prediction histories, the memorized set, and the recall /
precision metrics over memorized or selected sample sets.

A sample counts as memorized when the plurality label of its recent
predictions equals its (possibly noisy) training label; argmax ties break
toward the lowest class index. Metrics that would divide by zero return None
rather than 0 so logs can distinguish "not applicable" from a true zero.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DimensionError, NotReadyError


class PredictionHistory:
    """Ring buffer of the last q epoch-level predicted labels per sample."""

    def __init__(self, n_samples, num_classes, q):
        if n_samples < 1 or num_classes < 2 or q < 1:
            raise DimensionError("invalid history dimensions")
        self.n_samples = n_samples
        self.num_classes = num_classes
        self.q = q
        self._buf = np.full((n_samples, q), -1, dtype=np.int64)
        self._next = 0      # slot written by the next record_epoch
        self._fill = 0      # recorded epochs, capped at q
        self.epoch = 0      # total epochs recorded

    @property
    def fill(self):
        return self._fill

    def _check_labels(self, labels, n):
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != (n,):
            raise DimensionError(f"expected {n} labels, got shape {labels.shape}")
        if labels.size and (labels.min() < 0 or labels.max() >= self.num_classes):
            raise DimensionError("predicted label out of range")
        return labels

    def record_epoch(self, predicted_labels):
        """Push one epoch of predictions for every sample, evicting the oldest
        entry once the buffer is full."""
        labels = self._check_labels(predicted_labels, self.n_samples)
        self._buf[:, self._next] = labels
        self._next = (self._next + 1) % self.q
        self._fill = min(self._fill + 1, self.q)
        self.epoch += 1

    def overwrite_latest(self, indices, predicted_labels):
        """Replace the newest recorded slot for the given samples (used for
        in-epoch refreshes after a mini-batch update)."""
        if self._fill == 0:
            raise NotReadyError("no epoch recorded yet")
        indices = np.asarray(indices, dtype=np.int64)
        if indices.size and (indices.min() < 0 or indices.max() >= self.n_samples):
            raise DimensionError("sample index out of range")
        labels = self._check_labels(predicted_labels, indices.shape[0])
        latest = (self._next - 1) % self.q
        self._buf[indices, latest] = labels

    def label_counts(self, indices=None):
        """(n, k) matrix of per-class counts over the recorded window."""
        if self._fill == 0:
            raise NotReadyError("no epoch recorded yet")
        buf = self._buf if indices is None else self._buf[np.asarray(indices)]
        window = buf[:, :self._fill] if self._fill < self.q else buf
        counts = np.zeros((window.shape[0], self.num_classes), dtype=np.int64)
        for j in range(window.shape[1]):
            np.add.at(counts, (np.arange(window.shape[0]), window[:, j]), 1)
        return counts

    def label_prob(self, sample_idx, y):
        """Fraction of the recorded window predicting class y for one sample."""
        if self._fill == 0:
            raise NotReadyError("no epoch recorded yet")
        if not 0 <= sample_idx < self.n_samples:
            raise DimensionError("sample index out of range")
        window = self._buf[sample_idx, :self._fill]
        return float(np.count_nonzero(window == y)) / self._fill

    def buffer_view(self, sample_idx):
        """Recorded labels for one sample in chronological order."""
        if self._fill == 0:
            return np.empty(0, dtype=np.int64)
        if self._fill < self.q:
            return self._buf[sample_idx, :self._fill].copy()
        order = (np.arange(self.q) + self._next) % self.q
        return self._buf[sample_idx, order].copy()

    def memorized_mask(self, noisy_labels):
        """Boolean mask: plurality label of the window equals the noisy label."""
        noisy_labels = self._check_labels(noisy_labels, self.n_samples)
        counts = self.label_counts()
        plurality = np.argmax(counts, axis=1)  # lowest index wins ties
        return plurality == noisy_labels

    def memorized_set(self, noisy_labels):
        """Sorted indices of memorized samples (the set M_t)."""
        return np.flatnonzero(self.memorized_mask(noisy_labels))


@dataclass
class SelectionReport:
    label_recall: Optional[float]
    label_precision: Optional[float]
    f1: float
    set_size: int


def mr_mp(memorized, noisy_labels, true_labels):
    """(memorization recall, memorization precision) of the index set.

    Recall is the memorized fraction of all correctly-labeled samples;
    precision is the correctly-labeled fraction of the memorized set. Either
    is None when its denominator is empty.
    """
    memorized = np.asarray(memorized, dtype=np.int64)
    noisy_labels = np.asarray(noisy_labels)
    true_labels = np.asarray(true_labels)
    if noisy_labels.shape != true_labels.shape:
        raise DimensionError("label vectors differ in length")
    clean = noisy_labels == true_labels
    n_clean = int(np.count_nonzero(clean))
    hits = int(np.count_nonzero(clean[memorized])) if memorized.size else 0
    mr = hits / n_clean if n_clean > 0 else None
    mp = hits / memorized.size if memorized.size > 0 else None
    return mr, mp


def label_metrics(selected, noisy_labels, true_labels):
    """Label recall / precision / F1 of a selected (presumed-clean) index set."""
    lr, lp = mr_mp(selected, noisy_labels, true_labels)
    if lr is None:
        lr = 0.0 if np.asarray(selected).size == 0 else None
    if lr is not None and lp is not None and (lr + lp) > 0:
        f1 = 2.0 * lp * lr / (lp + lr)
    else:
        f1 = 0.0
    return SelectionReport(lr, lp, f1, int(np.asarray(selected).size))
