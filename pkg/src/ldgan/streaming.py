"""Decayed streaming sufficient statistics for the discriminant fit.

The trainer never keeps past features. Instead it maintains per-class
counts, per-class feature sums, and a within-class scatter accumulator,
all decayed by ``eta`` after every discriminator update. Minibatches
are folded in with the two-set merge identity

    S(A u B) = S(A) + S(B) + W_A W_B / (W_A + W_B) (mu_A - mu_B)(mu_A - mu_B)^T

per class, which makes the accumulator exactly the weighted within-class
scatter of everything seen so far with weight ``eta^age``. With
``eta = 1`` a snapshot therefore reproduces the batch fit on the union
of the accumulated batches.

Single-writer: ``accumulate`` and ``decay`` mutate in program order.
"""

from __future__ import annotations

import numpy as np

from .errors import InsufficientClasses, InvalidInput
from .lda import DEFAULT_EPSILON, LabeledFeatureBatch, LdaModel, model_normals, solve_discriminant
from .linalg import symmetrize


class StreamStats:
    """Decayed counts, sums, and within-scatter for ``class_count`` classes."""

    def __init__(self, class_count: int, dim: int, eta: float = 0.9):
        if class_count < 2:
            raise InvalidInput("need at least two classes")
        if dim < 1:
            raise InvalidInput("feature dimension must be positive")
        if not (0.0 < eta <= 1.0):
            raise InvalidInput(f"eta must be in (0, 1], got {eta}")
        self.class_count = int(class_count)
        self.dim = int(dim)
        self.eta = float(eta)
        self.class_counts = np.zeros(class_count)
        self.class_sums = np.zeros((class_count, dim))
        self.sw_hat = np.zeros((dim, dim))

    def accumulate(self, batch: LabeledFeatureBatch) -> None:
        """Fold one minibatch into the accumulators (no decay applied)."""
        if batch.dim != self.dim:
            raise InvalidInput(f"feature dim {batch.dim} != stream dim {self.dim}")
        if batch.class_count != self.class_count:
            raise InvalidInput(
                f"batch class count {batch.class_count} != stream {self.class_count}"
            )
        added = np.zeros((self.dim, self.dim))
        for c in range(self.class_count):
            rows = batch.features[batch.labels == c]
            n = rows.shape[0]
            if n == 0:
                continue
            mu_batch = rows.mean(axis=0)
            centered = rows - mu_batch
            added += symmetrize(centered.T @ centered)
            held = self.class_counts[c]
            if held > 0.0:
                gap = self.class_sums[c] / held - mu_batch
                added += (held * n / (held + n)) * np.outer(gap, gap)
            self.class_counts[c] += n
            self.class_sums[c] += rows.sum(axis=0)
        self.sw_hat = symmetrize(self.sw_hat + added)

    def decay(self) -> None:
        """Scale every accumulator by ``eta`` (one aging step)."""
        self.class_counts *= self.eta
        self.class_sums *= self.eta
        self.sw_hat *= self.eta

    def populated(self) -> np.ndarray:
        return np.nonzero(self.class_counts > 0.0)[0]

    def between_scatter(self):
        """Between-class scatter and means of the current accumulators.

        Returns ``(sb, class_means, populated_ids)`` over classes whose
        decayed count is still positive.
        """
        pop = self.populated()
        if pop.size == 0:
            raise InsufficientClasses("no populated classes")
        means = self.class_sums[pop] / self.class_counts[pop, None]
        total = self.class_counts[pop].sum()
        mean = self.class_sums[pop].sum(axis=0) / total
        sb = np.zeros((self.dim, self.dim))
        for idx, c in enumerate(pop):
            gap = means[idx] - mean
            sb += self.class_counts[c] * np.outer(gap, gap)
        return symmetrize(sb), means, pop

    def snapshot(self, epsilon: float = DEFAULT_EPSILON) -> LdaModel:
        """Fit the discriminant model to the current decayed statistics.

        Raises
        ------
        InsufficientClasses
            Fewer than two classes hold positive decayed count (for
            example after decay underflowed a class to zero).
        """
        sb, means, pop = self.between_scatter()
        if pop.size < 2:
            raise InsufficientClasses(f"need >= 2 populated classes, got {pop.size}")
        values, vectors, eps_used = solve_discriminant(sb, self.sw_hat, pop.size - 1, epsilon)
        return LdaModel(
            eigenvalues=values,
            projection=vectors,
            class_means=means,
            normals=model_normals(vectors, means),
            epsilon=eps_used,
            class_ids=tuple(int(c) for c in pop),
        )
