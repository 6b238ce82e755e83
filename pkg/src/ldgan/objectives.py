"""Objectives and their exact feature-space gradients.

The discriminator side returns the gradient of the mean retained
eigenvalue with respect to every feature row, using the generalized
eigenpair perturbation ``d lambda_i = w_i^T dS_b w_i - lambda_i w_i^T
dS_w_reg w_i`` under the ``w_i^T S_w_reg w_i = 1`` normalization. All of
the batch's influence is differentiated: the per-class scatter about the
batch mean, the two-set merge term against held statistics, the between
scatter through the merged means, and the trace-proportional ridge.
Held (decayed) statistics are constants, which is exact since they no
longer depend on the live features.

The generator side treats the fitted model as frozen and differentiates
only the ``u A_c^T`` term of the hyperplane scores, matching the
alternating-update structure: hyperplanes come from the last
discriminator snapshot.

All functions here are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientClasses, InvalidInput
from .lda import (
    DEFAULT_EPSILON,
    LabeledFeatureBatch,
    LdaModel,
    hyperplane_scores,
    model_normals,
    solve_discriminant,
)
from .linalg import symmetrize
from .streaming import StreamStats


@dataclass
class FeatureGradient:
    """Objective value plus d(objective)/d(feature row) per sample."""

    objective_value: float
    grads: np.ndarray

    def __post_init__(self):
        self.grads = np.asarray(self.grads, dtype=float)
        if not np.isfinite(self.objective_value) or not np.all(np.isfinite(self.grads)):
            raise InvalidInput("non-finite objective or gradient")


def _empty_history(batch: LabeledFeatureBatch) -> StreamStats:
    return StreamStats(class_count=batch.class_count, dim=batch.dim, eta=1.0)


def _merged_eigen_gradient(stats: StreamStats, batch: LabeledFeatureBatch, epsilon: float):
    """Gradient of the merged-statistics eigenvalue mean w.r.t. the batch.

    Mirrors ``StreamStats.accumulate`` + ``snapshot`` arithmetic exactly,
    so the returned model equals the snapshot the trainer would take
    right after folding this batch in.
    """
    if batch.dim != stats.dim or batch.class_count != stats.class_count:
        raise InvalidInput("batch shape does not match the running statistics")

    dim = stats.dim
    counts = stats.class_counts.copy()
    sums = stats.class_sums.copy()
    added = np.zeros((dim, dim))
    batch_counts = np.zeros(stats.class_count)
    batch_means = np.zeros((stats.class_count, dim))
    merge_gaps = np.zeros((stats.class_count, dim))  # held mean - batch mean
    merge_alpha = np.zeros(stats.class_count)
    for c in range(stats.class_count):
        rows = batch.features[batch.labels == c]
        n = rows.shape[0]
        if n == 0:
            continue
        mu_batch = rows.mean(axis=0)
        centered = rows - mu_batch
        added += symmetrize(centered.T @ centered)
        held = counts[c]
        if held > 0.0:
            gap = sums[c] / held - mu_batch
            alpha = held * n / (held + n)
            added += alpha * np.outer(gap, gap)
            merge_gaps[c] = gap
            merge_alpha[c] = alpha
        batch_counts[c] = n
        batch_means[c] = mu_batch
        counts[c] += n
        sums[c] += rows.sum(axis=0)
    sw = symmetrize(stats.sw_hat + added)

    pop = np.nonzero(counts > 0.0)[0]
    if pop.size < 2:
        raise InsufficientClasses(f"need >= 2 populated classes, got {pop.size}")
    means = sums[pop] / counts[pop, None]
    total = counts[pop].sum()
    mean = sums[pop].sum(axis=0) / total
    sb = np.zeros((dim, dim))
    for idx, c in enumerate(pop):
        gap = means[idx] - mean
        sb += counts[c] * np.outer(gap, gap)
    sb = symmetrize(sb)

    retained = pop.size - 1
    values, vectors, eps_used = solve_discriminant(sb, sw, retained, epsilon)
    model = LdaModel(
        eigenvalues=values,
        projection=vectors,
        class_means=means,
        normals=model_normals(vectors, means),
        epsilon=eps_used,
        class_ids=tuple(int(c) for c in pop),
    )

    # Per-direction projections of the moments the batch can move.
    row_of = {int(c): i for i, c in enumerate(pop)}
    proj_class = vectors @ means.T  # (L, C_pop) merged class means
    proj_total = vectors @ mean  # (L,)
    proj_batch = vectors @ batch_means.T  # (L, class_count)
    proj_gap = vectors @ merge_gaps.T  # (L, class_count) held - batch
    proj_feats = vectors @ batch.features.T  # (L, N)
    wnorm2 = np.sum(vectors * vectors, axis=1)

    labels = batch.labels
    model_col = np.array([row_of[int(c)] for c in labels])
    # d(w S_b w)/du_k = 2 (w . (mu_c - mu)) w for k in class c
    sb_coef = 2.0 * (proj_class[:, model_col] - proj_total[:, None])  # (L, N)
    # d(w S_w w)/du_k: batch scatter term + merge term, both along w
    sw_coef = 2.0 * (proj_feats - proj_batch[:, labels])
    alpha_over_n = np.where(batch_counts > 0.0, merge_alpha / np.maximum(batch_counts, 1.0), 0.0)
    sw_coef += (2.0 * alpha_over_n[labels]) * (-proj_gap[:, labels])
    coef = sb_coef - values[:, None] * sw_coef  # (L, N)

    # ridge chain: d(ridge)/du_k = eps_used / dim * tr(dS_w/du_k)
    trace_vec = 2.0 * (batch.features - batch_means[labels])
    trace_vec += (2.0 * alpha_over_n[labels])[:, None] * (-merge_gaps[labels])
    ridge_weight = float(np.sum(values * wnorm2)) * eps_used / dim

    grads = (coef.T @ vectors - ridge_weight * trace_vec) / retained
    return FeatureGradient(objective_value=float(values.mean()), grads=grads), model


def disc_eigen_objective(
    batch: LabeledFeatureBatch, epsilon: float = DEFAULT_EPSILON
) -> FeatureGradient:
    """Mean retained eigenvalue of the batch fit and its feature gradient.

    The caller maximizes: ascend ``grads`` to increase separation.

    Raises
    ------
    InsufficientClasses
        Fewer than two populated classes in the batch.
    """
    if batch.class_count < 2:
        raise InsufficientClasses("need >= 2 populated classes, got at most 1")
    grad, _ = _merged_eigen_gradient(_empty_history(batch), batch, epsilon)
    return grad


def stream_eigen_objective(
    stats: StreamStats, batch: LabeledFeatureBatch, epsilon: float = DEFAULT_EPSILON
):
    """Eigenvalue objective of held-plus-batch statistics.

    ``stats`` must be the pre-accumulate state. Returns ``(gradient,
    model)`` where ``model`` is exactly the snapshot after folding the
    batch in, and ``gradient`` differentiates the batch's full
    contribution (scatter, merge terms, means, ridge) while the held
    statistics stay constant.
    """
    return _merged_eigen_gradient(stats, batch, epsilon)


def _check_gen_features(model: LdaModel, gen_features) -> np.ndarray:
    feats = np.asarray(gen_features, dtype=float)
    if feats.ndim != 2 or feats.shape[1] != model.class_means.shape[1]:
        raise InvalidInput(f"gen_features must be (N, {model.class_means.shape[1]})")
    if feats.shape[0] < 1:
        raise InvalidInput("need at least one generated sample")
    if not np.all(np.isfinite(feats)):
        raise InvalidInput("gen_features contain non-finite entries")
    return feats


def gen_unsupervised_objective(model: LdaModel, gen_features) -> FeatureGradient:
    """Score gap pulling generated features onto the real hyperplane.

    ``objective_value = mean_i [H_g(u_i) - H_r(u_i)]`` with class 0 real
    and class 1 generated; minimizing it moves samples toward the real
    class. Hyperplanes are constants, so every gradient row is the same
    vector ``(A_g - A_r) / N``.

    Raises
    ------
    InvalidInput
        Model is not binary.
    """
    if model.class_count != 2:
        raise InvalidInput(f"binary model required, got {model.class_count} classes")
    feats = _check_gen_features(model, gen_features)
    scores = hyperplane_scores(model, feats)
    n = feats.shape[0]
    row = (model.normals[1] - model.normals[0]) / n
    grads = np.broadcast_to(row, feats.shape).copy()
    return FeatureGradient(
        objective_value=float(np.mean(scores[:, 1] - scores[:, 0])), grads=grads
    )


def gen_conditional_objective(model: LdaModel, gen_features, target_class) -> FeatureGradient:
    """Score gap pulling each sample toward its target class hyperplane.

    ``objective_value = mean_i sum_{c != t_i} [H_c(u_i) - H_{t_i}(u_i)]``
    over the model's classes; ``grads[i] = (sum_c A_c - C A_{t_i}) / N``.
    ``target_class`` indexes rows of the model (one id per sample).

    Raises
    ------
    InvalidInput
        Any target id outside ``[0, model.class_count)``.
    """
    feats = _check_gen_features(model, gen_features)
    targets = np.asarray(target_class, dtype=int)
    if targets.shape != (feats.shape[0],):
        raise InvalidInput("target_class must supply one id per sample")
    c_total = model.class_count
    if targets.min() < 0 or targets.max() >= c_total:
        raise InvalidInput(f"target ids must lie in [0, {c_total})")
    scores = hyperplane_scores(model, feats)
    per_sample = scores.sum(axis=1) - c_total * scores[np.arange(feats.shape[0]), targets]
    n = feats.shape[0]
    grads = (model.normals.sum(axis=0) - c_total * model.normals[targets]) / n
    return FeatureGradient(objective_value=float(per_sample.mean()), grads=grads)


def wgan_critic_objective(real_scores, fake_scores) -> float:
    """``mean(real_scores) - mean(fake_scores)``; the critic maximizes it."""
    real = np.asarray(real_scores, dtype=float).ravel()
    fake = np.asarray(fake_scores, dtype=float).ravel()
    if real.size == 0 or fake.size == 0:
        raise InvalidInput("score lists must be nonempty")
    if not (np.all(np.isfinite(real)) and np.all(np.isfinite(fake))):
        raise InvalidInput("scores contain non-finite entries")
    return float(real.mean() - fake.mean())


def clip_weights(params, c: float) -> None:
    """Clamp every parameter array into ``[-c, c]`` in place."""
    if c <= 0.0:
        raise InvalidInput("clip bound must be positive")
    for p in params:
        np.clip(p, -c, c, out=p)
