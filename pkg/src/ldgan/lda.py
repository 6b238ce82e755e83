"""Multiclass linear discriminant fits over feature batches.

Scatter matrices follow the raw-sum convention: the within-class scatter
is the sum over classes of sample outer products about the class mean,
and the between-class scatter weights each class by its sample count
about the overall mean. Nothing is divided by N; the sums grow with the
batch and the eigenvalues of the pencil stay scale-free.

The fit solves the generalized eigenproblem ``S_b w = lambda S_w w``
after adding a trace-proportional ridge to ``S_w``, keeping the leading
``C - 1`` pairs under the normalization ``w_i^T S_w w_j = delta_ij``.

Hyperplane scores implement the discriminant ``H_c(u) = u A_c^T - 1/2
M_c A_c^T`` with normals ``A = M W^T W``. For single-direction (binary)
models the rank-one Gram collapses to the scalar ``s = w . w`` and the
normals reduce to ``s * M``; generated-versus-real scoring then compares
plain feature-space distances to the class means, which is the form the
generator objectives differentiate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientClasses, InvalidInput, NotPositiveDefinite
from .linalg import generalized_eig, symmetrize

DEFAULT_EPSILON = 1e-4

# Retained eigenvalues closer than this trigger one refit with a nudged
# ridge so the eigen-derivative stays well defined.
_DEGENERACY_GAP = 1e-9
_DEGENERACY_NUDGE = 1.0 + 1e-7


@dataclass
class LabeledFeatureBatch:
    """N feature rows with integer class labels in ``[0, class_count)``."""

    features: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise InvalidInput(f"features must be (N, M) with N >= 1, got {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise InvalidInput("labels must be one integer per feature row")
        if not np.all(np.isfinite(self.features)):
            raise InvalidInput("features contain non-finite entries")
        if self.class_count < 1:
            raise InvalidInput("class_count must be positive")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise InvalidInput("labels must lie in [0, class_count)")

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass
class ScatterPair:
    """Within/between scatter sums plus the per-class moments behind them."""

    sw: np.ndarray
    sb: np.ndarray
    class_counts: np.ndarray
    class_means: np.ndarray
    mean: np.ndarray


@dataclass
class LdaModel:
    """Fitted discriminant: eigenpairs, projection, and class hyperplanes.

    ``projection`` stacks the retained eigenvectors as rows (L x M with
    L = populated classes - 1); ``class_means`` and ``normals`` have one
    row per populated class, in ascending original-id order recorded by
    ``class_ids``.
    """

    eigenvalues: np.ndarray
    projection: np.ndarray
    class_means: np.ndarray
    normals: np.ndarray
    epsilon: float
    class_ids: tuple = field(default_factory=tuple)

    @property
    def class_count(self) -> int:
        return self.class_means.shape[0]


def compute_scatter(batch: LabeledFeatureBatch) -> ScatterPair:
    """Raw within- and between-class scatter sums of a batch.

    Returns
    -------
    ScatterPair
        ``sw = sum_c sum_{i in c} (u_i - mu_c)(u_i - mu_c)^T`` and
        ``sb = sum_c N_c (mu_c - mu)(mu_c - mu)^T``, both exactly
        symmetric, with class counts, class means (zero rows for absent
        classes) and the overall mean.
    """
    m = batch.dim
    counts = np.zeros(batch.class_count)
    means = np.zeros((batch.class_count, m))
    sw = np.zeros((m, m))
    mean = batch.features.mean(axis=0)
    for c in range(batch.class_count):
        rows = batch.features[batch.labels == c]
        if rows.shape[0] == 0:
            continue
        counts[c] = rows.shape[0]
        means[c] = rows.mean(axis=0)
        centered = rows - means[c]
        sw += centered.T @ centered
    sb = np.zeros((m, m))
    for c in range(batch.class_count):
        if counts[c] == 0:
            continue
        gap = means[c] - mean
        sb += counts[c] * np.outer(gap, gap)
    return ScatterPair(
        sw=symmetrize(sw), sb=symmetrize(sb), class_counts=counts, class_means=means, mean=mean
    )


def regularizer_coefficient(sw: np.ndarray, epsilon: float) -> float:
    """Ridge magnitude ``epsilon * (trace(sw) / M + 1)`` used by every fit."""
    m = sw.shape[0]
    return float(epsilon) * (float(np.trace(sw)) / m + 1.0)


def solve_discriminant(sb: np.ndarray, sw: np.ndarray, n_retain: int, epsilon: float):
    """Leading ``n_retain`` eigenpairs of the regularized scatter pencil.

    Shared solve behind :func:`fit_lda`, the streaming snapshot, and the
    eigenvalue objective. Applies the trace-proportional ridge, escalates
    it once by a factor of 10 if the Cholesky factorization rejects
    ``sw``, and refits once with the ridge nudged by (1 + 1e-7) when two
    retained eigenvalues sit closer than 1e-9.

    Returns ``(values, vectors, epsilon_used)`` with values clamped at
    zero and vectors row-stacked, ``w_i^T (sw + ridge) w_j = delta_ij``.
    """
    m = sw.shape[0]
    eye = np.eye(m)

    def attempt(eps):
        pairs = generalized_eig(sb, sw + regularizer_coefficient(sw, eps) * eye)
        return pairs.values[:n_retain], pairs.vectors[:n_retain]

    eps = float(epsilon)
    try:
        values, vectors = attempt(eps)
    except NotPositiveDefinite:
        eps = eps * 10.0
        values, vectors = attempt(eps)

    kept = min(n_retain, m)
    if kept > 1:
        gaps = np.abs(np.diff(values[:kept]))
        if gaps.size and gaps.min() < _DEGENERACY_GAP:
            eps = eps * _DEGENERACY_NUDGE
            values, vectors = attempt(eps)

    if kept < n_retain:
        # feature dimension below class count - 1: pad with null directions
        values = np.concatenate([values, np.zeros(n_retain - kept)])
        vectors = np.vstack([vectors, np.zeros((n_retain - kept, m))])
    return np.maximum(values, 0.0), vectors, eps


def model_normals(projection: np.ndarray, class_means: np.ndarray) -> np.ndarray:
    """Hyperplane normals ``A`` for the stored projection.

    ``A = M W^T W`` for multi-direction projections; for a single
    direction the rank-one Gram is collapsed to the scalar ``s = w . w``
    (``A = s M``), the binary simplification the generator objective
    relies on.
    """
    if projection.shape[0] == 1:
        w = projection[0]
        return float(w @ w) * class_means
    return class_means @ (projection.T @ projection)


def fit_lda(batch: LabeledFeatureBatch, epsilon: float = DEFAULT_EPSILON) -> LdaModel:
    """Fit the regularized discriminant model to one labeled batch.

    Parameters
    ----------
    batch : LabeledFeatureBatch
        At least two populated classes.
    epsilon : float
        Ridge scale (>= 0; zero skips regularization and only succeeds
        on nondegenerate scatter).

    Raises
    ------
    InsufficientClasses
        Fewer than two populated classes.
    NotPositiveDefinite
        Regularized within-scatter still not positive definite after the
        single automatic escalation.
    """
    if epsilon < 0.0:
        raise InvalidInput("epsilon must be >= 0")
    scatter = compute_scatter(batch)
    populated = np.nonzero(scatter.class_counts > 0)[0]
    if populated.size < 2:
        raise InsufficientClasses(f"need >= 2 populated classes, got {populated.size}")
    values, vectors, eps_used = solve_discriminant(
        scatter.sb, scatter.sw, populated.size - 1, epsilon
    )
    means = scatter.class_means[populated]
    return LdaModel(
        eigenvalues=values,
        projection=vectors,
        class_means=means,
        normals=model_normals(vectors, means),
        epsilon=eps_used,
        class_ids=tuple(int(c) for c in populated),
    )


def hyperplane_scores(model: LdaModel, features: np.ndarray) -> np.ndarray:
    """Discriminant scores ``H_c(u) = u A_c^T - 1/2 M_c A_c^T``.

    Row i, column j holds the score of feature row i against the model's
    j-th populated class. The argmax over columns is the nearest
    projected class mean (feature-space nearest mean for binary models).
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 2 or features.shape[1] != model.class_means.shape[1]:
        raise InvalidInput(f"features must be (N, {model.class_means.shape[1]})")
    if not np.all(np.isfinite(features)):
        raise InvalidInput("features contain non-finite entries")
    offsets = 0.5 * np.sum(model.class_means * model.normals, axis=1)
    return features @ model.normals.T - offsets


def ls_equivalence_oracle(batch: LabeledFeatureBatch, epsilon: float = DEFAULT_EPSILON):
    """Binary LDA direction versus coded ridge least squares.

    Fits the discriminant on a two-class batch (class 0 real, class 1
    generated) and, independently, solves the ridge system
    ``(Xc^T Xc + R) w = Xc^T t`` on centered features with target codes
    ``(N_r + N_g) / N_r`` and ``-(N_r + N_g) / N_g``, ``R`` being the
    same trace-proportional ridge the fit uses. The two directions agree
    up to scale and sign.

    Returns
    -------
    (lda_direction, ls_direction, cosine) : (ndarray, ndarray, float)
        ``cosine`` is the absolute cosine between the directions.
    """
    scatter = compute_scatter(batch)
    populated = np.nonzero(scatter.class_counts > 0)[0]
    if populated.size != 2:
        raise InsufficientClasses("the least-squares equivalence is a binary statement")
    model = fit_lda(batch, epsilon)
    lda_dir = model.projection[0]

    n_real = scatter.class_counts[populated[0]]
    n_gen = scatter.class_counts[populated[1]]
    total = n_real + n_gen
    codes = np.where(batch.labels == populated[0], total / n_real, -total / n_gen)
    centered = batch.features - scatter.mean
    ridge = regularizer_coefficient(scatter.sw, epsilon) * np.eye(batch.dim)
    # independent route on purpose: numpy's solver, not the package Cholesky
    ls_dir = np.linalg.solve(centered.T @ centered + ridge, centered.T @ codes)

    denom = float(np.linalg.norm(lda_dir) * np.linalg.norm(ls_dir))
    cosine = 0.0 if denom == 0.0 else float(abs(np.dot(lda_dir, ls_dir)) / denom)
    return lda_dir, ls_dir, cosine
