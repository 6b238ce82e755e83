"""Synthetic mixtures and IDX image ingestion.

Synthetic datasets are Gaussian mixtures (a ring is a mixture with
means on a circle). Sampling is stratified: component counts follow the
weights by largest remainder, so equal weights and a divisible n give
exactly equal counts. IDX files are parsed bit-exactly per the format:
big-endian magic and dimensions, unsigned-byte payload; pixels map to
[-1, 1] via p / 127.5 - 1 to match a Tanh output head.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidInput, NotPositiveDefinite
from .linalg import cholesky
from .rng import Rng, make_rng

_IMAGES_MAGIC = 0x00000803
_LABELS_MAGIC = 0x00000801


@dataclass
class DatasetSpec:
    """Declarative dataset description.

    kind "gaussian_mixture": means (C, d) with per-component covariances
    (scalar, diagonal vector, or full matrix each) and positive weights
    summing to 1. kind "ring_mixture": arms equally spaced on a circle
    of the given radius with isotropic noise. kind "idx_images": image
    and label file paths plus a block-mean downsample factor.
    """

    kind: str
    means: list = field(default_factory=list)
    covariances: list = field(default_factory=list)
    weights: list = field(default_factory=list)
    radius: float = 3.0
    arms: int = 8
    noise: float = 0.05
    images_path: str = ""
    labels_path: str = ""
    downsample: int = 1
    seed: int = 0


def _expand_covariance(cov, dim: int) -> np.ndarray:
    arr = np.asarray(cov, dtype=float)
    if arr.ndim == 0:
        full = float(arr) * np.eye(dim)
    elif arr.ndim == 1:
        if arr.shape[0] != dim:
            raise InvalidInput("diagonal covariance length must match mean dimension")
        full = np.diag(arr)
    elif arr.ndim == 2:
        if arr.shape != (dim, dim):
            raise InvalidInput("covariance matrix shape must match mean dimension")
        full = (arr + arr.T) / 2.0
    else:
        raise InvalidInput("covariance must be scalar, vector, or matrix")
    return full


def _ring_to_mixture(spec: DatasetSpec) -> DatasetSpec:
    if spec.arms < 1:
        raise InvalidInput("ring needs at least one arm")
    if spec.noise <= 0.0:
        raise InvalidInput("ring noise must be positive")
    angles = 2.0 * np.pi * np.arange(spec.arms) / spec.arms
    means = [[spec.radius * np.cos(a), spec.radius * np.sin(a)] for a in angles]
    return DatasetSpec(
        kind="gaussian_mixture",
        means=means,
        covariances=[spec.noise**2] * spec.arms,
        weights=[1.0 / spec.arms] * spec.arms,
        seed=spec.seed,
    )


def stratified_counts(weights: np.ndarray, n: int) -> np.ndarray:
    """Largest-remainder apportionment of n samples to the weights."""
    exact = weights * n
    counts = np.floor(exact).astype(int)
    short = n - int(counts.sum())
    if short > 0:
        remainders = exact - counts
        # stable: ties go to the earlier component
        order = np.argsort(-remainders, kind="stable")
        counts[order[:short]] += 1
    return counts


class MixtureSampler:
    """Draws stratified labeled samples from a Gaussian mixture.

    Holds the Cholesky factor of every component covariance; all
    randomness comes from the Rng handed in (or the spec seed).
    """

    def __init__(self, spec: DatasetSpec, rng: Rng | None = None):
        if spec.kind == "ring_mixture":
            spec = _ring_to_mixture(spec)
        if spec.kind != "gaussian_mixture":
            raise InvalidInput(f"not a synthetic dataset kind: {spec.kind!r}")
        means = np.asarray(spec.means, dtype=float)
        if means.ndim != 2 or means.shape[0] < 1:
            raise InvalidInput("means must be a (components, dim) list")
        c, dim = means.shape
        covs = spec.covariances if spec.covariances else [1.0] * c
        if len(covs) != c:
            raise InvalidInput("need one covariance per component")
        weights = np.asarray(spec.weights if spec.weights else [1.0 / c] * c, dtype=float)
        if weights.shape != (c,) or np.any(weights <= 0.0):
            raise InvalidInput("weights must be positive, one per component")
        if abs(float(weights.sum()) - 1.0) > 1e-12:
            raise InvalidInput("weights must sum to 1 within 1e-12")
        factors = []
        for cov in covs:
            try:
                factors.append(cholesky(_expand_covariance(cov, dim)))
            except NotPositiveDefinite as exc:
                raise InvalidInput(f"component covariance not positive definite: {exc}") from exc
        self.means = means
        self.factors = factors
        self.weights = weights
        self.dim = dim
        self.components = c
        self.rng = rng if rng is not None else make_rng(spec.seed)

    def sample(self, n: int):
        """n stratified samples; returns (data (n, dim), labels (n,))."""
        if n < 1:
            raise InvalidInput("need n >= 1")
        counts = stratified_counts(self.weights, n)
        return self.sample_counts(counts)

    def sample_per_class(self, per_class: int):
        """Exactly per_class samples from every component."""
        if per_class < 1:
            raise InvalidInput("need per_class >= 1")
        return self.sample_counts(np.full(self.components, per_class, dtype=int))

    def sample_counts(self, counts):
        parts = []
        labels = []
        for c, k in enumerate(counts):
            if k == 0:
                continue
            z = self.rng.normal(size=(int(k), self.dim))
            parts.append(self.means[c] + z @ self.factors[c].T)
            labels.append(np.full(int(k), c, dtype=int))
        return np.vstack(parts), np.concatenate(labels)


def generate_mixture(spec: DatasetSpec, n: int):
    """One-shot stratified draw seeded by the spec's own seed."""
    return MixtureSampler(spec).sample(n)


def _read_u32(buf: bytes, offset: int, path: str) -> int:
    if offset + 4 > len(buf):
        raise FormatError(f"{path}: truncated header")
    return int.from_bytes(buf[offset : offset + 4], "big")


def load_idx(images_path: str, labels_path: str, downsample: int = 1, max_count=None):
    """Parse an IDX image/label file pair into a labeled float dataset.

    Images are block-mean downsampled by the given factor, flattened,
    and mapped to [-1, 1]. Returns (features (N, h*w), labels (N,)).

    Raises
    ------
    FormatError
        Wrong magic, truncated payload, or image/label count mismatch.
    InvalidInput
        Downsample factor < 1 or not dividing the image sides.
    """
    if downsample < 1:
        raise InvalidInput("downsample factor must be >= 1")
    with open(images_path, "rb") as fh:
        img_buf = fh.read()
    with open(labels_path, "rb") as fh:
        lab_buf = fh.read()

    if _read_u32(img_buf, 0, images_path) != _IMAGES_MAGIC:
        raise FormatError(f"{images_path}: bad images magic")
    count = _read_u32(img_buf, 4, images_path)
    rows = _read_u32(img_buf, 8, images_path)
    cols = _read_u32(img_buf, 12, images_path)
    payload = img_buf[16:]
    if len(payload) != count * rows * cols:
        raise FormatError(f"{images_path}: payload holds {len(payload)} bytes, "
                          f"expected {count * rows * cols}")

    if _read_u32(lab_buf, 0, labels_path) != _LABELS_MAGIC:
        raise FormatError(f"{labels_path}: bad labels magic")
    lab_count = _read_u32(lab_buf, 4, labels_path)
    if len(lab_buf) - 8 != lab_count:
        raise FormatError(f"{labels_path}: truncated label payload")
    if lab_count != count:
        raise FormatError(f"image count {count} != label count {lab_count}")

    if rows % downsample or cols % downsample:
        raise InvalidInput(f"downsample {downsample} does not divide {rows}x{cols}")

    if max_count is not None and max_count < count:
        count = int(max_count)
        payload = payload[: count * rows * cols]
    images = np.frombuffer(payload[: count * rows * cols], dtype=np.uint8).astype(float)
    images = images.reshape(count, rows, cols) / 127.5 - 1.0
    if downsample > 1:
        f = downsample
        images = images.reshape(count, rows // f, f, cols // f, f).mean(axis=(2, 4))
    labels = np.frombuffer(lab_buf[8 : 8 + count], dtype=np.uint8).astype(int)
    return images.reshape(count, -1), labels
