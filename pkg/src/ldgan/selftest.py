"""Built-in numerical self-checks for the CLI selftest verb.

Two suites: central finite differences against every analytic gradient
(discriminator eigen objective, both generator objectives, network
backward), and split-stream accumulation at eta = 1 against one-shot
batch scatter. Pass/fail only; the full test suite carries the
exhaustive versions.
"""

from __future__ import annotations

import numpy as np

from .lda import LabeledFeatureBatch, compute_scatter, fit_lda
from .net import MlpNetwork
from .objectives import (
    disc_eigen_objective,
    gen_conditional_objective,
    gen_unsupervised_objective,
)
from .rng import make_rng
from .streaming import StreamStats

FD_TOLERANCE = 1e-5
STREAM_TOLERANCE = 1e-10


def _fd_check(value_fn, grad, point, step=1e-6):
    """Max relative error of grad against central differences at point."""
    worst = 0.0
    scale = max(float(np.abs(grad).max()), 1e-8)
    flat = point.ravel()
    grad_flat = grad.ravel()
    for k in range(flat.shape[0]):
        orig = flat[k]
        flat[k] = orig + step
        up = value_fn()
        flat[k] = orig - step
        down = value_fn()
        flat[k] = orig
        numeric = (up - down) / (2.0 * step)
        worst = max(worst, abs(numeric - grad_flat[k]) / scale)
    return worst


def _clustered_batch(rng, n_per, dim, classes):
    feats, labels = [], []
    for c in range(classes):
        center = rng.normal(size=dim) * 2.0
        feats.append(rng.normal(size=(n_per, dim)) * 0.5 + center)
        labels.extend([c] * n_per)
    return np.vstack(feats), np.array(labels, dtype=int)


def _check_disc_gradient(rng) -> float:
    feats, labels = _clustered_batch(rng, n_per=5, dim=3, classes=2)
    eps = 1e-3
    grad = disc_eigen_objective(LabeledFeatureBatch(feats, labels, 2), eps)

    def value():
        return disc_eigen_objective(LabeledFeatureBatch(feats, labels, 2), eps).objective_value

    return _fd_check(value, grad.grads, feats)


def _check_gen_gradients(rng) -> float:
    feats, labels = _clustered_batch(rng, n_per=6, dim=3, classes=2)
    model = fit_lda(LabeledFeatureBatch(feats, labels, 2), 1e-3)
    gen_feats = rng.normal(size=(4, 3))
    worst = 0.0

    unsup = gen_unsupervised_objective(model, gen_feats)
    worst = max(
        worst,
        _fd_check(
            lambda: gen_unsupervised_objective(model, gen_feats).objective_value,
            unsup.grads,
            gen_feats,
        ),
    )

    feats3, labels3 = _clustered_batch(rng, n_per=5, dim=3, classes=3)
    model3 = fit_lda(LabeledFeatureBatch(feats3, labels3, 3), 1e-3)
    targets = np.array([0, 2, 1, 0])
    cond = gen_conditional_objective(model3, gen_feats, targets)
    worst = max(
        worst,
        _fd_check(
            lambda: gen_conditional_objective(model3, gen_feats, targets).objective_value,
            cond.grads,
            gen_feats,
        ),
    )
    return worst


def _check_net_backward(rng) -> float:
    net = MlpNetwork.initialize([3, 5, 2], "leaky_relu", "tanh", rng, weight_scale=0.4)
    x = rng.normal(size=(4, 3))
    weighting = rng.normal(size=(4, 2))

    def value():
        out, _ = net.forward(x)
        return float(np.sum(out * weighting))

    out, tape = net.forward(x)
    param_grads, input_grad = net.backward(tape, weighting)
    worst = _fd_check(value, input_grad, x)
    for (dw, db), layer in zip(param_grads, net.layers):
        worst = max(worst, _fd_check(value, dw, layer.weight))
        worst = max(worst, _fd_check(value, db, layer.bias))
    return worst


def _check_stream_equivalence(rng) -> float:
    """eta=1 two-batch accumulation equals union batch scatter."""
    worst = 0.0
    for classes in (2, 3):
        feats, labels = _clustered_batch(rng, n_per=8, dim=4, classes=classes)
        perm = np.argsort(rng.uniform(size=feats.shape[0]), kind="stable")
        feats, labels = feats[perm], labels[perm]
        stats = StreamStats(class_count=classes, dim=4, eta=1.0)
        half = feats.shape[0] // 2
        stats.accumulate(LabeledFeatureBatch(feats[:half], labels[:half], classes))
        stats.accumulate(LabeledFeatureBatch(feats[half:], labels[half:], classes))
        whole = compute_scatter(LabeledFeatureBatch(feats, labels, classes))
        scale = max(float(np.abs(whole.sw).max()), 1.0)
        worst = max(worst, float(np.abs(stats.sw_hat - whole.sw).max()) / scale)
        sb, means, _ = stats.between_scatter()
        sb_scale = max(float(np.abs(whole.sb).max()), 1.0)
        worst = max(worst, float(np.abs(sb - whole.sb).max()) / sb_scale)
        worst = max(worst, float(np.abs(means - whole.class_means).max()))
    return worst


def run_selftest():
    """Returns (all_passed, report_lines)."""
    rng = make_rng(2024)
    lines = []
    ok = True
    checks = [
        ("finite-difference: discriminator eigen gradient", _check_disc_gradient, FD_TOLERANCE),
        ("finite-difference: generator objectives", _check_gen_gradients, FD_TOLERANCE),
        ("finite-difference: network backward", _check_net_backward, FD_TOLERANCE),
        ("stream equivalence: eta=1 split == batch", _check_stream_equivalence, STREAM_TOLERANCE),
    ]
    for name, fn, tol in checks:
        errors = [fn(rng) for _ in range(5)]
        worst = max(errors)
        passed = worst <= tol
        ok = ok and passed
        lines.append(
            f"[SELFTEST] {name}: worst rel error {worst:.3e} "
            f"(tolerance {tol:.0e}) {'pass' if passed else 'FAIL'}"
        )
    return ok, lines
