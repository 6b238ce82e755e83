"""End-to-end acceptance criteria, one test per criterion.

Each test prints one "[ACCEPT] criterion-N pass|fail <detail>" line.
Tolerances and runtime bounds are pinned in the asserts; the desk runs
use the shipped default configs and seeds.
"""

import time

import numpy as np
import pytest

from ldgan.config import default_config
from ldgan.lda import (
    LabeledFeatureBatch,
    compute_scatter,
    fit_lda,
    hyperplane_scores,
    ls_equivalence_oracle,
)
from ldgan.metrics import write_metrics
from ldgan.net import MlpNetwork
from ldgan.objectives import (
    disc_eigen_objective,
    gen_conditional_objective,
    gen_unsupervised_objective,
)
from ldgan.rng import make_rng, split_streams
from ldgan.streaming import StreamStats
from ldgan.train import ProbeConfig, build_networks, generalization_probe
from ldgan.train import train_conditional, train_unsupervised, train_wgan_baseline


def report(criterion: int, ok: bool, detail: str) -> None:
    print(f"[ACCEPT] criterion-{criterion} {'pass' if ok else 'fail'} {detail}")
    assert ok, f"criterion-{criterion}: {detail}"


def clustered(rng, n_per, dim, classes, spread=0.5, sep=2.0):
    feats, labels = [], []
    for c in range(classes):
        center = rng.normal(size=dim) * sep
        feats.append(rng.normal(size=(n_per, dim)) * spread + center)
        labels.extend([c] * n_per)
    return np.vstack(feats), np.array(labels, dtype=int)


# ---------------------------------------------------------------- criterion 1


def test_criterion_1_streaming_equals_batch():
    started = time.perf_counter()
    rng = make_rng(101)
    worst = 0.0
    for trial in range(10):
        classes = 2 + trial % 3
        feats, labels = clustered(rng, n_per=12, dim=4, classes=classes)
        order = np.argsort(rng.uniform(size=feats.shape[0]), kind="stable")
        feats, labels = feats[order], labels[order]
        stats = StreamStats(class_count=classes, dim=4, eta=1.0)
        cuts = [0, feats.shape[0] // 3, 2 * feats.shape[0] // 3, feats.shape[0]]
        for lo, hi in zip(cuts, cuts[1:]):
            stats.accumulate(LabeledFeatureBatch(feats[lo:hi], labels[lo:hi], classes))
        streamed = stats.snapshot(1e-4)
        direct = fit_lda(LabeledFeatureBatch(feats, labels, classes), 1e-4)
        scale = max(float(np.abs(direct.eigenvalues).max()), 1e-30)
        worst = max(
            worst,
            float(np.abs(streamed.eigenvalues - direct.eigenvalues).max()) / scale,
        )
        worst = max(worst, float(np.abs(streamed.class_means - direct.class_means).max()))
    elapsed = time.perf_counter() - started
    ok = worst <= 1e-10 and elapsed < 1.0
    report(1, ok, f"eta=1 stream vs batch worst rel {worst:.2e}, {elapsed:.2f}s (< 1s)")


# ---------------------------------------------------------------- criterion 2


def test_criterion_2_least_squares_equivalence():
    started = time.perf_counter()
    rng = make_rng(202)
    worst_cos = 1.0
    for _ in range(50):
        feats, labels = clustered(rng, n_per=10 + int(rng.uniform() * 10), dim=3, classes=2)
        _, _, cosine = ls_equivalence_oracle(LabeledFeatureBatch(feats, labels, 2))
        worst_cos = min(worst_cos, cosine)
    elapsed = time.perf_counter() - started
    ok = worst_cos >= 1.0 - 1e-8 and elapsed < 5.0
    report(2, ok, f"min |cosine| {worst_cos:.12f} over 50 batches, {elapsed:.2f}s (< 5s)")


# ---------------------------------------------------------------- criterion 3


def fd_worst(value_fn, grad, point, step=1e-6):
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
        worst = max(worst, abs((up - down) / (2.0 * step) - grad_flat[k]) / scale)
    return worst


def test_criterion_3_finite_difference_suite():
    started = time.perf_counter()
    rng = make_rng(303)
    worst = 0.0

    for trial in range(20):
        classes = 2 + trial % 2
        feats, labels = clustered(rng, n_per=5, dim=3, classes=classes)
        grad = disc_eigen_objective(LabeledFeatureBatch(feats, labels, classes), 1e-3)
        worst = max(
            worst,
            fd_worst(
                lambda: disc_eigen_objective(
                    LabeledFeatureBatch(feats, labels, classes), 1e-3
                ).objective_value,
                grad.grads,
                feats,
            ),
        )

    for _ in range(20):
        feats, labels = clustered(rng, n_per=6, dim=3, classes=2)
        model = fit_lda(LabeledFeatureBatch(feats, labels, 2), 1e-3)
        gen_feats = rng.normal(size=(4, 3))
        grad = gen_unsupervised_objective(model, gen_feats)
        worst = max(
            worst,
            fd_worst(
                lambda: gen_unsupervised_objective(model, gen_feats).objective_value,
                grad.grads,
                gen_feats,
            ),
        )

    for _ in range(20):
        feats, labels = clustered(rng, n_per=5, dim=3, classes=3)
        model = fit_lda(LabeledFeatureBatch(feats, labels, 3), 1e-3)
        gen_feats = rng.normal(size=(4, 3))
        targets = (rng.uniform(size=4) * 3).astype(int)
        grad = gen_conditional_objective(model, gen_feats, targets)
        worst = max(
            worst,
            fd_worst(
                lambda: gen_conditional_objective(
                    model, gen_feats, targets
                ).objective_value,
                grad.grads,
                gen_feats,
            ),
        )

    for _ in range(20):
        net = MlpNetwork.initialize([3, 6, 2], "leaky_relu", "tanh", rng, weight_scale=0.4)
        x = rng.normal(size=(4, 3))
        weighting = rng.normal(size=(4, 2))

        def net_value():
            out, _ = net.forward(x)
            return float(np.sum(out * weighting))

        _, tape = net.forward(x)
        param_grads, input_grad = net.backward(tape, weighting)
        worst = max(worst, fd_worst(net_value, input_grad, x))
        for (dw, db), layer in zip(param_grads, net.layers):
            worst = max(worst, fd_worst(net_value, dw, layer.weight))
            worst = max(worst, fd_worst(net_value, db, layer.bias))

    elapsed = time.perf_counter() - started
    ok = worst <= 1e-5 and elapsed < 30.0
    report(3, ok, f"max rel error {worst:.2e} over 20 instances each, {elapsed:.1f}s (< 30s)")


# ---------------------------------------------------------------- criterion 4


def test_criterion_4_binary_l2_reduction():
    rng = make_rng(404)
    worst = 0.0
    for _ in range(20):
        feats, labels = clustered(rng, n_per=8, dim=3, classes=2)
        model = fit_lda(LabeledFeatureBatch(feats, labels, 2), 1e-3)
        gen_feats = rng.normal(size=(6, 3))
        # pin the batch mean to the model's generated-class mean
        gen_feats = gen_feats - gen_feats.mean(axis=0) + model.class_means[1]
        grads = gen_unsupervised_objective(model, gen_feats).grads
        w = model.projection[0]
        s = float(w @ w)
        mu_hat = gen_feats.mean(axis=0)
        oracle_row = s * (mu_hat - model.class_means[0]) / gen_feats.shape[0]
        worst = max(worst, float(np.abs(grads - oracle_row[None, :]).max()))
    ok = worst <= 1e-10
    report(4, ok, f"max elementwise gap {worst:.2e} over 20 models (<= 1e-10)")


# ------------------------------------------------------- criteria 5, 6, 7, 10


@pytest.fixture(scope="module")
def unsup_run():
    cfg = default_config("train-unsup")
    gen, ext, sampler, zs = build_networks(cfg, "train-unsup")
    started = time.perf_counter()
    result = train_unsupervised(cfg, gen, ext, sampler, zs)
    elapsed = time.perf_counter() - started
    return cfg, gen, result, elapsed


@pytest.fixture(scope="module")
def cond_run():
    cfg = default_config("train-cond")
    gen, ext, sampler, zs = build_networks(cfg, "train-cond")
    started = time.perf_counter()
    result = train_conditional(cfg, gen, ext, sampler, zs)
    elapsed = time.perf_counter() - started
    return cfg, gen, result, elapsed


def test_criterion_5_unsupervised_desk_run(unsup_run):
    cfg, gen, result, elapsed = unsup_run
    target = np.array(cfg.dataset.means[0])
    z = split_streams(cfg.seed + 1)["training"].normal(size=(2000, cfg.z_dim))
    samples, _ = gen.forward(z)
    gap = float(np.linalg.norm(samples.mean(axis=0) - target))
    finite = all(
        np.isfinite([r.lambda_mean, r.mean_discrepancy, r.var_real, r.var_gen]).all()
        for r in result.records
    )
    last = result.records[-1]
    moment_ratio = abs(last.var_gen - last.var_real) / max(last.var_real, 1e-30)
    ok = gap <= 0.2 and finite and elapsed < 60.0 and moment_ratio <= 1.0
    report(
        5,
        ok,
        f"mean gap {gap:.4f} (<= 0.2), moment ratio {moment_ratio:.3f} (<= 1), "
        f"{elapsed:.1f}s (< 60s), finite={finite}",
    )


def test_criterion_6_conditional_desk_run(cond_run):
    cfg, gen, result, elapsed = cond_run
    targets_xy = np.array(cfg.dataset.means)
    classes = cfg.gen_classes
    per = 400
    z = split_streams(cfg.seed + 1)["training"].normal(size=(classes * per, cfg.z_dim))
    labels = np.repeat(np.arange(classes), per)
    codes = np.zeros((classes * per, classes))
    codes[np.arange(classes * per), labels] = 1.0
    samples, _ = gen.forward(np.hstack([z, codes]))

    nearest_ok = True
    for c in range(classes):
        mean_c = samples[labels == c].mean(axis=0)
        dists = np.linalg.norm(targets_xy - mean_c, axis=1)
        nearest_ok = nearest_ok and int(np.argmin(dists)) == c

    fresh_sampler = build_networks(cfg, "train-cond")[2]
    real_x, real_y = fresh_sampler.sample_per_class(400)
    fresh_model = fit_lda(LabeledFeatureBatch(real_x, real_y, cfg.real_classes))
    scores = hyperplane_scores(fresh_model, samples)
    predicted = np.array(fresh_model.class_ids)[np.argmax(scores, axis=1)]
    accuracy = float((predicted == labels).mean())

    ok = nearest_ok and accuracy >= 0.9 and elapsed < 120.0
    report(
        6,
        ok,
        f"nearest={nearest_ok}, fresh-fit accuracy {accuracy:.3f} (>= 0.9), "
        f"{elapsed:.1f}s (< 120s)",
    )


def test_criterion_7_eigenvalue_trend(cond_run):
    _, _, result, _ = cond_run
    lam = np.array([r.lambda_mean for r in result.records])
    window = max(1, lam.shape[0] // 10)
    first = float(lam[:window].mean())
    last = float(lam[-window:].mean())
    ok = last < first
    report(7, ok, f"lambda_mean first10% {first:.3f} -> last10% {last:.3f} (must fall)")


# ---------------------------------------------------------------- criterion 8


def test_criterion_8_generalization_probe():
    rng = make_rng(808)
    feats, labels = clustered(rng, n_per=60, dim=4, classes=3, spread=0.4, sep=3.0)
    probe = ProbeConfig(iterations=5, epsilon=1e-8, mode="identity")

    copies = generalization_probe(feats, labels, feats.copy(), labels.copy(), 3, probe)
    real_vals = np.sort(copies.real_model.eigenvalues)[::-1]
    mixed_vals = np.sort(copies.mixed_model.eigenvalues)[::-1]
    top = mixed_vals[: real_vals.shape[0]]
    rel = float(
        np.max(np.abs(top - real_vals) / np.maximum(np.abs(real_vals), 1e-30))
    )
    extras = mixed_vals[real_vals.shape[0] :]
    extras_ok = bool(np.all(extras <= 1e-8 * mixed_vals[0]))

    shifted = generalization_probe(feats, labels, feats + 50.0, labels.copy(), 3, probe)
    exceeds = float(shifted.mixed_model.eigenvalues.mean()) > float(
        copies.mixed_model.eigenvalues.mean()
    )

    ok = rel <= 1e-6 and extras_ok and exceeds
    report(
        8,
        ok,
        f"copies top-eigen rel {rel:.2e} (<= 1e-6), extras small={extras_ok}, "
        f"shifted mean exceeds copies={exceeds}",
    )


# ---------------------------------------------------------------- criterion 9


def test_criterion_9_wgan_baseline_contract():
    cfg = default_config("train-wgan")
    gen, critic, sampler, zs = build_networks(cfg, "train-wgan")
    worst_param = []

    def check(net):
        worst_param.append(max(float(np.abs(p).max()) for p in net.parameters()))

    started = time.perf_counter()
    result = train_wgan_baseline(cfg, gen, critic, sampler, zs, on_critic_step=check)
    elapsed = time.perf_counter() - started

    clip_ok = max(worst_param) <= cfg.clip + 1e-12
    steps_ok = len(worst_param) == cfg.iterations * 5
    ratio_ok = all((r.i_d, r.i_g) == (5, 1) for r in result.records)
    finite = all(
        np.isfinite([r.lambda_mean, r.mean_discrepancy, r.var_real, r.var_gen]).all()
        for r in result.records
    )
    ok = clip_ok and steps_ok and ratio_ok and finite
    report(
        9,
        ok,
        f"clip max |param| {max(worst_param):.4f} (<= {cfg.clip}), 5:1 ratio={ratio_ok}, "
        f"no NaN={finite}, {elapsed:.1f}s",
    )


# --------------------------------------------------------------- criterion 10


def test_criterion_10_determinism(unsup_run, cond_run, tmp_path):
    reruns = {}
    cfg_u = default_config("train-unsup")
    nets = build_networks(cfg_u, "train-unsup")
    reruns["unsup"] = train_unsupervised(cfg_u, *nets).records
    cfg_c = default_config("train-cond")
    nets = build_networks(cfg_c, "train-cond")
    reruns["cond"] = train_conditional(cfg_c, *nets).records

    identical = True
    for name, baseline in (("unsup", unsup_run[2].records), ("cond", cond_run[2].records)):
        a, b = tmp_path / f"{name}_a.jsonl", tmp_path / f"{name}_b.jsonl"
        write_metrics(baseline, str(a))
        write_metrics(reruns[name], str(b))
        identical = identical and a.read_bytes() == b.read_bytes()
    report(10, identical, "criteria 5 and 6 reruns produce byte-identical metrics files")
