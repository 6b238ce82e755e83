"""Training loops: balanced adversarial runs and LDA probes.

Every outer iteration samples fresh noise and data, asks the balancing
scheme for per-iteration update counts, runs the discriminator phase
(fold features into the decayed statistics, ascend the eigenvalue
objective, decay), then the generator phase against the last fitted
hyperplanes. Feature extraction reruns inside each inner step because
an optimizer step invalidates the previous forward tape.

Determinism: all randomness is drawn from the streams handed in, in a
fixed order per iteration, so a (config, seed) pair reproduces every
metric bit-for-bit. Wall-clock timings are collected separately.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import ScheduleConfig, TrainConfig
from .datasets import MixtureSampler
from .errors import InvalidInput, NotPositiveDefinite, TrainingDiverged
from .lda import LabeledFeatureBatch, LdaModel, fit_lda
from .metrics import MetricsRecord
from .net import MlpNetwork, RmsProp
from .objectives import (
    clip_weights,
    disc_eigen_objective,
    gen_conditional_objective,
    gen_unsupervised_objective,
    stream_eigen_objective,
    wgan_critic_objective,
)
from .rng import split_streams
from .streaming import StreamStats


@dataclass
class TrainResult:
    records: list = field(default_factory=list)
    timings: list = field(default_factory=list)  # (iteration, wall_seconds)


def balance_schedule(scheme: ScheduleConfig, lambda_mean: float):
    """(i_d, i_g) update counts for the current mean eigenvalue.

    Dynamic mode: i_g = max(1, floor(ln lam)), i_d = max(1, floor(ln
    1/lam)) with lam floored at scheme.lambda_floor; more generator
    updates while separation is high, more discriminator updates while
    it is low. Fixed mode returns the configured pair.
    """
    if lambda_mean < 0.0:
        raise InvalidInput("lambda_mean must be >= 0")
    if scheme.mode == "fixed":
        return scheme.fixed_id, scheme.fixed_ig
    lam = max(float(lambda_mean), scheme.lambda_floor)
    i_g = max(1, math.floor(math.log(lam)))
    i_d = max(1, math.floor(math.log(1.0 / lam)))
    return i_d, i_g


def _diverged(message: str, result: TrainResult) -> TrainingDiverged:
    exc = TrainingDiverged(message)
    exc.records = result.records
    exc.timings = result.timings
    return exc


def _require_finite(name: str, arr: np.ndarray, iteration: int, result: TrainResult) -> None:
    if not np.all(np.isfinite(arr)):
        raise _diverged(f"{name} went non-finite at iteration {iteration}", result)


def _guard_objective(fn, iteration: int, result: TrainResult):
    """Inputs are pre-validated finite, so numeric failures inside the
    objective (overflow to inf in scatter products, degenerate factorization)
    are divergence, not caller error."""
    try:
        return fn()
    except (InvalidInput, NotPositiveDefinite) as exc:
        raise _diverged(f"objective failed at iteration {iteration}: {exc}", result) from exc


def _joint_grads(a, b):
    return [(ga[0] + gb[0], ga[1] + gb[1]) for ga, gb in zip(a, b)]


def _optimizer(settings) -> RmsProp:
    return RmsProp(alpha=settings.alpha, rho=settings.rho, stabilizer=settings.stabilizer)


def _moment_record(iteration, lambda_mean, u_real, u_gen, i_d, i_g) -> MetricsRecord:
    gap = u_real.mean(axis=0) - u_gen.mean(axis=0)
    return MetricsRecord(
        iteration=iteration,
        lambda_mean=float(lambda_mean),
        mean_discrepancy=float(np.sqrt(np.dot(gap, gap))),
        var_real=float(u_real.var(axis=0).mean()),
        var_gen=float(u_gen.var(axis=0).mean()),
        i_d=int(i_d),
        i_g=int(i_g),
    )


def train_unsupervised(
    config: TrainConfig,
    generator: MlpNetwork,
    extractor: MlpNetwork,
    sampler: MixtureSampler,
    z_rng,
    on_iteration=None,
) -> TrainResult:
    """Two-class run: real versus generated, dynamically balanced.

    The schedule is fed the previous snapshot's mean eigenvalue (1.0
    before any snapshot exists); that fed value is what dynamic-mode
    metrics log, so records always satisfy
    ``balance_schedule(scheme, lambda_mean) == (i_d, i_g)``.

    Raises
    ------
    TrainingDiverged
        Non-finite features or generator output; partial records ride
        on the exception (``.records``, ``.timings``).
    """
    result = TrainResult()
    opt_d = _optimizer(config.disc_optimizer)
    opt_g = _optimizer(config.gen_optimizer)
    stats = StreamStats(class_count=2, dim=config.feature_dim, eta=config.eta)
    n = config.batch_size
    labels = np.concatenate([np.zeros(n, dtype=int), np.ones(n, dtype=int)])
    lambda_sched = 1.0
    for t in range(config.iterations):
        started = time.perf_counter()
        z_d = z_rng.normal(size=(n, config.z_dim))
        x_g = generator.forward(z_d)[0]
        _require_finite("generator output", x_g, t, result)
        x_r, _ = sampler.sample(n)
        z_g = z_rng.normal(size=(n, config.z_dim))
        i_d, i_g = balance_schedule(config.schedule, lambda_sched)
        logged_lambda = lambda_sched

        model = None
        u_r = u_g = None
        for _ in range(i_d):
            u_g, tape_g = extractor.forward(x_g)
            u_r, tape_r = extractor.forward(x_r)
            _require_finite("features", u_g, t, result)
            _require_finite("features", u_r, t, result)
            batch = LabeledFeatureBatch(np.vstack([u_r, u_g]), labels, 2)
            grad, model = _guard_objective(
                lambda: stream_eigen_objective(stats, batch, config.epsilon), t, result
            )
            stats.accumulate(batch)
            # ascend: feed the optimizer the negated parameter gradient
            real_part, _ = extractor.backward(tape_r, -grad.grads[:n])
            gen_part, _ = extractor.backward(tape_g, -grad.grads[n:])
            opt_d.step(extractor, _joint_grads(real_part, gen_part))
            stats.decay()
        lambda_sched = float(model.eigenvalues.mean())
        if config.schedule.mode == "fixed":
            logged_lambda = lambda_sched

        for _ in range(i_g):
            x_gen, tape_gen = generator.forward(z_g)
            _require_finite("generator output", x_gen, t, result)
            u_gen, tape_ext = extractor.forward(x_gen)
            _require_finite("features", u_gen, t, result)
            objective = _guard_objective(
                lambda: gen_unsupervised_objective(model, u_gen), t, result
            )
            _, input_grad = extractor.backward(tape_ext, objective.grads)
            gen_grads, _ = generator.backward(tape_gen, input_grad)
            opt_g.step(generator, gen_grads)

        result.records.append(_moment_record(t, logged_lambda, u_r, u_g, i_d, i_g))
        result.timings.append((t, time.perf_counter() - started))
        if on_iteration is not None:
            on_iteration(t)
    return result


def _one_hot(class_ids: np.ndarray, width: int) -> np.ndarray:
    out = np.zeros((class_ids.shape[0], width))
    out[np.arange(class_ids.shape[0]), class_ids] = 1.0
    return out


def train_conditional(
    config: TrainConfig,
    generator: MlpNetwork,
    extractor: MlpNetwork,
    sampler: MixtureSampler,
    z_rng,
    on_iteration=None,
) -> TrainResult:
    """Joint LDA over real and generated classes, fixed schedule.

    Real classes keep their ids; generated class c is labeled
    ``real_classes + c`` in the joint fit and targets real class c in
    the generator objective. The generator consumes z concatenated with
    a one-hot class code. Minibatches hold the same count per class.
    """
    if config.schedule.mode != "fixed":
        raise InvalidInput("conditional training uses the fixed schedule")
    c_r, c_g = config.real_classes, config.gen_classes
    if c_g > c_r:
        raise InvalidInput("every generated class needs a real target class")
    if sampler.components != c_r:
        raise InvalidInput(
            f"dataset has {sampler.components} components, config says {c_r} real classes"
        )
    c_tot = c_r + c_g
    per_class = max(1, config.batch_size // c_tot)
    result = TrainResult()
    opt_d = _optimizer(config.disc_optimizer)
    opt_g = _optimizer(config.gen_optimizer)
    stats = StreamStats(class_count=c_tot, dim=config.feature_dim, eta=config.eta)
    gen_classes = np.repeat(np.arange(c_g), per_class)
    onehot = _one_hot(gen_classes, c_g)
    joint_labels = np.concatenate([np.repeat(np.arange(c_r), per_class), c_r + gen_classes])
    n_real = c_r * per_class
    lambda_sched = 1.0
    for t in range(config.iterations):
        started = time.perf_counter()
        z_d = z_rng.normal(size=(gen_classes.shape[0], config.z_dim))
        x_g = generator.forward(np.hstack([z_d, onehot]))[0]
        _require_finite("generator output", x_g, t, result)
        x_r, _ = sampler.sample_per_class(per_class)
        z_g = z_rng.normal(size=(gen_classes.shape[0], config.z_dim))
        i_d, i_g = balance_schedule(config.schedule, lambda_sched)

        model = None
        u_r = u_g = None
        for _ in range(i_d):
            u_g, tape_g = extractor.forward(x_g)
            u_r, tape_r = extractor.forward(x_r)
            _require_finite("features", u_g, t, result)
            _require_finite("features", u_r, t, result)
            batch = LabeledFeatureBatch(np.vstack([u_r, u_g]), joint_labels, c_tot)
            grad, model = _guard_objective(
                lambda: stream_eigen_objective(stats, batch, config.epsilon), t, result
            )
            stats.accumulate(batch)
            real_part, _ = extractor.backward(tape_r, -grad.grads[:n_real])
            gen_part, _ = extractor.backward(tape_g, -grad.grads[n_real:])
            opt_d.step(extractor, _joint_grads(real_part, gen_part))
            stats.decay()
        lambda_sched = float(model.eigenvalues.mean())

        for _ in range(i_g):
            x_gen, tape_gen = generator.forward(np.hstack([z_g, onehot]))
            _require_finite("generator output", x_gen, t, result)
            u_gen, tape_ext = extractor.forward(x_gen)
            _require_finite("features", u_gen, t, result)
            objective = _guard_objective(
                lambda: gen_conditional_objective(model, u_gen, gen_classes), t, result
            )
            _, input_grad = extractor.backward(tape_ext, objective.grads)
            gen_grads, _ = generator.backward(tape_gen, input_grad)
            opt_g.step(generator, gen_grads)

        result.records.append(_moment_record(t, lambda_sched, u_r, u_g, i_d, i_g))
        result.timings.append((t, time.perf_counter() - started))
        if on_iteration is not None:
            on_iteration(t)
    return result


def train_wgan_baseline(
    config: TrainConfig,
    generator: MlpNetwork,
    critic: MlpNetwork,
    sampler: MixtureSampler,
    z_rng,
    on_critic_step=None,
    on_iteration=None,
) -> TrainResult:
    """Weight-clipped critic baseline with a fixed update ratio.

    Every critic step ends with all critic parameters clamped into
    [-clip, clip]; ``on_critic_step(critic)`` fires after the clamp.
    lambda_mean in the metrics is a passive probe: a discriminant fit
    on the critic's last hidden layer over the final critic batch.
    """
    result = TrainResult()
    opt_d = _optimizer(config.disc_optimizer)
    opt_g = _optimizer(config.gen_optimizer)
    n = config.batch_size
    i_d, i_g = config.schedule.fixed_id, config.schedule.fixed_ig
    probe_labels = np.concatenate([np.zeros(n, dtype=int), np.ones(n, dtype=int)])
    ones = np.ones((n, 1))
    for t in range(config.iterations):
        started = time.perf_counter()
        x_r = x_g = None
        for _ in range(i_d):
            z = z_rng.normal(size=(n, config.z_dim))
            x_g = generator.forward(z)[0]
            _require_finite("generator output", x_g, t, result)
            x_r, _ = sampler.sample(n)
            scores_r, tape_r = critic.forward(x_r)
            scores_g, tape_g = critic.forward(x_g)
            _require_finite("critic scores", scores_r, t, result)
            _require_finite("critic scores", scores_g, t, result)
            wgan_critic_objective(scores_r[:, 0], scores_g[:, 0])
            real_part, _ = critic.backward(tape_r, -ones / n)
            gen_part, _ = critic.backward(tape_g, ones / n)
            opt_d.step(critic, _joint_grads(real_part, gen_part))
            clip_weights(critic.parameters(), config.clip)
            critic.mutated()
            if on_critic_step is not None:
                on_critic_step(critic)
        for _ in range(i_g):
            z = z_rng.normal(size=(n, config.z_dim))
            x_gen, tape_gen = generator.forward(z)
            _require_finite("generator output", x_gen, t, result)
            scores, tape_c = critic.forward(x_gen)
            _require_finite("critic scores", scores, t, result)
            _, input_grad = critic.backward(tape_c, -ones / n)
            gen_grads, _ = generator.backward(tape_gen, input_grad)
            opt_g.step(generator, gen_grads)

        hidden_r = critic.hidden_features(x_r)
        hidden_g = critic.hidden_features(x_g)
        probe = _guard_objective(
            lambda: fit_lda(
                LabeledFeatureBatch(np.vstack([hidden_r, hidden_g]), probe_labels, 2),
                config.epsilon,
            ),
            t,
            result,
        )
        result.records.append(
            _moment_record(t, float(probe.eigenvalues.mean()), hidden_r, hidden_g, i_d, i_g)
        )
        result.timings.append((t, time.perf_counter() - started))
        if on_iteration is not None:
            on_iteration(t)
    return result


@dataclass
class ProbeConfig:
    iterations: int = 5
    epsilon: float = 1e-8
    mode: str = "identity"  # or "trained"
    feature_dim: int = 4
    hidden: tuple = (16,)
    alpha: float = 1e-3


@dataclass
class ProbeResult:
    real_curve: np.ndarray
    mixed_curve: np.ndarray
    real_model: LdaModel
    mixed_model: LdaModel


def train_lda_probe(features, labels, class_count: int, probe: ProbeConfig, rng=None):
    """Mean-eigenvalue trajectory of a discriminant fit on one dataset.

    identity mode fits the raw features directly each iteration (a flat
    curve, the exact-eigenvalue reference). trained mode ascends the
    eigenvalue objective through a small extractor and tracks the fit
    of the extracted features as they improve.

    Returns (curve, final_model).
    """
    features = np.asarray(features, dtype=float)
    batch = LabeledFeatureBatch(features, np.asarray(labels, dtype=int), class_count)
    if probe.mode == "identity":
        curve = np.empty(max(1, probe.iterations))
        model = None
        for i in range(curve.shape[0]):
            model = fit_lda(batch, probe.epsilon)
            curve[i] = float(model.eigenvalues.mean())
        return curve, model
    if probe.mode != "trained":
        raise InvalidInput(f"unknown probe mode {probe.mode!r}")
    if rng is None:
        raise InvalidInput("trained probe needs an rng for extractor init")
    sizes = [features.shape[1]] + list(probe.hidden) + [probe.feature_dim]
    extractor = MlpNetwork.initialize(sizes, "leaky_relu", "identity", rng)
    opt = RmsProp(alpha=probe.alpha)
    curve = np.empty(max(1, probe.iterations))
    model = None
    for i in range(curve.shape[0]):
        feats, tape = extractor.forward(features)
        hidden_batch = LabeledFeatureBatch(feats, batch.labels, class_count)
        grad = disc_eigen_objective(hidden_batch, probe.epsilon)
        curve[i] = grad.objective_value
        model = fit_lda(hidden_batch, probe.epsilon)
        param_grads, _ = extractor.backward(tape, -grad.grads)
        opt.step(extractor, param_grads)
    return curve, model


def generalization_probe(
    real_features,
    real_labels,
    gen_features,
    gen_labels,
    class_count: int,
    probe: ProbeConfig = None,
    rng=None,
) -> ProbeResult:
    """Real-only versus real-plus-generated discriminant comparison.

    Fits ``class_count`` real classes alone, then the 2x-class joint
    problem with generated class c relabeled ``class_count + c``. With
    perfect generation the joint fit adds no separability: its top
    eigenvalues match the real-only fit and the extra ones sit at zero.

    Raises
    ------
    InvalidInput
        Mismatched feature dimensions or generated labels not covering
        the same classes.
    """
    if probe is None:
        probe = ProbeConfig()
    real_features = np.asarray(real_features, dtype=float)
    gen_features = np.asarray(gen_features, dtype=float)
    real_labels = np.asarray(real_labels, dtype=int)
    gen_labels = np.asarray(gen_labels, dtype=int)
    if real_features.shape[1] != gen_features.shape[1]:
        raise InvalidInput("real and generated feature dimensions differ")
    for side, labs in (("real", real_labels), ("generated", gen_labels)):
        present = set(int(v) for v in labs)
        if present != set(range(class_count)):
            raise InvalidInput(f"{side} labels must cover exactly classes 0..{class_count - 1}")
    real_curve, real_model = train_lda_probe(
        real_features, real_labels, class_count, probe, rng=rng
    )
    mixed_features = np.vstack([real_features, gen_features])
    mixed_labels = np.concatenate([real_labels, gen_labels + class_count])
    mixed_curve, mixed_model = train_lda_probe(
        mixed_features, mixed_labels, 2 * class_count, probe, rng=rng
    )
    return ProbeResult(
        real_curve=real_curve,
        mixed_curve=mixed_curve,
        real_model=real_model,
        mixed_model=mixed_model,
    )


def build_networks(config: TrainConfig, verb: str):
    """Nets, sampler, and noise stream for a run, from the seed alone.

    Stream use is fixed: "data" feeds the sampler, "generator" and
    "extractor" initialize their networks, "training" supplies noise
    batches during the run.
    """
    streams = split_streams(config.seed)
    sampler = MixtureSampler(config.dataset, streams["data"])
    data_dim = sampler.dim
    gen_in = config.z_dim + (config.gen_classes if verb == "train-cond" else 0)
    generator = MlpNetwork.initialize(
        [gen_in] + [int(h) for h in config.generator_hidden] + [data_dim],
        "leaky_relu",
        config.generator_output,
        streams["generator"],
        output_gain=config.generator_gain,
    )
    head = 1 if verb == "train-wgan" else config.feature_dim
    extractor = MlpNetwork.initialize(
        [data_dim] + [int(h) for h in config.extractor_hidden] + [head],
        "leaky_relu",
        "identity",
        streams["extractor"],
    )
    return generator, extractor, sampler, streams["training"]
