"""Dense feed-forward networks trained with an effective-degree penalty.

The engine is deliberately small: explicit weight lists, plain gradient
descent with optional momentum, and an objective

    L = L_task + lambda_eff(s) * ED_batch

where ED_batch averages the per-path effective degree over paths drawn from
the minibatch and lambda_eff ramps sinusoidally from 0 to the configured
strength.  All path randomness is splittable by (seed, step, path), so a
step can be replayed in isolation.

The module also carries the square-activation network study: six polynomial
regression targets of known total degree, each fit by a fixed architecture
and then measured with every effective-degree variant.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import __version__
from .estimator import (
    EstimatorConfig,
    FunctionOracle,
    anchor_values,
    ed_estimate,
    path_ed_with_gradient,
    softmax,
)
from .reduce import pca_project
from .sampling import PathAbscissas, sample_abscissas

__all__ = [
    "ACTIVATIONS",
    "FeedForwardNet",
    "NonFiniteLossError",
    "TrainingFailure",
    "TrainConfig",
    "StepRecord",
    "PathPlan",
    "plan_paths",
    "ed_penalty",
    "task_loss_and_grad",
    "regularized_step",
    "train",
    "accuracy",
    "one_hot",
    "save_checkpoint",
    "load_checkpoint",
    "make_two_cluster_dataset",
    "PNN_TASKS",
    "PNNTaskResult",
    "PNNStudyReport",
    "build_pnn",
    "pnn_study",
]

ACTIVATIONS = ("relu", "square", "identity")

_CKPT_MAGIC = b"EDNETCK1"


class NonFiniteLossError(RuntimeError):
    """Training objective became NaN or infinite."""


class TrainingFailure(RuntimeError):
    """A study task failed to reach its fit target within the restart budget."""


def _act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "square":
        return z * z
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name: str, z: np.ndarray) -> np.ndarray:
    # relu uses subgradient 0 at the kink, matching sign(0) = 0 in the
    # effective-degree gradient
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "square":
        return 2.0 * z
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


class FeedForwardNet:
    """Dense network with explicit parameter storage; weights[l] is (fan_in, fan_out)."""

    def __init__(self, weights, biases, activations):
        if len(weights) != len(biases) or len(weights) != len(activations):
            raise ValueError("weights, biases and activations must align per layer")
        for name in activations:
            if name not in ACTIVATIONS:
                raise ValueError(f"unknown activation {name!r}")
        for l, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {l} shapes disagree: {w.shape} vs {b.shape}")
            if l and w.shape[0] != weights[l - 1].shape[1]:
                raise ValueError(f"layer {l} fan-in does not match previous fan-out")
        self.weights = [np.array(w, dtype=float) for w in weights]
        self.biases = [np.array(b, dtype=float) for b in biases]
        self.activations = tuple(activations)

    @classmethod
    def create(cls, layer_sizes, activations=None, seed: int = 0, scale: float | None = None):
        """He-style random init; hidden layers default to relu, output to identity."""
        sizes = [int(s) for s in layer_sizes]
        if len(sizes) < 2:
            raise ValueError("need at least an input and an output size")
        n_layers = len(sizes) - 1
        if activations is None:
            activations = ("relu",) * (n_layers - 1) + ("identity",)
        if len(activations) != n_layers:
            raise ValueError("one activation per layer required")
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            s = scale if scale is not None else np.sqrt(2.0 / fan_in)
            weights.append(rng.standard_normal((fan_in, fan_out)) * s)
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, activations)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def clone(self) -> "FeedForwardNet":
        return FeedForwardNet(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activations,
        )

    def forward(self, x: np.ndarray) -> np.ndarray:
        single = np.ndim(x) == 1
        a = np.atleast_2d(np.asarray(x, dtype=float))
        for w, b, name in zip(self.weights, self.biases, self.activations):
            a = _act(name, a @ w + b)
        return a[0] if single else a

    def forward_cached(self, x: np.ndarray):
        """Forward pass keeping preactivations for a later backward call."""
        a = np.asarray(x, dtype=float)
        if a.ndim != 2:
            raise ValueError("cached forward expects a (n, d) batch")
        pre, post = [], [a]
        for w, b, name in zip(self.weights, self.biases, self.activations):
            z = post[-1] @ w + b
            pre.append(z)
            post.append(_act(name, z))
        return post[-1], (pre, post)

    def backward(self, cache, d_out: np.ndarray):
        """Parameter gradients for a cached batch given dL/d(output)."""
        pre, post = cache
        d_weights = [None] * len(self.weights)
        d_biases = [None] * len(self.biases)
        da = np.asarray(d_out, dtype=float)
        for l in range(len(self.weights) - 1, -1, -1):
            dz = da * _act_grad(self.activations[l], pre[l])
            d_weights[l] = post[l].T @ dz
            d_biases[l] = dz.sum(axis=0)
            da = dz @ self.weights[l].T
        return d_weights, d_biases

    def get_flat(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b.ravel())
        return np.concatenate(parts)

    def set_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=float)
        if flat.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters")
        pos = 0
        for w, b in zip(self.weights, self.biases):
            w[...] = flat[pos : pos + w.size].reshape(w.shape)
            pos += w.size
            b[...] = flat[pos : pos + b.size]
            pos += b.size

    def as_oracle(self, name: str = "net") -> FunctionOracle:
        sizes = self.layer_sizes
        return FunctionOracle(
            input_dim=sizes[0], output_dim=sizes[-1], fn=self.forward, name=name
        )


def one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def accuracy(net: FeedForwardNet, inputs: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of argmax predictions matching integer labels."""
    pred = np.argmax(net.forward(inputs), axis=1)
    return float(np.mean(pred == np.asarray(labels, dtype=int)))


def _log_softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def task_loss_and_grad(raw: np.ndarray, targets: np.ndarray, task: str):
    """Loss value and dL/d(raw outputs) for the supported task heads."""
    raw = np.asarray(raw, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if raw.shape != targets.shape:
        raise ValueError("outputs and targets must share a shape")
    n = raw.shape[0]
    if task == "mse":
        diff = raw - targets
        return float(np.mean(diff * diff)), 2.0 * diff / raw.size
    if task == "cross_entropy":
        logp = _log_softmax(raw)
        loss = float(-(targets * logp).sum() / n)
        return loss, (softmax(raw, axis=1) - targets) / n
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for regularized training."""

    task: str = "mse"
    n_steps: int = 1000
    batch_size: int = 32
    step_size: float = 0.05
    momentum: float = 0.0
    reg_strength: float = 0.0
    ramp_fraction: float = 0.3
    reg_paths: int = 8
    resolution: int = 4
    max_degree: int = 3
    damping: float = 1e-6
    basis: str = "chebyshev"
    scheme: str = "randomized_cosine"
    pca_dim: int | None = None
    anchored: bool = False
    seed: int = 0

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(
            n_paths=max(self.reg_paths, 1),
            resolution=self.resolution,
            max_degree=self.max_degree,
            damping=self.damping,
            basis=self.basis,
            scheme=self.scheme,
            pca_dim=self.pca_dim,
            anchored=self.anchored,
            post_softmax=self.task == "cross_entropy",
            seed=self.seed,
        )

    def validate(self) -> None:
        if self.task not in ("mse", "cross_entropy"):
            raise ValueError("task must be 'mse' or 'cross_entropy'")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 so endpoint pairs exist")
        if self.step_size <= 0:
            raise ValueError("step_size must be > 0")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must be in [0, 1)")
        if self.reg_strength < 0:
            raise ValueError("reg_strength must be >= 0")
        if not 0.0 <= self.ramp_fraction <= 1.0:
            raise ValueError("ramp_fraction must be in [0, 1]")
        if self.reg_paths < 0:
            raise ValueError("reg_paths must be >= 0")
        self.estimator_config().validate()

    def fingerprint(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PathPlan:
    """Frozen randomness of one penalty path: endpoints and abscissas."""

    i: int
    j: int
    abscissas: PathAbscissas


def lambda_schedule(step: int, config: TrainConfig) -> float:
    """Sinusoidal ramp from 0 to reg_strength over the first ramp_fraction of steps."""
    if config.reg_strength == 0.0:
        return 0.0
    ramp_steps = int(round(config.ramp_fraction * config.n_steps))
    if ramp_steps <= 0:
        return config.reg_strength
    frac = min(1.0, step / ramp_steps)
    return config.reg_strength * float(np.sin(0.5 * np.pi * frac))


def plan_paths(
    batch: np.ndarray, config: TrainConfig, step: int
) -> list[PathPlan]:
    """Draw the penalty paths for one step; degenerate pairs are dropped."""
    n = batch.shape[0]
    plans: list[PathPlan] = []
    for p in range(config.reg_paths):
        rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(step, 1, p, 0)))
        )
        pair = None
        for _ in range(16):
            i, j = (int(v) for v in rng.integers(0, n, size=2))
            if i != j and np.linalg.norm(batch[i] - batch[j]) > 1e-12:
                pair = (i, j)
                break
        if pair is None:
            continue
        abscissa_seed = int(
            np.random.SeedSequence(config.seed, spawn_key=(step, 1, p, 1)).generate_state(
                1, np.uint64
            )[0]
        )
        abscissas = sample_abscissas(
            config.scheme, config.resolution, anchored=config.anchored, seed=abscissa_seed
        )
        plans.append(PathPlan(i=pair[0], j=pair[1], abscissas=abscissas))
    return plans


def ed_penalty(
    net: FeedForwardNet,
    batch: np.ndarray,
    targets: np.ndarray,
    plans: list[PathPlan],
    config: TrainConfig,
    want_grads: bool = True,
    projections=None,
):
    """Mean path effective degree over the planned paths, with parameter gradients.

    The average divides by the configured path count, so dropped degenerate
    paths contribute zero instead of reweighting the survivors.  Passing the
    projections returned by an earlier call freezes the PCA maps, which is
    what finite-difference checks of the composite objective require.

    Returns (penalty, (d_weights, d_biases) or None, projections).
    """
    ecfg = config.estimator_config()
    n_planned = max(config.reg_paths, 1)
    total = 0.0
    d_w = [np.zeros_like(w) for w in net.weights]
    d_b = [np.zeros_like(b) for b in net.biases]
    out_projections = []
    use_softmax = config.task == "cross_entropy"
    for k, plan in enumerate(plans):
        a = plan.abscissas.alphas[:, None]
        points = a * batch[plan.i] + (1.0 - a) * batch[plan.j]
        raw, cache = net.forward_cached(points)
        values = softmax(raw, axis=1) if use_softmax else raw
        if config.anchored:
            values = anchor_values(
                values, plan.abscissas, targets[plan.i], targets[plan.j]
            )
        if config.pca_dim is not None:
            frozen = (
                projections[k] if projections is not None else pca_project(values, config.pca_dim)
            )
        else:
            frozen = None
        ed_val, grad_vals, _ = path_ed_with_gradient(
            values, plan.abscissas, ecfg, projection=frozen
        )
        out_projections.append(frozen)
        total += ed_val.ed
        if not want_grads:
            continue
        grad_vals = grad_vals / n_planned
        if config.anchored:
            # anchored rows are labels; the model output there is unused
            grad_vals = grad_vals.copy()
            grad_vals[0, :] = 0.0
            grad_vals[-1, :] = 0.0
        if use_softmax:
            probs = softmax(raw, axis=1)
            inner = (grad_vals * probs).sum(axis=1, keepdims=True)
            grad_raw = probs * (grad_vals - inner)
        else:
            grad_raw = grad_vals
        dw_k, db_k = net.backward(cache, grad_raw)
        for l in range(len(d_w)):
            d_w[l] += dw_k[l]
            d_b[l] += db_k[l]
    penalty = total / n_planned
    return penalty, ((d_w, d_b) if want_grads else None), out_projections


@dataclass(frozen=True)
class StepRecord:
    """One training step's losses and effective-degree bookkeeping."""

    step: int
    task_loss: float
    penalty: float
    lambda_eff: float
    total_loss: float
    accuracy: float | None = None


def regularized_step(
    net: FeedForwardNet,
    batch_x: np.ndarray,
    batch_t: np.ndarray,
    config: TrainConfig,
    step: int,
    velocity: tuple[list[np.ndarray], list[np.ndarray]],
) -> StepRecord:
    """One descent step of task loss + lambda(step) * path penalty, in place.

    velocity holds the running momentum buffers (weights, biases) and is
    updated in place.  Raises NonFiniteLossError when the objective blows up,
    before any parameter is touched.
    """
    raw, cache = net.forward_cached(batch_x)
    task_loss, d_raw = task_loss_and_grad(raw, batch_t, config.task)
    d_w, d_b = net.backward(cache, d_raw)
    lam = lambda_schedule(step, config)
    penalty = 0.0
    if config.reg_paths > 0 and config.reg_strength > 0.0:
        plans = plan_paths(batch_x, config, step)
        penalty, grads, _ = ed_penalty(
            net, batch_x, batch_t, plans, config, want_grads=lam > 0.0
        )
        if grads is not None:
            for l in range(len(d_w)):
                d_w[l] += lam * grads[0][l]
                d_b[l] += lam * grads[1][l]
    total = task_loss + lam * penalty
    if not np.isfinite(total):
        raise NonFiniteLossError(f"objective is not finite at step {step}")
    vel_w, vel_b = velocity
    for l in range(len(net.weights)):
        vel_w[l] = config.momentum * vel_w[l] - config.step_size * d_w[l]
        vel_b[l] = config.momentum * vel_b[l] - config.step_size * d_b[l]
        net.weights[l] += vel_w[l]
        net.biases[l] += vel_b[l]
    velocity[0][:] = vel_w
    velocity[1][:] = vel_b
    return StepRecord(
        step=step,
        task_loss=task_loss,
        penalty=penalty,
        lambda_eff=lam,
        total_loss=total,
    )


def train(
    net: FeedForwardNet,
    inputs: np.ndarray,
    targets: np.ndarray,
    config: TrainConfig,
) -> list[StepRecord]:
    """Run the configured number of descent steps in place; returns the log.

    Minibatches are drawn without replacement per step from a splittable
    stream, the penalty uses live per-path PCA (when configured) but
    backpropagates through the frozen projection, and a non-finite objective
    aborts immediately.  Classification runs log full-set accuracy per step.
    """
    config.validate()
    X = np.asarray(inputs, dtype=float)
    T = np.asarray(targets, dtype=float)
    if X.ndim != 2 or T.ndim != 2 or X.shape[0] != T.shape[0]:
        raise ValueError("inputs (n, d) and targets (n, out) must align")
    if X.shape[0] < config.batch_size:
        raise ValueError("batch_size exceeds the dataset")
    velocity = (
        [np.zeros_like(w) for w in net.weights],
        [np.zeros_like(b) for b in net.biases],
    )
    labels = T.argmax(axis=1) if config.task == "cross_entropy" else None
    log: list[StepRecord] = []
    for step in range(config.n_steps):
        batch_rng = np.random.Generator(
            np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(step, 0)))
        )
        if config.batch_size == X.shape[0]:
            idx = np.arange(X.shape[0])
        else:
            idx = batch_rng.choice(X.shape[0], size=config.batch_size, replace=False)
        record = regularized_step(net, X[idx], T[idx], config, step, velocity)
        if labels is not None:
            record = replace(record, accuracy=accuracy(net, X, labels))
        log.append(record)
    return log


def save_checkpoint(
    net: FeedForwardNet, path: str, config: dict | None = None, extra: dict | None = None
) -> None:
    """Write a bit-reproducible checkpoint: JSON header plus raw float64 buffers."""
    arrays = []
    buffers = []
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        arrays.append({"name": f"w{l}", "shape": list(w.shape)})
        buffers.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        arrays.append({"name": f"b{l}", "shape": list(b.shape)})
        buffers.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    header = {
        "version": __version__,
        "layer_sizes": list(net.layer_sizes),
        "activations": list(net.activations),
        "arrays": arrays,
        "config": config or {},
        "extra": extra or {},
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    payload = _CKPT_MAGIC + len(blob).to_bytes(8, "little") + blob + b"".join(buffers)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str) -> tuple[FeedForwardNet, dict]:
    """Read a checkpoint; returns the network and its header."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(_CKPT_MAGIC)] != _CKPT_MAGIC:
        raise ValueError(f"{path} is not a checkpoint file")
    pos = len(_CKPT_MAGIC)
    header_len = int.from_bytes(blob[pos : pos + 8], "little")
    pos += 8
    header = json.loads(blob[pos : pos + header_len])
    pos += header_len
    arrays = {}
    for spec_ in header["arrays"]:
        count = int(np.prod(spec_["shape"])) if spec_["shape"] else 1
        size = count * 8
        arrays[spec_["name"]] = np.frombuffer(
            blob[pos : pos + size], dtype="<f8"
        ).reshape(spec_["shape"])
        pos += size
    n_layers = len(header["layer_sizes"]) - 1
    weights = [arrays[f"w{l}"].copy() for l in range(n_layers)]
    biases = [arrays[f"b{l}"].copy() for l in range(n_layers)]
    return FeedForwardNet(weights, biases, header["activations"]), header


def make_two_cluster_dataset(
    n: int = 512, noise: float = 0.12, seed: int = 7
) -> tuple[np.ndarray, np.ndarray]:
    """Two interleaved crescent clusters in the plane with integer labels."""
    if n < 4:
        raise ValueError("n must be >= 4")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    n0 = n // 2
    n1 = n - n0
    t0 = rng.uniform(0.0, np.pi, size=n0)
    t1 = rng.uniform(0.0, np.pi, size=n1)
    upper = np.stack([np.cos(t0), np.sin(t0)], axis=1)
    lower = np.stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)], axis=1)
    X = np.concatenate([upper, lower]) + rng.standard_normal((n, 2)) * noise
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])
    perm = rng.permutation(n)
    return X[perm], y[perm]


# ---------------------------------------------------------------------------
# square-activation network study


def _t123(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    return x[:, 0], x[:, 1], x[:, 2]


def _target_1(x):
    x1, x2, x3 = _t123(x)
    return np.stack([x3 + 2.0, x2 + 3.0, x1 + 1.0], axis=1)


def _target_2(x):
    x1, x2, x3 = _t123(x)
    return np.stack([x1 * x2, x2 * x3, x1 * x3], axis=1)


def _target_3(x):
    x1, x2, x3 = _t123(x)
    return np.stack(
        [x1 * x2 * x3, x1**2 * x2 * x3**2, x1**2 * x2 * x3 + x2**2 * x3], axis=1
    )


def _scaled(fn, factor):
    return lambda x: factor * fn(x)


# (name, target fn, total degree); tasks 4..6 double tasks 1..3
PNN_TASKS = (
    ("t1", _target_1, 1),
    ("t2", _target_2, 2),
    ("t3", _target_3, 5),
    ("t4", _scaled(_target_1, 2.0), 1),
    ("t5", _scaled(_target_2, 2.0), 2),
    ("t6", _scaled(_target_3, 2.0), 5),
)


def build_pnn(width: int = 16, seed: int = 0, scale: float = 0.35) -> FeedForwardNet:
    """Three square-activation hidden layers and a linear head on 3 inputs."""
    return FeedForwardNet.create(
        (3, width, width, width, 3),
        activations=("square", "square", "square", "identity"),
        seed=seed,
        scale=scale,
    )


@dataclass(frozen=True)
class PNNTaskResult:
    """Trained-network measurements for one study task."""

    task: str
    target_degree: int
    final_mse: float
    converged: bool
    restarts: int
    ed_cheb: float
    ed_norm_cheb: float
    ed_legendre: float
    ed_pca1: float
    ed_pca2: float

    def metrics(self) -> dict[str, float]:
        return {
            "ed_cheb": self.ed_cheb,
            "ed_norm_cheb": self.ed_norm_cheb,
            "ed_legendre": self.ed_legendre,
            "ed_pca1": self.ed_pca1,
            "ed_pca2": self.ed_pca2,
        }


@dataclass(frozen=True)
class PNNStudyReport:
    """All six task rows plus the ordering verdicts the study is about."""

    rows: tuple[PNNTaskResult, ...]
    orderings: dict = field(default_factory=dict)
    norm_gaps: dict = field(default_factory=dict)
    scaling_ok: bool = True
    all_converged: bool = True
    all_ok: bool = False
    config: dict = field(default_factory=dict)


# study evaluation protocol: deterministic abscissas, one shared seed, no
# anchoring, raw (pre-activation-free) outputs
#
# endpoints are drawn from a wider box than the training inputs: on the unit
# box a degree-q product of coordinates has coefficient mass that shrinks
# with q, which inverts the raw-ED ranking of the targets
_EVAL_BOX = 2.0

_STUDY_EVAL = dict(
    n_paths=200,
    resolution=15,
    max_degree=7,
    damping=1e-6,
    scheme="chebyshev_fixed",
    anchored=False,
    post_softmax=False,
)

# (step size, init scale) ladder tried in order until the fit target is met
_PNN_LADDER = ((0.05, 0.35), (0.02, 0.35), (0.05, 0.25), (0.01, 0.45), (0.02, 0.25))


def _train_pnn_task(
    fn, seed: int, task_index: int, width: int, n_train: int, n_steps: int, mse_target: float
):
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(task_index, 0)))
    )
    X = rng.uniform(-1.0, 1.0, size=(n_train, 3))
    Y = fn(X)
    best = None
    for restart, (lr, scale) in enumerate(_PNN_LADDER):
        init_seed = int(
            np.random.SeedSequence(seed, spawn_key=(task_index, 1, restart)).generate_state(
                1, np.uint64
            )[0]
        )
        net = build_pnn(width=width, seed=init_seed, scale=scale)
        cfg = TrainConfig(
            task="mse",
            n_steps=n_steps,
            batch_size=n_train,
            step_size=lr,
            momentum=0.9,
            reg_strength=0.0,
            reg_paths=0,
            seed=init_seed,
        )
        # a diverging rung overflows before the loss check trips; the
        # warnings are expected there, the restart is the handling
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                log = train(net, X, Y, cfg)
        except NonFiniteLossError:
            continue
        mse = log[-1].task_loss
        if best is None or mse < best[0]:
            best = (mse, net, restart)
        if mse < mse_target:
            break
    if best is None:
        raise TrainingFailure(f"task {task_index}: every restart diverged")
    return best


def pnn_study(
    seed: int = 0,
    width: int = 16,
    n_train: int = 512,
    n_steps: int = 30000,
    n_eval: int = 256,
    mse_target: float = 1e-4,
    strict: bool = False,
) -> PNNStudyReport:
    """Fit each study target, measure every ED variant, and check orderings.

    With strict=True a task that misses the mse target raises
    TrainingFailure; otherwise the row is kept and flagged.
    """
    eval_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(seed, spawn_key=(999,)))
    )
    X_eval = eval_rng.uniform(-_EVAL_BOX, _EVAL_BOX, size=(n_eval, 3))

    def measure(net: FeedForwardNet, basis: str, pca_dim):
        cfg = EstimatorConfig(
            basis=basis, pca_dim=pca_dim, seed=seed, **_STUDY_EVAL
        )
        return ed_estimate(net.as_oracle(), X_eval, cfg)

    rows = []
    for idx, (name, fn, degree) in enumerate(PNN_TASKS):
        mse, net, restarts = _train_pnn_task(
            fn, seed, idx, width, n_train, n_steps, mse_target
        )
        converged = mse < mse_target
        if strict and not converged:
            raise TrainingFailure(
                f"task {name} stalled at mse {mse:.3e} (target {mse_target:.1e})"
            )
        cheb = measure(net, "chebyshev", None)
        leg = measure(net, "legendre", None)
        pca1 = measure(net, "chebyshev", 1)
        pca2 = measure(net, "chebyshev", 2)
        rows.append(
            PNNTaskResult(
                task=name,
                target_degree=degree,
                final_mse=mse,
                converged=converged,
                restarts=restarts,
                ed_cheb=cheb.mean_ed,
                ed_norm_cheb=cheb.mean_ed_norm,
                ed_legendre=leg.mean_ed,
                ed_pca1=pca1.mean_ed,
                ed_pca2=pca2.mean_ed,
            )
        )

    def increasing(vals):
        return bool(vals[0] < vals[1] < vals[2])

    orderings = {}
    for key in ("ed_cheb", "ed_legendre", "ed_pca1", "ed_pca2"):
        vals = [getattr(r, key) for r in rows]
        orderings[key] = {
            "first_triple": increasing(vals[:3]),
            "second_triple": increasing(vals[3:]),
        }
    norm_gaps = {
        rows[k].task: abs(rows[k].ed_norm_cheb - rows[k + 3].ed_norm_cheb)
        for k in range(3)
    }
    scaling_ok = all(rows[k + 3].ed_cheb > rows[k].ed_cheb for k in range(3))
    all_converged = all(r.converged for r in rows)
    all_ok = (
        all(v["first_triple"] and v["second_triple"] for v in orderings.values())
        and all(g < 0.15 for g in norm_gaps.values())
        and scaling_ok
        and all_converged
    )
    return PNNStudyReport(
        rows=tuple(rows),
        orderings=orderings,
        norm_gaps=norm_gaps,
        scaling_ok=scaling_ok,
        all_converged=all_converged,
        all_ok=all_ok,
        config={
            "seed": seed,
            "width": width,
            "n_train": n_train,
            "n_steps": n_steps,
            "n_eval": n_eval,
            "mse_target": mse_target,
            "eval_box": _EVAL_BOX,
            "eval": dict(_STUDY_EVAL),
        },
    )
