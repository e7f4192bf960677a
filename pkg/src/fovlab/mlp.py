"""A 6-layer fully connected regressor with hand-written backpropagation.

Architecture: input(16) -> 5 hidden layers of equal width, ReLU -> output(24),
final layer affine. Training is plain minibatch gradient descent with
adaptive moments; everything is deterministic given the seed. The network
maps 8 projected corner coordinates (centered or absolute, see datagen) to
the 24 coordinates of the 3D corners.

Training runs in float32 for speed; gradients and the finite-difference
checks use whatever dtype the parameters carry, so verification code can
stay in float64. Loss values are always accumulated in float64.
"""

from __future__ import annotations

import gc
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .rng import substream

N_LAYERS = 6
IN_DIM = 16
OUT_DIM = 24


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class MlpParams:
    """6 weight matrices and 6 bias vectors, first-to-last layer order.

    When built by _alloc_flat the arrays are views into one contiguous
    buffer (`flat`), which lets the optimizer update every parameter with a
    handful of vector operations.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    flat: np.ndarray | None = None

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])


def _layer_dims(hidden_width: int, in_dim: int, out_dim: int) -> list[tuple[int, int]]:
    dims = [in_dim] + [hidden_width] * (N_LAYERS - 1) + [out_dim]
    return list(zip(dims[:-1], dims[1:]))


def _alloc_flat(hidden_width: int, in_dim: int, out_dim: int, dtype) -> MlpParams:
    """Zeroed parameters whose arrays are views into one flat buffer."""
    shapes: list[tuple[int, ...]] = []
    for fan_in, fan_out in _layer_dims(hidden_width, in_dim, out_dim):
        shapes.extend([(fan_in, fan_out), (fan_out,)])
    total = sum(int(np.prod(s)) for s in shapes)
    flat = np.zeros(total, dtype=dtype)
    views = []
    off = 0
    for s in shapes:
        size = int(np.prod(s))
        views.append(flat[off : off + size].reshape(s))
        off += size
    return MlpParams(weights=views[0::2], biases=views[1::2], flat=flat)


@dataclass
class TrainConfig:
    variant: str  # "centered" | "absolute" input encoding (see datagen.build_io)
    target: str = "root_relative"  # or "absolute"
    hidden_width: int = 256
    learning_rate: float = 1e-3
    batch_size: int = 256
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.variant not in ("centered", "absolute"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.target not in ("root_relative", "absolute"):
            raise ValueError(f"unknown target {self.target!r}")
        if min(self.hidden_width, self.batch_size) < 1 or self.learning_rate <= 0:
            raise ValueError("hyperparameters must be positive")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")


@dataclass
class LossCurve:
    """Per-epoch train and validation MSE, in squared meters."""

    train: list[float]
    val: list[float]


def init_params(
    seed: int,
    hidden_width: int,
    in_dim: int = IN_DIM,
    out_dim: int = OUT_DIM,
    dtype=np.float64,
) -> MlpParams:
    """Deterministic initialization: weights ~ N(0, 1/fan_in), biases zero."""
    if hidden_width < 1:
        raise ValueError(f"hidden width must be >= 1, got {hidden_width}")
    rng = substream(seed, "init")
    params = _alloc_flat(hidden_width, in_dim, out_dim, dtype)
    for w in params.weights:
        fan_in = w.shape[0]
        w[...] = rng.normal(0.0, 1.0 / np.sqrt(fan_in), w.shape)
    return params


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Network output for x of shape (16,) or (N, 16)."""
    single = x.ndim == 1
    a = np.atleast_2d(x)
    for k in range(N_LAYERS):
        a = a @ params.weights[k] + params.biases[k]
        if k < N_LAYERS - 1:
            a = np.maximum(a, 0)
    return a[0] if single else a


def backward(
    params: MlpParams, x: np.ndarray, y: np.ndarray, out: MlpParams | None = None
) -> tuple[MlpParams, float]:
    """Exact gradients of the batch MSE, plus the MSE itself.

    MSE is the mean of squared errors over all batch elements and all 24
    output components; gradients share the parameter shapes. ReLU uses the
    zero subgradient at its kink. Pass `out` to reuse gradient storage
    across steps.
    """
    x = np.atleast_2d(x)
    y = np.atleast_2d(y)
    if x.shape[0] == 0:
        raise ValueError("empty batch")
    acts = [x]
    zs = []
    a = x
    for k in range(N_LAYERS):
        z = a @ params.weights[k] + params.biases[k]
        zs.append(z)
        a = np.maximum(z, 0) if k < N_LAYERS - 1 else z
        acts.append(a)
    diff = acts[-1] - y
    mse = float(np.mean(np.asarray(diff, dtype=np.float64) ** 2))
    if out is None:
        out = MlpParams(
            [np.empty_like(w) for w in params.weights],
            [np.empty_like(b) for b in params.biases],
        )
    g = diff * (2.0 / diff.size)
    for k in range(N_LAYERS - 1, -1, -1):
        np.matmul(acts[k].T, g, out=out.weights[k])
        g.sum(axis=0, out=out.biases[k])
        if k > 0:
            g = g @ params.weights[k].T
            g *= zs[k - 1] > 0
    return out, mse


class _EvalBuffers:
    """Ping-pong activation buffers so full-set evaluation allocates nothing."""

    def __init__(self, params: MlpParams, chunk: int, x_dtype):
        widths = {w.shape[1] for w in params.weights}
        size = chunk * max(widths)
        dtype = np.result_type(x_dtype, params.weights[0].dtype)
        self.a = np.empty(size, dtype=dtype)
        self.b = np.empty(size, dtype=dtype)

    def run(self, params: MlpParams, x: np.ndarray) -> np.ndarray:
        n = x.shape[0]
        cur = x
        src, dst = self.a, self.b
        for k in range(N_LAYERS):
            out = dst[: n * params.weights[k].shape[1]].reshape(n, -1)
            np.matmul(cur, params.weights[k], out=out)
            out += params.biases[k]
            if k < N_LAYERS - 1:
                np.maximum(out, 0, out=out)
            cur = out
            src, dst = dst, src
        return cur


def evaluate_mse(params: MlpParams, x: np.ndarray, y: np.ndarray, chunk: int = 4096) -> float:
    """Full-set MSE, evaluated in chunks and accumulated across chunks in
    float64."""
    bufs = _EvalBuffers(params, min(chunk, x.shape[0]), x.dtype)
    sse = 0.0
    for i in range(0, x.shape[0], chunk):
        xb = x[i : i + chunk]
        d = bufs.run(params, xb) - y[i : i + chunk]
        d = d.ravel()
        sse += float(np.dot(d, d))
    return sse / (x.shape[0] * y.shape[1])


def train(
    cfg: TrainConfig,
    train_xy: tuple[np.ndarray, np.ndarray],
    val_xy: tuple[np.ndarray, np.ndarray],
    dtype=np.float32,
) -> tuple[MlpParams, LossCurve]:
    """Run the full training loop; returns final parameters and the loss curve.

    Adaptive-moment updates with beta1=0.9, beta2=0.999, eps=1e-8; one
    shuffled pass over the training set per epoch; train and validation MSE
    are evaluated over the full sets after each epoch.

    Raises:
        TrainingDivergedError: a batch loss became non-finite.
    """
    x_train = np.ascontiguousarray(train_xy[0], dtype=dtype)
    y_train = np.ascontiguousarray(train_xy[1], dtype=dtype)
    x_val = np.ascontiguousarray(val_xy[0], dtype=dtype)
    y_val = np.ascontiguousarray(val_xy[1], dtype=dtype)
    n = x_train.shape[0]
    if n == 0:
        raise ValueError("empty training set")

    params = init_params(cfg.seed, cfg.hidden_width, x_train.shape[1], y_train.shape[1], dtype)
    grads = _alloc_flat(cfg.hidden_width, x_train.shape[1], y_train.shape[1], dtype)
    theta, g = params.flat, grads.flat
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    tmp = np.empty_like(theta)
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    shuffle_rng = substream(cfg.seed, "shuffle")
    curve = LossCurve(train=[], val=[])
    step = 0
    # Single BLAS thread: at these matrix sizes the threaded GEMM is slower,
    # and the runtime budget is stated for one core anyway. Cyclic GC is
    # paused for the loop (restored in the finally): the loop allocates only
    # acyclic temporaries, but collector sweeps over a large caller-owned
    # object graph would tax every step.
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        with threadpool_limits(limits=1):
            for epoch in range(cfg.epochs):
                perm = shuffle_rng.permutation(n)
                for lo in range(0, n, cfg.batch_size):
                    idx = perm[lo : lo + cfg.batch_size]
                    _, batch_mse = backward(params, x_train[idx], y_train[idx], out=grads)
                    if not np.isfinite(batch_mse):
                        raise TrainingDivergedError(
                            f"non-finite loss at epoch {epoch}, step {step} "
                            f"(variant={cfg.variant}, lr={cfg.learning_rate})"
                        )
                    step += 1
                    m *= beta1
                    np.multiply(g, 1.0 - beta1, out=tmp)
                    m += tmp
                    v *= beta2
                    np.multiply(g, g, out=tmp)
                    tmp *= 1.0 - beta2
                    v += tmp
                    # theta -= lr * (m / c1) / (sqrt(v / c2) + eps), bias-corrected
                    np.divide(v, 1.0 - beta2**step, out=tmp)
                    np.sqrt(tmp, out=tmp)
                    tmp += eps
                    np.divide(m, tmp, out=tmp)
                    tmp *= cfg.learning_rate / (1.0 - beta1**step)
                    theta -= tmp
                curve.train.append(evaluate_mse(params, x_train, y_train))
                curve.val.append(evaluate_mse(params, x_val, y_val))
    finally:
        if gc_was_enabled:
            gc.enable()
    return params, curve


def collision_floor(targets: np.ndarray, pair_ids: np.ndarray) -> float:
    """Irreducible MSE forced by input collisions.

    Samples sharing a pair id have (numerically) identical inputs; the best
    any deterministic function can do on such a pair is predict the target
    midpoint, incurring ||y_a - y_b||^2 / 2 of squared error. The floor is
    that total divided by the full dataset's element count, i.e. a bound on
    the achievable MSE under the same mean-over-everything convention.
    """
    targets = np.asarray(targets, dtype=np.float64)
    pair_ids = np.asarray(pair_ids)
    n, d = targets.shape
    sse = 0.0
    for pid in np.unique(pair_ids[pair_ids >= 0]):
        members = targets[pair_ids == pid]
        sse += float(np.sum((members - members.mean(axis=0)) ** 2))
    return sse / (n * d)
