"""Dense numerical kernel: feed-forward nets with explicit backprop, losses,
Adam, and finite-difference gradient checking.

Parameters are plain float64 numpy arrays held in flat lists; a forward pass
returns a tape holding everything the matching backward pass needs.  Training
math stays in 64-bit; embedding tables may be stored 32-bit at checkpoint
time.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LEAKY_SLOPE = 0.01  # conventional leaky-relu slope; not otherwise specified

HIDDEN_ACTIVATIONS = ("relu", "leaky_relu", "tanh")
OUTPUT_ACTIVATIONS = ("sigmoid_scaled", "relu", "softplus", "linear")


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths run input -> hidden... -> 1; the final width must be 1.

    ``sigmoid_scaled`` squashes to (0, 1); the owning model multiplies by its
    distance scale, so predictions land in (0, d_max).
    """
    layer_widths: tuple[int, ...]
    hidden_activation: str = "relu"
    output_activation: str = "relu"
    dropout: float = 0.0

    def __post_init__(self):
        if len(self.layer_widths) < 2:
            raise ValueError("need at least input and output widths")
        if any(w <= 0 for w in self.layer_widths):
            raise ValueError("widths must be positive")
        if self.layer_widths[-1] != 1:
            raise ValueError("final width must be 1")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(f"unknown hidden activation {self.hidden_activation!r}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1


def init_mlp_params(spec: MlpSpec, rng: np.random.Generator,
                    scheme: str = "xavier") -> list[np.ndarray]:
    """[W0, b0, W1, b1, ...]; biases start at zero under both schemes."""
    params = []
    for fan_in, fan_out in zip(spec.layer_widths[:-1], spec.layer_widths[1:]):
        if scheme == "xavier":
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        elif scheme == "truncnorm":
            w = truncated_normal(rng, (fan_in, fan_out), sigma=0.01)
        else:
            raise ValueError(f"unknown init scheme {scheme!r}")
        params.append(w)
        params.append(np.zeros(fan_out))
    return params


def truncated_normal(rng: np.random.Generator, shape, sigma: float = 0.01,
                     clip_sigmas: float = 2.0) -> np.ndarray:
    """N(0, sigma^2) with resampling outside +-clip_sigmas * sigma."""
    out = rng.normal(0.0, sigma, size=shape)
    bad = np.abs(out) > clip_sigmas * sigma
    while bad.any():
        out[bad] = rng.normal(0.0, sigma, size=int(bad.sum()))
        bad = np.abs(out) > clip_sigmas * sigma
    return out


def _hidden_act(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "leaky_relu":
        return np.where(z > 0.0, z, LEAKY_SLOPE * z)
    return np.tanh(z)


def _hidden_act_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "leaky_relu":
        return np.where(z > 0.0, 1.0, LEAKY_SLOPE)
    return 1.0 - a * a


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softplus(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


@dataclass
class MlpTape:
    """Cached activations from one forward pass; consumed by one backward pass."""
    spec: MlpSpec
    params: list[np.ndarray]
    inputs: list[np.ndarray]        # layer inputs, len n_layers
    zs: list[np.ndarray]            # pre-activations, len n_layers
    masks: list[np.ndarray | None]  # dropout keep-masks (already scaled), hidden layers
    out: np.ndarray                 # final activations, shape (B,)
    consumed: bool = False


def mlp_forward(spec: MlpSpec, params: list[np.ndarray], x: np.ndarray,
                train: bool = False, rng: np.random.Generator | None = None
                ) -> tuple[np.ndarray, MlpTape]:
    """Batch forward pass; returns per-row scalar predictions and the backprop tape."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.layer_widths[0]:
        raise ValueError(f"input shape {x.shape} does not match input width "
                         f"{spec.layer_widths[0]}")
    if len(params) != 2 * spec.n_layers:
        raise ValueError("params do not match spec layer count")
    inputs, zs, masks = [], [], []
    h = x
    for i in range(spec.n_layers):
        w, b = params[2 * i], params[2 * i + 1]
        inputs.append(h)
        z = h @ w + b
        zs.append(z)
        last = i == spec.n_layers - 1
        if last:
            name = spec.output_activation
            if name == "sigmoid_scaled":
                h = sigmoid(z)
            elif name == "relu":
                h = np.maximum(z, 0.0)
            elif name == "softplus":
                h = softplus(z)
            else:
                h = z
            masks.append(None)
        else:
            h = _hidden_act(spec.hidden_activation, z)
            if train and spec.dropout > 0.0:
                if rng is None:
                    raise ValueError("dropout in train mode needs an rng")
                keep = 1.0 - spec.dropout
                mask = (rng.random(h.shape) < keep) / keep  # inverted dropout
                h = h * mask
                masks.append(mask)
            else:
                masks.append(None)
    pred = h[:, 0]
    tape = MlpTape(spec=spec, params=params, inputs=inputs, zs=zs, masks=masks, out=pred)
    return pred, tape


def mlp_backward(tape: MlpTape, upstream: np.ndarray
                 ) -> tuple[list[np.ndarray], np.ndarray]:
    """Gradients of sum(pred * upstream) w.r.t. every parameter and the input batch."""
    if tape.consumed:
        raise RuntimeError("stale tape: backward already ran for this forward pass")
    tape.consumed = True
    spec = tape.spec
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape != tape.out.shape:
        raise ValueError(f"upstream shape {upstream.shape} != predictions {tape.out.shape}")

    z_out = tape.zs[-1]
    name = spec.output_activation
    if name == "sigmoid_scaled":
        s = tape.out[:, None]
        dz = upstream[:, None] * s * (1.0 - s)
    elif name == "relu":
        dz = upstream[:, None] * (z_out > 0.0)
    elif name == "softplus":
        dz = upstream[:, None] * sigmoid(z_out)
    else:
        dz = upstream[:, None] * np.ones_like(z_out)

    grads: list[np.ndarray] = [np.empty(0)] * (2 * spec.n_layers)
    for i in range(spec.n_layers - 1, -1, -1):
        w = tape.params[2 * i]
        grads[2 * i] = tape.inputs[i].T @ dz
        grads[2 * i + 1] = dz.sum(axis=0)
        if i == 0:
            dx = dz @ w.T
            break
        dh = dz @ w.T
        if tape.masks[i - 1] is not None:
            dh = dh * tape.masks[i - 1]
        z_prev = tape.zs[i - 1]
        a_prev = tape.inputs[i] if tape.masks[i - 1] is None else None
        if a_prev is None:
            # recompute the pre-dropout activation for the tanh derivative path
            a_prev = _hidden_act(spec.hidden_activation, z_prev)
        dz = dh * _hidden_act_grad(spec.hidden_activation, z_prev, a_prev)
    return grads, dx


# -- losses -------------------------------------------------------------------

LOSS_KINDS = ("mse", "mae", "huber", "smooth_l1")


def loss_and_grad(kind: str, pred: np.ndarray, target: np.ndarray,
                  delta: float = 1.0) -> tuple[float, np.ndarray]:
    """Mean-reduced loss and its gradient w.r.t. predictions.

    huber uses 0.5 r^2 inside |r| <= delta and delta (|r| - delta/2) outside;
    smooth_l1 is written out independently (it must coincide with huber at
    delta = 1).  The MAE subgradient at r = 0 is 0.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.size == 0:
        raise ValueError("empty prediction vector")
    if pred.shape != target.shape:
        raise ValueError("prediction/target length mismatch")
    n = pred.size
    r = pred - target
    if kind == "mse":
        return float(np.mean(r * r)), 2.0 * r / n
    if kind == "mae":
        return float(np.mean(np.abs(r))), np.sign(r) / n
    if kind == "huber":
        if delta <= 0.0:
            raise ValueError("huber delta must be positive")
        a = np.abs(r)
        quad = a <= delta
        vals = np.where(quad, 0.5 * r * r, delta * (a - 0.5 * delta))
        grad = np.where(quad, r, delta * np.sign(r))
        return float(np.mean(vals)), grad / n
    if kind == "smooth_l1":
        a = np.abs(r)
        quad = a < 1.0
        vals = np.where(quad, 0.5 * r * r, a - 0.5)
        grad = np.where(quad, r, np.sign(r))
        return float(np.mean(vals)), grad / n
    raise ValueError(f"unknown loss kind {kind!r}")


# -- Adam ----------------------------------------------------------------------

@dataclass
class AdamState:
    """First/second moment accumulators for a flat parameter list."""
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    names: list[str] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray], names: list[str] | None = None) -> "AdamState":
        if names is not None and len(names) != len(params):
            raise ValueError("names/params length mismatch")
        return cls(m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params],
                   names=list(names) if names else [f"param{i}" for i in range(len(params))])


def adam_step(params: list[np.ndarray], grads: list[np.ndarray],
              state: AdamState, lr: float) -> None:
    """Standard bias-corrected Adam update, in place on ``params``."""
    if len(params) != len(state.m) or len(grads) != len(params):
        raise ValueError("params/grads/state length mismatch")
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    for i, (p, g) in enumerate(zip(params, grads)):
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient for {state.names[i]}")
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * (g * g)
        m_hat = state.m[i] / c1
        v_hat = state.v[i] / c2
        p -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


# -- gradient checking ----------------------------------------------------------

@dataclass
class GradCheckResult:
    max_rel_error: float
    n_checked: int
    excluded: list[tuple[int, int]]  # (param index, flat coordinate) at kinks

    def __float__(self):
        return self.max_rel_error


def gradient_check(f, params: list[np.ndarray], h: float = 1e-6,
                   kink_tol: float = 1e-3) -> GradCheckResult:
    """Compare analytic gradients from ``f`` against central differences.

    ``f(params) -> (value, grads)`` must be pure.  Coordinates where the
    one-sided differences disagree (activation kinks) are excluded and
    reported rather than failed.  Relative-error denominators are clamped at
    1e-12.
    """
    if h <= 0.0:
        raise ValueError("h must be positive")
    _, analytic = f(params)
    worst = 0.0
    checked = 0
    excluded: list[tuple[int, int]] = []
    for pi, p in enumerate(params):
        flat = p.reshape(-1)
        for ci in range(flat.size):
            orig = flat[ci]
            flat[ci] = orig + h
            up, _ = f(params)
            flat[ci] = orig - h
            dn, _ = f(params)
            flat[ci] = orig
            v0, _ = f(params)
            d_plus = (up - v0) / h
            d_minus = (v0 - dn) / h
            scale = max(abs(d_plus), abs(d_minus), 1.0)
            if abs(d_plus - d_minus) > kink_tol * scale:
                excluded.append((pi, ci))
                continue
            numeric = (up - dn) / (2.0 * h)
            ana = analytic[pi].reshape(-1)[ci]
            denom = max(abs(numeric) + abs(ana), 1e-12)
            rel = abs(numeric - ana) / denom
            worst = max(worst, rel)
            checked += 1
    return GradCheckResult(max_rel_error=worst, n_checked=checked, excluded=excluded)
