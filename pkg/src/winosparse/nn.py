"""A small trainable CNN: stride-1 valid convolution, ReLU, 2x2 max-pool,
dense head, softmax cross-entropy, hand-derived backprop, SGD/Adam.

Forward may run convolutions through either the direct or the tiled Winograd
engine; backprop always uses the direct-path formulas on the cached
activations, so the Winograd engine needs no gradient of its own.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .tensor_core import DimensionError, as_tensor
from .winograd import WinogradBasis, winograd_conv2d_batch


class NumericError(ArithmeticError):
    """A forward/backward pass produced non-finite values."""


@dataclass
class TrainBatch:
    inputs: np.ndarray  # (B, C, H, W) float64
    labels: np.ndarray  # (B,) int class ids


class Conv2D:
    kind = "conv"

    def __init__(self, in_channels, out_channels, r, rng=None):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.r = r
        if rng is None:
            self.w = np.zeros((out_channels, in_channels, r, r))
        else:
            # He fan-in scaling; nothing downstream depends on the choice.
            std = math.sqrt(2.0 / (in_channels * r * r))
            self.w = rng.standard_normal((out_channels, in_channels, r, r)) * std
        self.b = np.zeros(out_channels)

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def forward(self, x, engine="direct", basis=None, domain_filters=None):
        if x.shape[1] != self.in_channels:
            raise DimensionError(f"conv expects {self.in_channels} channels, got {x.shape[1]}")
        if engine == "winograd":
            if basis is None:
                raise ValueError("winograd engine requires a basis")
            y = winograd_conv2d_batch(basis, x, self.w, domain_filters=domain_filters)
        else:
            y = kernels.conv2d(x, self.w)
        return y + self.b[None, :, None, None]

    def backward(self, x, gy):
        gw = kernels.conv2d_weight_grad(x, gy)
        gb = gy.sum(axis=(0, 2, 3))
        gx = kernels.conv2d_input_grad(gy, self.w)
        return gx, {"w": gw, "b": gb}


class ReLU:
    kind = "relu"

    def params(self):
        return []

    def forward(self, x):
        return np.maximum(x, 0.0)

    def backward(self, x, gy):
        # Subgradient 0 at the kink.
        return gy * (x > 0.0), {}


class MaxPool2:
    """2x2 max pooling with stride 2; odd trailing rows/columns are dropped
    and ties go to the first window position."""

    kind = "pool"

    def params(self):
        return []

    @staticmethod
    def _windows(x):
        b, c, h, w = x.shape
        hf, wf = h // 2, w // 2
        blocks = x[:, :, : hf * 2, : wf * 2].reshape(b, c, hf, 2, wf, 2)
        return blocks.transpose(0, 1, 2, 4, 3, 5).reshape(b, c, hf, wf, 4)

    def forward(self, x):
        flat = self._windows(x)
        self_idx = flat.argmax(axis=-1)
        return np.take_along_axis(flat, self_idx[..., None], axis=-1)[..., 0]

    def backward(self, x, gy):
        b, c, h, w = x.shape
        hf, wf = h // 2, w // 2
        flat = self._windows(x)
        idx = flat.argmax(axis=-1)
        gflat = np.zeros_like(flat)
        np.put_along_axis(gflat, idx[..., None], gy[..., None], axis=-1)
        gx = np.zeros_like(x)
        gx[:, :, : hf * 2, : wf * 2] = (
            gflat.reshape(b, c, hf, wf, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(b, c, hf * 2, wf * 2)
        )
        return gx, {}


class Flatten:
    kind = "flatten"

    def params(self):
        return []

    def forward(self, x):
        return x.reshape(x.shape[0], -1)

    def backward(self, x, gy):
        return gy.reshape(x.shape), {}


class Dense:
    kind = "fc"

    def __init__(self, in_features, out_features, rng=None):
        self.in_features = in_features
        self.out_features = out_features
        if rng is None:
            self.w = np.zeros((out_features, in_features))
        else:
            self.w = rng.standard_normal((out_features, in_features)) * math.sqrt(2.0 / in_features)
        self.b = np.zeros(out_features)

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def forward(self, x):
        if x.shape[1] != self.in_features:
            raise DimensionError(f"dense expects {self.in_features} features, got {x.shape[1]}")
        return x @ self.w.T + self.b

    def backward(self, x, gy):
        return gy @ self.w, {"w": gy.T @ x, "b": gy.sum(axis=0)}


class Model:
    """An ordered layer stack plus the bookkeeping the rest of the pipeline
    needs: enumerating conv filters, flat parameter access, engine routing."""

    def __init__(self, layers, input_shape, num_classes):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)  # (C, H, W)
        self.num_classes = num_classes

    def conv_layers(self):
        return [(i, l) for i, l in enumerate(self.layers) if l.kind == "conv"]

    def fc_layers(self):
        return [(i, l) for i, l in enumerate(self.layers) if l.kind == "fc"]

    def parameters(self):
        """[(layer_index, name, array)] over every learnable tensor."""
        out = []
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params():
                out.append((i, name, arr))
        return out

    def weight_parameters(self):
        """Conv filters and dense weights, excluding biases."""
        return [(i, n, a) for i, n, a in self.parameters() if n == "w"]

    def copy(self):
        import copy

        return copy.deepcopy(self)


def paper_net(input_hw=(28, 28), num_classes=10, seed=0) -> Model:
    """The reference desk-scale architecture: two 3x3 conv stages with 2x2
    pooling, one 5x5 conv stage, then a dense classifier."""
    h, w = input_hw
    rng = np.random.default_rng(seed)
    layers = [
        Conv2D(1, 8, 3, rng),
        ReLU(),
        MaxPool2(),
        Conv2D(8, 16, 3, rng),
        ReLU(),
        MaxPool2(),
        Conv2D(16, 16, 5, rng),
        ReLU(),
        Flatten(),
    ]
    fh, fw = h, w
    fh, fw = (fh - 2) // 2, (fw - 2) // 2
    fh, fw = (fh - 2) // 2, (fw - 2) // 2
    fh, fw = fh - 4, fw - 4
    if fh < 1 or fw < 1:
        raise DimensionError(f"input {input_hw} too small for this architecture")
    layers.append(Dense(16 * fh * fw, num_classes, rng))
    return Model(layers, (1, h, w), num_classes)


def run_forward(model: Model, x: np.ndarray, engine="direct", bases=None, domain_filters=None):
    """Forward pass returning (logits, caches); caches hold each layer's
    input for the backward pass."""
    if engine not in ("direct", "winograd"):
        raise ValueError(f"unknown conv engine {engine!r}")
    caches = []
    out = as_tensor(x)
    for i, layer in enumerate(model.layers):
        caches.append(out)
        if layer.kind == "conv":
            basis = bases.get(i) if bases else None
            wt = domain_filters.get(i) if domain_filters else None
            out = layer.forward(out, engine=engine, basis=basis, domain_filters=wt)
        else:
            out = layer.forward(out)
    if not np.all(np.isfinite(out)):
        raise NumericError(f"non-finite logits (max |logit| = {np.max(np.abs(out))})")
    return out, caches


def run_backward(model: Model, caches, grad_logits):
    """Backward pass. Returns {(layer_index, param_name): gradient}."""
    grads = {}
    g = grad_logits
    for i in range(len(model.layers) - 1, -1, -1):
        g, layer_grads = model.layers[i].backward(caches[i], g)
        for name, arr in layer_grads.items():
            grads[(i, name)] = arr
    return grads


def cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean softmax cross-entropy and its gradient w.r.t. the logits."""
    labels = np.asarray(labels, dtype=np.int64)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))
    log_probs = shifted - log_z
    n = logits.shape[0]
    loss = float(-log_probs[np.arange(n), labels].mean())
    if not math.isfinite(loss):
        raise NumericError(f"non-finite loss {loss}")
    grad = np.exp(log_probs)
    grad[np.arange(n), labels] -= 1.0
    return loss, grad / n


def forward(model: Model, batch: TrainBatch, engine="direct", bases=None):
    """(logits, mean cross-entropy loss) for a batch."""
    logits, _ = run_forward(model, batch.inputs, engine=engine, bases=bases)
    loss, _ = cross_entropy(logits, batch.labels)
    return logits, loss


def backward(model: Model, batch: TrainBatch, engine="direct", bases=None):
    """Gradients of the mean batch loss for every parameter."""
    logits, caches = run_forward(model, batch.inputs, engine=engine, bases=bases)
    _, grad_logits = cross_entropy(logits, batch.labels)
    return run_backward(model, caches, grad_logits)


class SGD:
    kind = "sgd"

    def __init__(self, lr):
        self.lr = lr
        self.t = 0

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g
        self.t += 1


class Adam:
    kind = "adam"

    def __init__(self, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = None
        self.v = None

    def step(self, params, grads):
        if self.m is None:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1t = 1.0 - self.beta1**self.t
        b2t = 1.0 - self.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


def make_optimizer(kind: str, lr: float):
    if kind == "sgd":
        return SGD(lr)
    if kind == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {kind!r}")
