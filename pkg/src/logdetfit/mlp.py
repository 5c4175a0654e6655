"""Multilayer perceptron with exact first and second parameter derivatives.

The regression function F_W maps R^q to R^d through zero or more tanh hidden
layers followed by an affine output layer. Derivatives with respect to the
weights are computed analytically: the full Jacobian by backward accumulation,
second derivatives per index pair by forward propagation of a second-order
tangent state. No finite differences anywhere in this module.

Weight indexing
---------------
The flat parameter vector is ordered layer-major from input to output. Within
layer ``l`` (mapping ``fan_in`` units to ``fan_out`` units) the block is

    [ W[0,0], W[0,1], ..., W[0,fan_in-1], W[1,0], ..., W[fan_out-1,fan_in-1],
      b[0], ..., b[fan_out-1] ]

that is, the weight matrix in row-major order (row = destination unit), then
the biases. ``W[i,j]`` multiplies input unit ``j`` into destination unit
``i``. All gradient and Hessian consumers address parameters purely through
this flat index; nothing downstream depends on the structural layout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange

__all__ = [
    "Architecture",
    "ParamVector",
    "forward",
    "jacobian",
    "second_derivative",
    "init_random",
    "pack",
    "unpack",
]


@dataclass(frozen=True)
class Architecture:
    """Shape of the network: layer widths and the (fixed) activation.

    ``hidden_dims`` may be empty, giving a purely affine map. Only the tanh
    activation is supported; its derivatives stay bounded, which the
    asymptotic theory relies on.
    """

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    activation: str = "tanh"

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        if self.input_dim < 1 or self.output_dim < 1:
            raise DimensionMismatch("input_dim and output_dim must be positive")
        if any(h < 1 for h in self.hidden_dims):
            raise DimensionMismatch("hidden layer widths must be positive")
        if self.activation != "tanh":
            raise DimensionMismatch(f"unsupported activation {self.activation!r}")

    @property
    def dims(self) -> tuple[int, ...]:
        """Unit counts per layer, input through output."""
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    @property
    def param_count(self) -> int:
        dims = self.dims
        return sum((dims[i] + 1) * dims[i + 1] for i in range(len(dims) - 1))

    def layer_blocks(self) -> list[tuple[slice, slice, int, int]]:
        """Per layer: (weight slice, bias slice, fan_in, fan_out) into the
        flat parameter vector."""
        blocks = []
        dims = self.dims
        start = 0
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            w_end = start + fan_in * fan_out
            b_end = w_end + fan_out
            blocks.append((slice(start, w_end), slice(w_end, b_end), fan_in, fan_out))
            start = b_end
        return blocks


@dataclass(frozen=True)
class ParamVector:
    """A flat weight vector bound to its architecture."""

    values: np.ndarray
    arch: Architecture

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=np.float64).ravel()
        if v.shape[0] != self.arch.param_count:
            raise DimensionMismatch(
                f"expected {self.arch.param_count} parameters, got {v.shape[0]}"
            )
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.shape[0]

    def with_values(self, values: np.ndarray) -> "ParamVector":
        return ParamVector(values, self.arch)


def pack(arch: Architecture, layers: list[tuple[np.ndarray, np.ndarray]]) -> ParamVector:
    """Flatten a list of (weight matrix, bias vector) pairs, input layer
    first, into a ParamVector."""
    blocks = arch.layer_blocks()
    if len(layers) != len(blocks):
        raise DimensionMismatch(f"expected {len(blocks)} layers, got {len(layers)}")
    flat = np.empty(arch.param_count)
    for (w_sl, b_sl, fan_in, fan_out), (w, b) in zip(blocks, layers):
        w = np.asarray(w, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if w.shape != (fan_out, fan_in) or b.shape != (fan_out,):
            raise DimensionMismatch(
                f"layer shapes {w.shape}/{b.shape} do not match ({fan_out},{fan_in})"
            )
        flat[w_sl] = w.ravel()
        flat[b_sl] = b
    return ParamVector(flat, arch)


def unpack(w: ParamVector) -> list[tuple[np.ndarray, np.ndarray]]:
    """Inverse of :func:`pack`: (weight matrix, bias vector) per layer."""
    out = []
    for w_sl, b_sl, fan_in, fan_out in w.arch.layer_blocks():
        out.append((w.values[w_sl].reshape(fan_out, fan_in), w.values[b_sl]))
    return out


def init_random(arch: Architecture, seed) -> ParamVector:
    """Random starting point: weights uniform on (-0.7/sqrt(fan_in),
    +0.7/sqrt(fan_in)), biases uniform on (-0.1, 0.1), drawn layer by layer
    in indexing order. ``seed`` is an integer or a numpy Generator."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    dims = arch.dims
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        half = 0.7 / np.sqrt(fan_in)
        wm = rng.uniform(-half, half, size=(fan_out, fan_in))
        b = rng.uniform(-0.1, 0.1, size=fan_out)
        layers.append((wm, b))
    return pack(arch, layers)


def _as_batch(arch: Architecture, z: np.ndarray) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    if z.ndim != 2 or z.shape[1] != arch.input_dim:
        raise DimensionMismatch(
            f"inputs must have {arch.input_dim} columns, got shape {z.shape}"
        )
    return z, single


def _check_index(w: ParamVector, k: int) -> int:
    k = int(k)
    if not 0 <= k < len(w):
        raise IndexOutOfRange(f"parameter index {k} outside [0, {len(w)})")
    return k


def forward(w: ParamVector, z: np.ndarray) -> np.ndarray:
    """Evaluate F_W. A single input of shape (q,) gives (d,); a batch of
    shape (n, q) gives (n, d)."""
    x, single = _as_batch(w.arch, z)
    layers = unpack(w)
    last = len(layers) - 1
    for idx, (wm, b) in enumerate(layers):
        x = x @ wm.T + b
        if idx < last:
            x = np.tanh(x)
    return x[0] if single else x


def _forward_trace(w: ParamVector, x0: np.ndarray):
    """Forward pass keeping per-layer inputs and hidden tanh derivatives."""
    layers = unpack(w)
    last = len(layers) - 1
    inputs = []  # x fed into each affine layer
    slopes = []  # tanh'(s) for each hidden layer
    x = x0
    for idx, (wm, b) in enumerate(layers):
        inputs.append(x)
        s = x @ wm.T + b
        if idx < last:
            x = np.tanh(s)
            slopes.append(1.0 - x * x)
        else:
            x = s
    return layers, inputs, slopes, x


def jacobian(w: ParamVector, z: np.ndarray) -> np.ndarray:
    """All first partials by backward accumulation.

    Row k is the d-vector dF_W(z)/dW_k. A single input gives (p, d); a batch
    gives (n, p, d).
    """
    x0, single = _as_batch(w.arch, z)
    n = x0.shape[0]
    d = w.arch.output_dim
    layers, inputs, slopes, _ = _forward_trace(w, x0)
    blocks = w.arch.layer_blocks()
    jac = np.empty((n, len(w), d))
    # down holds dF/ds for the current layer's pre-activation, shape (n, d, fan_out)
    down = np.broadcast_to(np.eye(d), (n, d, d))
    for idx in range(len(layers) - 1, -1, -1):
        w_sl, b_sl, fan_in, fan_out = blocks[idx]
        x_in = inputs[idx]
        jac[:, w_sl, :] = np.einsum("tci,tj->tijc", down, x_in).reshape(n, fan_out * fan_in, d)
        jac[:, b_sl, :] = down.transpose(0, 2, 1)
        if idx > 0:
            wm = layers[idx][0]
            down = np.einsum("tci,ij->tcj", down, wm) * slopes[idx - 1][:, None, :]
    return jac[0] if single else jac


def _direct_tangent(block, k: int, x: np.ndarray) -> np.ndarray | None:
    """d(s)/dW_k holding the layer input fixed, for W_k inside this layer.

    For a weight W[i,j] this is x[:,j] into coordinate i; for a bias b[i] a
    constant 1 there; None when k lies in another layer.
    """
    w_sl, b_sl, fan_in, fan_out = block
    n = x.shape[0]
    if w_sl.start <= k < w_sl.stop:
        i, j = divmod(k - w_sl.start, fan_in)
        out = np.zeros((n, fan_out))
        out[:, i] = x[:, j]
        return out
    if b_sl.start <= k < b_sl.stop:
        out = np.zeros((n, fan_out))
        out[:, k - b_sl.start] = 1.0
        return out
    return None


def _direct_cross(block, k: int, tangent: np.ndarray) -> np.ndarray | None:
    """Derivative of the direct term of W_k along a tangent of the layer
    input. Nonzero only for weight entries (the bias direct term is
    constant)."""
    w_sl, _, fan_in, fan_out = block
    if not w_sl.start <= k < w_sl.stop:
        return None
    i, j = divmod(k - w_sl.start, fan_in)
    out = np.zeros((tangent.shape[0], fan_out))
    out[:, i] = tangent[:, j]
    return out


def second_derivative(w: ParamVector, z: np.ndarray, k: int, l: int) -> np.ndarray:
    """Exact mixed second partial d²F_W(z)/dW_k dW_l, symmetric in (k, l).

    Computed by forward propagation of the pair's second-order tangent
    state; memory stays O(n·width) so callers can sweep index pairs without
    ever holding a p×p×d tensor. Single input gives (d,); batch gives (n, d).
    """
    k = _check_index(w, k)
    l = _check_index(w, l)
    x, single = _as_batch(w.arch, z)
    n = x.shape[0]
    layers = unpack(w)
    blocks = w.arch.layer_blocks()
    last = len(layers) - 1
    u = np.zeros_like(x)  # dx/dW_k
    v = np.zeros_like(x)  # dx/dW_l
    h = np.zeros_like(x)  # d²x/dW_k dW_l
    for idx, (wm, b) in enumerate(layers):
        block = blocks[idx]
        s = x @ wm.T + b
        us = u @ wm.T
        vs = v @ wm.T
        hs = h @ wm.T
        dk = _direct_tangent(block, k, x)
        if dk is not None:
            us = us + dk
        dl = _direct_tangent(block, l, x)
        if dl is not None:
            vs = vs + dl
        ck = _direct_cross(block, k, v)
        if ck is not None:
            hs = hs + ck
        cl = _direct_cross(block, l, u)
        if cl is not None:
            hs = hs + cl
        if idx < last:
            t = np.tanh(s)
            slope = 1.0 - t * t
            curve = -2.0 * t * slope
            x = t
            h = curve * us * vs + slope * hs
            u = slope * us
            v = slope * vs
        else:
            x, u, v, h = s, us, vs, hs
    return h[0] if single else h
