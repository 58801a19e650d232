"""Layers for the dense-tensor engine.

All activations use the channels-last layout (N, H, W, C) where H is the
temporal axis and W the spatial (joint or joint-pair) axis. Convolutions
are valid (no padding) cross-correlations. Each layer caches what its
backward pass needs during forward; backward accumulates parameter
gradients (call Adam.zero_grad between steps) and returns the gradient
with respect to its input.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class NumericError(ArithmeticError):
    """Raised when checked mode finds a non-finite activation."""


class Parameter:
    """A trainable array with an accumulated gradient."""

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def size(self) -> int:
        return self.value.size

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class Layer:
    """Base class: stateless layers only need forward/backward."""

    name = "layer"

    def parameters(self) -> list[Parameter]:
        return []

    def forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        raise NotImplementedError


def kaiming_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    """He-style uniform init: U(-sqrt(6/fan_in), +sqrt(6/fan_in))."""
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Conv2d(Layer):
    """Valid 2-D cross-correlation over (time, spatial) with per-axis strides.

    Weights have shape (f_t, f_s, c_in, c_out); biases (c_out,). Output
    dims follow the floor rule H_out = (H - f_t)//s_t + 1 (same for W).
    """

    def __init__(
        self,
        name: str,
        f_t: int,
        f_s: int,
        c_in: int,
        c_out: int,
        stride_t: int = 1,
        stride_s: int = 1,
        rng: np.random.Generator | None = None,
    ):
        if min(f_t, f_s, c_in, c_out, stride_t, stride_s) < 1:
            raise ValueError("conv dimensions and strides must be positive")
        self.name = name
        self.f_t, self.f_s = int(f_t), int(f_s)
        self.c_in, self.c_out = int(c_in), int(c_out)
        self.stride_t, self.stride_s = int(stride_t), int(stride_s)
        rng = rng if rng is not None else np.random.default_rng(0)
        fan_in = self.f_t * self.f_s * self.c_in
        self.weight = Parameter(
            f"{name}.weight", kaiming_uniform(rng, (self.f_t, self.f_s, self.c_in, self.c_out), fan_in)
        )
        self.bias = Parameter(f"{name}.bias", np.zeros(self.c_out))
        self._cache: tuple | None = None
        # Layers whose input is a network input (not another layer's
        # output) can skip the grad-input computation entirely.
        self.needs_input_grad = True

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def out_shape(self, h: int, w: int) -> tuple[int, int]:
        if h < self.f_t or w < self.f_s:
            raise ValueError(
                f"{self.name}: input ({h},{w}) smaller than filter ({self.f_t},{self.f_s})"
            )
        return (h - self.f_t) // self.stride_t + 1, (w - self.f_s) // self.stride_s + 1

    def _blocked(self, w: int) -> bool:
        # When the spatial stride equals the spatial filter width the
        # windows tile the W axis exactly, so the input reshapes into
        # non-overlapping blocks and the whole conv is one matmul.
        return self.stride_s == self.f_s and w % self.f_s == 0

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[3] != self.c_in:
            raise ValueError(f"{self.name}: expected (N,H,W,{self.c_in}), got {x.shape}")
        n, h, w, _ = x.shape
        h_out, w_out = self.out_shape(h, w)
        x = np.ascontiguousarray(x, dtype=np.float64)
        if self._blocked(w):
            # Non-overlapping spatial windows: fold the W axis into
            # (w_out, f_s) blocks and run the whole conv as one matmul.
            # q[n,t,w,(ft,o)] = sum_{fs,c} xb[n,t,w,(fs,c)] * wt[(fs,c),(ft,o)]
            xb = x.reshape(n * h * w_out, self.f_s * self.c_in)
            wt = self.weight.value.transpose(1, 2, 0, 3).reshape(
                self.f_s * self.c_in, self.f_t * self.c_out
            )
            q = (xb @ wt).reshape(n, h, w_out, self.f_t, self.c_out)
            out = np.empty((n, h_out, w_out, self.c_out))
            out[...] = self.bias.value
            for ft in range(self.f_t):
                out += q[:, ft : ft + self.stride_t * (h_out - 1) + 1 : self.stride_t, :, ft, :]
            self._cache = ("blocked", xb, (n, h, w, h_out, w_out))
        else:
            win = sliding_window_view(x, (self.f_t, self.f_s), axis=(1, 2))
            win = win[:, :: self.stride_t, :: self.stride_s]  # (N,H_out,W_out,C,f_t,f_s)
            cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3))
            cols = cols.reshape(n * h_out * w_out, self.f_t * self.f_s * self.c_in)
            w2d = self.weight.value.reshape(self.f_t * self.f_s * self.c_in, self.c_out)
            out = (cols @ w2d + self.bias.value).reshape(n, h_out, w_out, self.c_out)
            self._cache = ("im2col", cols, (n, h, w, h_out, w_out))
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray | None:
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward called before forward")
        kind, cached, (n, h, w, h_out, w_out) = self._cache
        self.bias.grad += grad_out.sum(axis=(0, 1, 2))
        if kind == "blocked":
            xb = cached
            grad_q = np.zeros((n, h, w_out, self.f_t, self.c_out))
            for ft in range(self.f_t):
                grad_q[:, ft : ft + self.stride_t * (h_out - 1) + 1 : self.stride_t, :, ft, :] = grad_out
            gq = grad_q.reshape(n * h * w_out, self.f_t * self.c_out)
            gw = (xb.T @ gq).reshape(self.f_s, self.c_in, self.f_t, self.c_out)
            self.weight.grad += gw.transpose(2, 0, 1, 3)
            if not self.needs_input_grad:
                return None
            wt = self.weight.value.transpose(1, 2, 0, 3).reshape(
                self.f_s * self.c_in, self.f_t * self.c_out
            )
            return (gq @ wt.T).reshape(n, h, w, self.c_in)
        cols = cached
        g2d = grad_out.reshape(n * h_out * w_out, self.c_out)
        gw = cols.T @ g2d
        self.weight.grad += gw.reshape(self.f_t, self.f_s, self.c_in, self.c_out)
        if not self.needs_input_grad:
            return None
        w2d = self.weight.value.reshape(self.f_t * self.f_s * self.c_in, self.c_out)
        grad_cols = (g2d @ w2d.T).reshape(n, h_out, w_out, self.f_t, self.f_s, self.c_in)
        grad_x = np.zeros((n, h, w, self.c_in))
        for ft in range(self.f_t):
            for fs in range(self.f_s):
                grad_x[
                    :,
                    ft : ft + self.stride_t * (h_out - 1) + 1 : self.stride_t,
                    fs : fs + self.stride_s * (w_out - 1) + 1 : self.stride_s,
                    :,
                ] += grad_cols[:, :, :, ft, fs, :]
        return grad_x


class ReLU(Layer):
    def __init__(self, name: str = "relu"):
        self.name = name
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            raise RuntimeError(f"{self.name}: backward called before forward")
        return np.where(self._mask, grad_out, 0.0)


def pool_boundaries(size_in: int, size_out: int) -> np.ndarray:
    """Window edges floor(k * size_in / size_out) for k = 0..size_out."""
    if size_out < 1 or size_out > size_in:
        raise ValueError(f"pool output {size_out} must be in [1, {size_in}]")
    return (np.arange(size_out + 1) * size_in) // size_out


class AdaptiveMaxPool2d(Layer):
    """Max pool to a fixed (out_h, out_w) grid.

    Window k spans [floor(k*H/out_h), floor((k+1)*H/out_h)) so windows
    tile the input exactly. Ties go to the lowest flat index of the
    window in row-major (h, w) order; backward routes the gradient to
    that single element.
    """

    def __init__(self, out_h: int, out_w: int, name: str = "maxpool"):
        self.name = name
        self.out_h, self.out_w = int(out_h), int(out_w)
        self._cache: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, c = x.shape
        hb = pool_boundaries(h, self.out_h)
        wb = pool_boundaries(w, self.out_w)
        out = np.empty((n, self.out_h, self.out_w, c))
        arg_h = np.empty((n, self.out_h, self.out_w, c), dtype=np.intp)
        arg_w = np.empty((n, self.out_h, self.out_w, c), dtype=np.intp)
        for kh in range(self.out_h):
            h0, h1 = hb[kh], hb[kh + 1]
            for kw in range(self.out_w):
                w0, w1 = wb[kw], wb[kw + 1]
                win = x[:, h0:h1, w0:w1, :]
                flat = win.reshape(n, (h1 - h0) * (w1 - w0), c)
                # argmax returns the first occurrence, which is the
                # lowest flat index of the row-major window.
                idx = flat.argmax(axis=1)
                out[:, kh, kw, :] = np.take_along_axis(flat, idx[:, None, :], axis=1)[:, 0, :]
                arg_h[:, kh, kw, :] = h0 + idx // (w1 - w0)
                arg_w[:, kh, kw, :] = w0 + idx % (w1 - w0)
        self._cache = ((n, h, w, c), arg_h, arg_w)
        return out

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward called before forward")
        (n, h, w, c), arg_h, arg_w = self._cache
        grad_x = np.zeros((n, h, w, c))
        n_idx, _, _, c_idx = np.indices(grad_out.shape, sparse=True)
        np.add.at(grad_x, (n_idx, arg_h, arg_w, c_idx), grad_out)
        return grad_x


class Flatten(Layer):
    def __init__(self, name: str = "flatten"):
        self.name = name
        self._shape: tuple | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._shape is None:
            raise RuntimeError(f"{self.name}: backward called before forward")
        return grad_out.reshape(self._shape)


class Dense(Layer):
    """Fully connected layer: y = x @ W.T + b with W of shape (out, in)."""

    def __init__(self, name: str, in_features: int, out_features: int, rng: np.random.Generator | None = None):
        self.name = name
        self.in_features, self.out_features = int(in_features), int(out_features)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.weight = Parameter(
            f"{name}.weight", kaiming_uniform(rng, (out_features, in_features), in_features)
        )
        self.bias = Parameter(f"{name}.bias", np.zeros(out_features))
        self._x: np.ndarray | None = None

    def parameters(self) -> list[Parameter]:
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 2 or x.shape[1] != self.in_features:
            raise ValueError(f"{self.name}: expected (N,{self.in_features}), got {x.shape}")
        self._x = x
        return x @ self.weight.value.T + self.bias.value

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._x is None:
            raise RuntimeError(f"{self.name}: backward called before forward")
        self.weight.grad += grad_out.T @ self._x
        self.bias.grad += grad_out.sum(axis=0)
        return grad_out @ self.weight.value


def sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class SpatialGate(Layer):
    """Squeeze-and-excitation style gate over the spatial (W) axis.

    Squeeze averages over time and channels to a per-position signal
    (N, W); a two-layer bottleneck with a sigmoid produces gates in
    (0, 1) that rescale the input per position. The final layer is
    zero-initialised so every gate starts at exactly 0.5.
    """

    def __init__(self, name: str, width: int, hidden: int | None = None, rng: np.random.Generator | None = None):
        self.name = name
        self.width = int(width)
        self.hidden = int(hidden) if hidden is not None else max(4, self.width // 4)
        rng = rng if rng is not None else np.random.default_rng(0)
        self.w1 = Parameter(f"{name}.w1", kaiming_uniform(rng, (self.hidden, self.width), self.width))
        self.b1 = Parameter(f"{name}.b1", np.zeros(self.hidden))
        self.w2 = Parameter(f"{name}.w2", np.zeros((self.width, self.hidden)))
        self.b2 = Parameter(f"{name}.b2", np.zeros(self.width))
        self.last_gate: np.ndarray | None = None
        self._cache: tuple | None = None

    def parameters(self) -> list[Parameter]:
        return [self.w1, self.b1, self.w2, self.b2]

    def forward(self, x: np.ndarray) -> np.ndarray:
        if x.ndim != 4 or x.shape[2] != self.width:
            raise ValueError(f"{self.name}: expected (N,H,{self.width},C), got {x.shape}")
        s = x.mean(axis=(1, 3))  # (N, W)
        pre = s @ self.w1.value.T + self.b1.value
        hid = np.where(pre > 0, pre, 0.0)
        gate = sigmoid(hid @ self.w2.value.T + self.b2.value)  # (N, W)
        self.last_gate = gate
        self._cache = (x, s, pre > 0, hid, gate)
        return x * gate[:, None, :, None]

    def backward(self, grad_out: np.ndarray) -> np.ndarray:
        if self._cache is None:
            raise RuntimeError(f"{self.name}: backward called before forward")
        x, s, mask, hid, gate = self._cache
        n, h, w, c = x.shape
        dgate = np.einsum("nhwc,nhwc->nw", grad_out, x)
        dz = dgate * gate * (1.0 - gate)
        self.w2.grad += dz.T @ hid
        self.b2.grad += dz.sum(axis=0)
        dhid = np.where(mask, dz @ self.w2.value, 0.0)
        self.w1.grad += dhid.T @ s
        self.b1.grad += dhid.sum(axis=0)
        ds = dhid @ self.w1.value
        return gate[:, None, :, None] * grad_out + ds[:, None, :, None] / (h * c)
