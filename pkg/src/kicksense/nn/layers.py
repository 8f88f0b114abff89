"""Layer implementations: dense, convolutions, BiLSTM, attention, utilities.

Convolutions gather input patches with ``sliding_window_view`` and
contract them with ``tensordot``; their input gradients scatter one
kernel offset at a time, which keeps every step an ordinary strided
numpy operation.
"""

from __future__ import annotations

import numpy as np

from .core import Layer, Param, activation_grad, apply_activation, glorot_uniform


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Dense(Layer):
    """Affine map with an optional fused activation. Input (B, in_dim)."""

    def __init__(self, in_dim, out_dim, activation="linear", rng=None, name="dense", dtype=np.float64):
        rng = rng or np.random.default_rng()
        self.name = name
        self.activation = activation
        self.w = Param(glorot_uniform(rng, (in_dim, out_dim), in_dim, out_dim, dtype), f"{name}.w")
        self.b = Param(np.zeros(out_dim, dtype=dtype), f"{name}.b")
        self._x = self._z = None

    def forward(self, x, training=False):
        self._x = x
        self._z = x @ self.w.value + self.b.value
        return apply_activation(self._z, self.activation)

    def backward(self, dy):
        dz = dy * activation_grad(self._z, self.activation)
        self.w.grad += self._x.T @ dz
        self.b.grad += dz.sum(axis=0)
        return dz @ self.w.value.T

    def params(self):
        return [self.w, self.b]


def _pad_amount(length, kernel, stride, padding):
    if padding == "valid":
        return 0, 0
    if padding == "same":
        out_len = -(-length // stride)  # ceil
        total = max((out_len - 1) * stride + kernel - length, 0)
        return total // 2, total - total // 2
    raise ValueError(f"unknown padding {padding!r}")


class Conv1D(Layer):
    """1-D convolution over (B, C_in, T) with stride and same/valid padding."""

    def __init__(self, in_ch, out_ch, kernel, stride=1, padding="same", activation="linear",
                 rng=None, name="conv1d", dtype=np.float64):
        rng = rng or np.random.default_rng()
        self.name = name
        self.kernel, self.stride, self.padding, self.activation = kernel, stride, padding, activation
        fan_in, fan_out = in_ch * kernel, out_ch * kernel
        self.w = Param(glorot_uniform(rng, (out_ch, in_ch, kernel), fan_in, fan_out, dtype), f"{name}.w")
        self.b = Param(np.zeros(out_ch, dtype=dtype), f"{name}.b")
        self._cache = None

    def forward(self, x, training=False):
        pad_l, pad_r = _pad_amount(x.shape[2], self.kernel, self.stride, self.padding)
        xp = np.pad(x, ((0, 0), (0, 0), (pad_l, pad_r))) if pad_l or pad_r else x
        windows = np.lib.stride_tricks.sliding_window_view(xp, self.kernel, axis=2)[:, :, :: self.stride]
        # windows: (B, C_in, T_out, K); contract C_in and K against the kernel
        z = np.tensordot(windows, self.w.value, axes=([1, 3], [1, 2]))  # (B, T_out, C_out)
        z = np.ascontiguousarray(z.transpose(0, 2, 1)) + self.b.value[:, None]
        self._cache = (xp.shape, windows, z, pad_l, x.shape[2])
        return apply_activation(z, self.activation)

    def backward(self, dy):
        xp_shape, windows, z, pad_l, t_in = self._cache
        dz = dy * activation_grad(z, self.activation)  # (B, C_out, T_out)
        self.w.grad += np.tensordot(dz, windows, axes=([0, 2], [0, 2]))  # (C_out, C_in, K)
        self.b.grad += dz.sum(axis=(0, 2))
        dxp = np.zeros(xp_shape, dtype=dz.dtype)
        t_out = dz.shape[2]
        for j in range(self.kernel):
            # each output position i pulls input position j + stride * i
            contrib = np.einsum("bot,oc->bct", dz, self.w.value[:, :, j])
            dxp[:, :, j : j + self.stride * t_out : self.stride] += contrib
        return dxp[:, :, pad_l : pad_l + t_in]

    def params(self):
        return [self.w, self.b]


class Conv2D(Layer):
    """2-D convolution over (B, C_in, H, W); square or rectangular kernels."""

    def __init__(self, in_ch, out_ch, kernel, stride=1, padding="valid", activation="linear",
                 rng=None, name="conv2d", dtype=np.float64):
        rng = rng or np.random.default_rng()
        self.name = name
        kh, kw = (kernel, kernel) if np.isscalar(kernel) else kernel
        sh, sw = (stride, stride) if np.isscalar(stride) else stride
        self.kh, self.kw, self.sh, self.sw = kh, kw, sh, sw
        self.padding, self.activation = padding, activation
        fan_in, fan_out = in_ch * kh * kw, out_ch * kh * kw
        self.w = Param(glorot_uniform(rng, (out_ch, in_ch, kh, kw), fan_in, fan_out, dtype), f"{name}.w")
        self.b = Param(np.zeros(out_ch, dtype=dtype), f"{name}.b")
        self._cache = None

    def forward(self, x, training=False):
        pt, pb = _pad_amount(x.shape[2], self.kh, self.sh, self.padding)
        pl, pr = _pad_amount(x.shape[3], self.kw, self.sw, self.padding)
        xp = np.pad(x, ((0, 0), (0, 0), (pt, pb), (pl, pr))) if pt or pb or pl or pr else x
        windows = np.lib.stride_tricks.sliding_window_view(xp, (self.kh, self.kw), axis=(2, 3))
        windows = windows[:, :, :: self.sh, :: self.sw]  # (B, C_in, H_out, W_out, kh, kw)
        z = np.tensordot(windows, self.w.value, axes=([1, 4, 5], [1, 2, 3]))  # (B, H_out, W_out, C_out)
        z = np.ascontiguousarray(z.transpose(0, 3, 1, 2)) + self.b.value[:, None, None]
        self._cache = (xp.shape, windows, z, pt, pl, x.shape[2], x.shape[3])
        return apply_activation(z, self.activation)

    def backward(self, dy):
        xp_shape, windows, z, pt, pl, h_in, w_in = self._cache
        dz = dy * activation_grad(z, self.activation)  # (B, C_out, H_out, W_out)
        self.w.grad += np.tensordot(dz, windows, axes=([0, 2, 3], [0, 2, 3]))
        self.b.grad += dz.sum(axis=(0, 2, 3))
        dxp = np.zeros(xp_shape, dtype=dz.dtype)
        h_out, w_out = dz.shape[2], dz.shape[3]
        for u in range(self.kh):
            for v in range(self.kw):
                contrib = np.einsum("bohw,oc->bchw", dz, self.w.value[:, :, u, v])
                dxp[:, :, u : u + self.sh * h_out : self.sh, v : v + self.sw * w_out : self.sw] += contrib
        return dxp[:, :, pt : pt + h_in, pl : pl + w_in]

    def params(self):
        return [self.w, self.b]


class BiLSTM(Layer):
    """Bidirectional LSTM over (B, T, D) -> (B, T, 2H).

    Gates are packed [input, forget, output, candidate]; the forget
    bias starts at 1 so early training does not flush cell state.
    Backward is full backpropagation through time.
    """

    def __init__(self, in_dim, hidden, rng=None, name="bilstm", dtype=np.float64):
        rng = rng or np.random.default_rng()
        self.name = name
        self.hidden = hidden
        scale = 1.0 / np.sqrt(hidden)

        def make(tag):
            wx = Param(rng.uniform(-scale, scale, size=(in_dim, 4 * hidden)).astype(dtype), f"{name}.{tag}.wx")
            wh = Param(rng.uniform(-scale, scale, size=(hidden, 4 * hidden)).astype(dtype), f"{name}.{tag}.wh")
            b = np.zeros(4 * hidden, dtype=dtype)
            b[hidden : 2 * hidden] = 1.0
            return wx, wh, Param(b, f"{name}.{tag}.b")

        self.fwd = make("fwd")
        self.bwd = make("bwd")
        self._cache = None

    def _run_direction(self, x, weights):
        wx, wh, b = weights
        batch, steps, _ = x.shape
        h_dim = self.hidden
        h = np.zeros((batch, h_dim), dtype=x.dtype)
        c = np.zeros((batch, h_dim), dtype=x.dtype)
        hs = np.zeros((batch, steps, h_dim), dtype=x.dtype)
        cache = []
        for t in range(steps):
            z = x[:, t] @ wx.value + h @ wh.value + b.value
            i = _sigmoid(z[:, :h_dim])
            f = _sigmoid(z[:, h_dim : 2 * h_dim])
            o = _sigmoid(z[:, 2 * h_dim : 3 * h_dim])
            g = np.tanh(z[:, 3 * h_dim :])
            c_new = f * c + i * g
            tanh_c = np.tanh(c_new)
            h_new = o * tanh_c
            cache.append((x[:, t], h, c, i, f, o, g, tanh_c))
            h, c = h_new, c_new
            hs[:, t] = h
        return hs, cache

    def _backward_direction(self, x, dhs, weights, cache):
        wx, wh, b = weights
        batch, steps, _ = x.shape
        h_dim = self.hidden
        dx = np.zeros_like(x)
        dh_next = np.zeros((batch, h_dim), dtype=x.dtype)
        dc_next = np.zeros((batch, h_dim), dtype=x.dtype)
        for t in range(steps - 1, -1, -1):
            x_t, h_prev, c_prev, i, f, o, g, tanh_c = cache[t]
            dh = dhs[:, t] + dh_next
            do = dh * tanh_c
            dc = dh * o * (1.0 - tanh_c**2) + dc_next
            di, df, dg = dc * g, dc * c_prev, dc * i
            dz = np.concatenate(
                [
                    di * i * (1.0 - i),
                    df * f * (1.0 - f),
                    do * o * (1.0 - o),
                    dg * (1.0 - g**2),
                ],
                axis=1,
            )
            wx.grad += x_t.T @ dz
            wh.grad += h_prev.T @ dz
            b.grad += dz.sum(axis=0)
            dx[:, t] = dz @ wx.value.T
            dh_next = dz @ wh.value.T
            dc_next = dc * f
        return dx

    def forward(self, x, training=False):
        hs_f, cache_f = self._run_direction(x, self.fwd)
        hs_b_rev, cache_b = self._run_direction(x[:, ::-1], self.bwd)
        self._cache = (x, cache_f, cache_b)
        return np.concatenate([hs_f, hs_b_rev[:, ::-1]], axis=2)

    def backward(self, dy):
        x, cache_f, cache_b = self._cache
        h_dim = self.hidden
        dx_f = self._backward_direction(x, dy[:, :, :h_dim], self.fwd, cache_f)
        dx_b = self._backward_direction(
            np.ascontiguousarray(x[:, ::-1]), np.ascontiguousarray(dy[:, ::-1, h_dim:]), self.bwd, cache_b
        )
        return dx_f + dx_b[:, ::-1]

    def params(self):
        return [*self.fwd, *self.bwd]


class GlobalAvgPool(Layer):
    """Mean over axis 1: (B, T, C) -> (B, C)."""

    name = "gap"

    def __init__(self):
        self._shape = None

    def forward(self, x, training=False):
        self._shape = x.shape
        return x.mean(axis=1)

    def backward(self, dy):
        b, t, c = self._shape
        return np.broadcast_to(dy[:, None, :] / t, (b, t, c)).astype(dy.dtype)


class Flatten(Layer):
    name = "flatten"

    def __init__(self):
        self._shape = None

    def forward(self, x, training=False):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class Transpose(Layer):
    """Fixed axis permutation, e.g. channels-first to time-major."""

    def __init__(self, axes):
        self.axes = tuple(axes)
        self._inverse = tuple(np.argsort(self.axes))
        self.name = f"transpose{self.axes}"

    def forward(self, x, training=False):
        return np.ascontiguousarray(np.transpose(x, self.axes))

    def backward(self, dy):
        return np.ascontiguousarray(np.transpose(dy, self._inverse))


class Dropout(Layer):
    """Inverted dropout: active in training, identity at inference."""

    def __init__(self, rate, rng=None, name="dropout"):
        if not 0.0 <= rate < 1.0:
            raise ValueError("dropout rate must be in [0, 1)")
        self.rate = rate
        self.rng = rng or np.random.default_rng()
        self.name = name
        self._mask = None

    def forward(self, x, training=False):
        if not training or self.rate == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.rate
        self._mask = (self.rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dy):
        return dy if self._mask is None else dy * self._mask


class AttentionFusion(Layer):
    """Feature-wise attention: weight each fused feature by a softmax gate.

    scores = x @ W + beta, omega = softmax(scores) across features,
    output = x * omega. The gate lets the model re-balance the two
    branch feature blocks per example.
    """

    def __init__(self, dim, rng=None, name="attention", dtype=np.float64):
        rng = rng or np.random.default_rng()
        self.name = name
        self.w = Param(glorot_uniform(rng, (dim, dim), dim, dim, dtype), f"{name}.w")
        self.beta = Param(np.zeros(dim, dtype=dtype), f"{name}.beta")
        self._cache = None

    def attention_weights(self, x):
        scores = x @ self.w.value + self.beta.value
        shifted = scores - scores.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=1, keepdims=True)

    def forward(self, x, training=False):
        omega = self.attention_weights(x)
        self._cache = (x, omega)
        return x * omega

    def backward(self, dy):
        x, omega = self._cache
        d_omega = dy * x
        d_scores = omega * (d_omega - (d_omega * omega).sum(axis=1, keepdims=True))
        self.w.grad += x.T @ d_scores
        self.beta.grad += d_scores.sum(axis=0)
        return dy * omega + d_scores @ self.w.value.T

    def params(self):
        return [self.w, self.beta]
