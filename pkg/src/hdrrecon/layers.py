"""Network layer primitives with analytic forward/backward passes.

Tensors are numpy arrays with dims (batch, height, width, channels). Each
layer owns its parameter arrays and matching gradient arrays; forward caches
whatever backward needs. Everything is written against a configurable dtype
(float32 for training speed, float64 for gradient checks).
"""

from __future__ import annotations

import numpy as np


def xavier_uniform(shape, fan_in, fan_out, rng, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def bilinear_kernel_1d(size: int = 4, stride: int = 2) -> np.ndarray:
    """Interpolation weights of the standard bilinear upsampling kernel."""
    if size % 2 == 0:
        center = stride - 0.5
    else:
        center = stride - 1
    return 1.0 - np.abs(np.arange(size) - center) / stride


class Layer:
    """Base: parameter/gradient bookkeeping shared by all layers."""

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def grads(self) -> dict[str, np.ndarray]:
        return {}

    def state(self) -> dict[str, np.ndarray]:
        """Non-trainable persisted arrays (e.g. batchnorm running stats)."""
        return {}


class Conv2D(Layer):
    """3x3 (or 1x1) convolution, stride 1, same-size zero padding."""

    def __init__(self, kernel: int, cin: int, cout: int, rng, dtype=np.float32):
        self.kernel = kernel
        self.cin = cin
        self.cout = cout
        fan = kernel * kernel
        self.w = xavier_uniform((kernel, kernel, cin, cout), fan * cin, fan * cout, rng, dtype)
        self.b = np.zeros(cout, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        k = self.kernel
        pad = k // 2
        n, h, w, _ = x.shape
        if pad:
            xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad), (0, 0)))
        else:
            xp = x
        out = np.tile(self.b, (n, h, w, 1)).astype(x.dtype)
        for i in range(k):
            for j in range(k):
                patch = xp[:, i:i + h, j:j + w, :].reshape(-1, self.cin)
                out += (patch @ self.w[i, j]).reshape(n, h, w, self.cout)
        self._cache = (xp, x.shape)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xp, xshape = self._cache
        k = self.kernel
        pad = k // 2
        n, h, w, _ = xshape
        dflat = dout.reshape(-1, self.cout)
        self.db += dflat.sum(axis=0)
        dxp = np.zeros_like(xp)
        for i in range(k):
            for j in range(k):
                patch = xp[:, i:i + h, j:j + w, :].reshape(-1, self.cin)
                self.dw[i, j] += patch.T @ dflat
                dxp[:, i:i + h, j:j + w, :] += (dflat @ self.w[i, j].T).reshape(n, h, w, self.cin)
        if pad:
            return dxp[:, pad:-pad, pad:-pad, :]
        return dxp

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}


class Deconv2D(Layer):
    """4x4 stride-2 transposed convolution cropped to exactly 2x input size.

    Initialized to bilinear upsampling: each output channel takes the
    separable interpolation kernel from one input channel (matching index,
    modulo the channel count), all cross-channel weights zero.
    """

    KERNEL = 4
    STRIDE = 2

    def __init__(self, cin: int, cout: int, dtype=np.float32):
        self.cin = cin
        self.cout = cout
        k1 = bilinear_kernel_1d(self.KERNEL, self.STRIDE)
        k2 = np.outer(k1, k1)
        self.w = np.zeros((self.KERNEL, self.KERNEL, cin, cout), dtype=dtype)
        for co in range(cout):
            self.w[:, :, co % cin, co] = k2
        self.b = np.zeros(cout, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._cache = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, _ = x.shape
        k, s = self.KERNEL, self.STRIDE
        # Scatter into a frame padded by 1 on each side, then crop: output
        # pixel 2y+i-1 receives x[y] * w[i] (i in 0..3).
        full = np.zeros((n, s * h + k - s, s * w + k - s, self.cout), dtype=x.dtype)
        xflat = x.reshape(-1, self.cin)
        for i in range(k):
            for j in range(k):
                contrib = (xflat @ self.w[i, j]).reshape(n, h, w, self.cout)
                full[:, i:i + s * h:s, j:j + s * w:s, :] += contrib
        out = full[:, 1:1 + s * h, 1:1 + s * w, :] + self.b
        self._cache = (x, full.shape)
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x, full_shape = self._cache
        n, h, w, _ = x.shape
        k, s = self.KERNEL, self.STRIDE
        self.db += dout.reshape(-1, self.cout).sum(axis=0)
        dfull = np.zeros(full_shape, dtype=dout.dtype)
        dfull[:, 1:1 + s * h, 1:1 + s * w, :] = dout
        dx = np.zeros_like(x)
        xflat = x.reshape(-1, self.cin)
        for i in range(k):
            for j in range(k):
                g = dfull[:, i:i + s * h:s, j:j + s * w:s, :].reshape(-1, self.cout)
                self.dw[i, j] += xflat.T @ g
                dx += (g @ self.w[i, j].T).reshape(n, h, w, self.cin)
        return dx

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}


class MaxPool2x2(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        n, h, w, c = x.shape
        if h % 2 or w % 2:
            raise ValueError("pooling requires even spatial dims")
        windows = x.reshape(n, h // 2, 2, w // 2, 2, c).transpose(0, 1, 3, 5, 2, 4)
        windows = windows.reshape(n, h // 2, w // 2, c, 4)
        self._argmax = windows.argmax(axis=-1)
        self._inshape = x.shape
        return windows.max(axis=-1)

    def backward(self, dout: np.ndarray) -> np.ndarray:
        n, h, w, c = self._inshape
        dwin = np.zeros((n, h // 2, w // 2, c, 4), dtype=dout.dtype)
        np.put_along_axis(dwin, self._argmax[..., None], dout[..., None], axis=-1)
        dx = dwin.reshape(n, h // 2, w // 2, c, 2, 2).transpose(0, 1, 4, 2, 5, 3)
        return dx.reshape(n, h, w, c)


class ReLU(Layer):
    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        return dout * self._mask


class BatchNorm(Layer):
    """Per-channel batch normalization over (batch, height, width)."""

    def __init__(self, channels: int, eps: float = 1e-5, momentum: float = 0.99,
                 dtype=np.float32):
        self.eps = eps
        self.momentum = momentum
        self.gamma = np.ones(channels, dtype=dtype)
        self.beta = np.zeros(channels, dtype=dtype)
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)
        self.dgamma = np.zeros_like(self.gamma)
        self.dbeta = np.zeros_like(self.beta)
        self._cache = None

    def forward(self, x: np.ndarray, training: bool) -> np.ndarray:
        if training:
            axes = (0, 1, 2)
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            m = self.momentum
            self.running_mean = (m * self.running_mean + (1 - m) * mean).astype(self.running_mean.dtype)
            self.running_var = (m * self.running_var + (1 - m) * var).astype(self.running_var.dtype)
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        self._cache = (xhat, inv_std, training, x.shape)
        return self.gamma * xhat + self.beta

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xhat, inv_std, training, shape = self._cache
        axes = (0, 1, 2)
        self.dgamma += (dout * xhat).sum(axis=axes)
        self.dbeta += dout.sum(axis=axes)
        dxhat = dout * self.gamma
        if not training:
            return dxhat * inv_std
        m = shape[0] * shape[1] * shape[2]
        return inv_std / m * (m * dxhat - dxhat.sum(axis=axes)
                              - xhat * (dxhat * xhat).sum(axis=axes))

    def params(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def grads(self):
        return {"gamma": self.dgamma, "beta": self.dbeta}

    def state(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}


class SkipFuse(Layer):
    """Domain-transform skip fusion.

    fused = ReLU(W^T [h_D ; log(h_E^2 + eps)] + b), a 1x1 convolution over the
    2K concatenated channels. W starts as two stacked identities and b as
    zero, so at init the fusion is an elementwise addition of the decoder
    feature and the log-linearized encoder feature.
    """

    def __init__(self, channels: int, eps: float = 1.0 / 255.0, dtype=np.float32):
        self.channels = channels
        self.eps = eps
        eye = np.eye(channels, dtype=dtype)
        self.w = np.concatenate([eye, eye], axis=0)  # (2K, K)
        self.b = np.zeros(channels, dtype=dtype)
        self.dw = np.zeros_like(self.w)
        self.db = np.zeros_like(self.b)
        self._cache = None

    def forward(self, h_dec: np.ndarray, h_enc: np.ndarray) -> np.ndarray:
        if h_dec.shape != h_enc.shape:
            raise ValueError(f"skip shape mismatch: {h_dec.shape} vs {h_enc.shape}")
        k = self.channels
        lin = h_enc * h_enc + self.eps  # gamma-2 linearization of LDR features
        t = np.log(lin)
        z = h_dec @ self.w[:k] + t @ self.w[k:] + self.b
        mask = z > 0
        self._cache = (h_dec, h_enc, t, lin, mask)
        return z * mask

    def backward(self, dout: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        h_dec, h_enc, t, lin, mask = self._cache
        k = self.channels
        dz = dout * mask
        dzf = dz.reshape(-1, k)
        self.dw[:k] += h_dec.reshape(-1, k).T @ dzf
        self.dw[k:] += t.reshape(-1, k).T @ dzf
        self.db += dzf.sum(axis=0)
        dh_dec = dz @ self.w[:k].T
        dt = dz @ self.w[k:].T
        dh_enc = dt * (2.0 * h_enc / lin)
        return dh_dec, dh_enc

    def params(self):
        return {"w": self.w, "b": self.b}

    def grads(self):
        return {"w": self.dw, "b": self.db}
