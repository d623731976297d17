"""Hybrid dynamic-range autoencoder: build, forward, backward, persistence.

Encoder: per level two 3x3 convs + ReLU, then 2x2 max pooling. Latent block:
two 3x3 convs. Decoder: per level a 4x4 stride-2 deconv (bilinear init),
batch normalization, ReLU and a domain-transform skip fusion with the
matching encoder level. A final 1x1 conv with linear activation reduces to
3 channels; the output lives in the log domain.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .layers import BatchNorm, Conv2D, Deconv2D, MaxPool2x2, ReLU, SkipFuse

MAGIC = b"HDRW"
FORMAT_VERSION = 1


class WeightFormatError(ValueError):
    """Raised on malformed or mismatched weight containers."""


@dataclass(frozen=True)
class NetworkConfig:
    levels: int
    channels: tuple[int, ...]
    latent_channels: int
    preset: str = "custom"
    use_skip: bool = True
    skip_eps: float = 1.0 / 255.0

    def __post_init__(self):
        if not 1 <= self.levels <= 5:
            raise ValueError("levels must be in [1, 5]")
        if len(self.channels) != self.levels:
            raise ValueError("need one channel count per level")
        if any(c < 1 for c in self.channels) or self.latent_channels < 1:
            raise ValueError("invalid channel progression")
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def downscale(self) -> int:
        return 2 ** self.levels


PRESETS = {
    # Desk-scale configuration used by the acceptance tests.
    "toy": NetworkConfig(levels=3, channels=(32, 64, 128), latent_channels=128, preset="toy"),
    # VGG16-shaped encoder; exercised by shape tests only.
    "full": NetworkConfig(levels=5, channels=(64, 128, 256, 512, 512),
                          latent_channels=512, preset="full"),
    # Tiny net for gradient checks.
    "micro": NetworkConfig(levels=2, channels=(8, 8), latent_channels=8, preset="micro"),
}


def preset_config(name: str, use_skip: bool = True) -> NetworkConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    base = PRESETS[name]
    if use_skip == base.use_skip:
        return base
    return NetworkConfig(base.levels, base.channels, base.latent_channels,
                         preset=base.preset, use_skip=use_skip)


class Network:
    """Autoencoder with cached activations for the analytic backward pass."""

    def __init__(self, config: NetworkConfig, init_seed: int = 0, dtype=np.float32):
        self.config = config
        self.dtype = dtype
        rng = np.random.default_rng(init_seed)
        ch = config.channels
        L = config.levels

        self.enc_convs: list[list[Conv2D]] = []
        prev = 3
        for lvl in range(L):
            c1 = Conv2D(3, prev, ch[lvl], rng, dtype)
            c2 = Conv2D(3, ch[lvl], ch[lvl], rng, dtype)
            self.enc_convs.append([c1, c2])
            prev = ch[lvl]
        self.pools = [MaxPool2x2() for _ in range(L)]
        self.enc_relus = [[ReLU(), ReLU()] for _ in range(L)]

        self.latent = [Conv2D(3, prev, config.latent_channels, rng, dtype),
                       Conv2D(3, config.latent_channels, config.latent_channels, rng, dtype)]
        self.latent_relus = [ReLU(), ReLU()]

        self.deconvs: list[Deconv2D] = []
        self.bns: list[BatchNorm] = []
        self.dec_relus: list[ReLU] = []
        self.fuses: list[SkipFuse | None] = []
        prev = config.latent_channels
        for lvl in reversed(range(L)):
            self.deconvs.append(Deconv2D(prev, ch[lvl], dtype))
            self.bns.append(BatchNorm(ch[lvl], dtype=dtype))
            self.dec_relus.append(ReLU())
            self.fuses.append(SkipFuse(ch[lvl], eps=config.skip_eps, dtype=dtype)
                              if config.use_skip else None)
            prev = ch[lvl]

        self.out_conv = Conv2D(1, ch[0], 3, rng, dtype)

        # Warm-start biases: Xavier-scaled ReLU activations shrink with depth,
        # and the skip fusion adds log(h_E^2 + eps) which is around -5 for the
        # deepest (weakest) encoder features. With zero biases every fusion
        # pre-activation is negative, the whole decoder rests at exactly zero
        # and no gradient reaches it. A pretrained encoder (whose features are
        # order-one or larger) would not have this problem; small positive
        # conv biases and batchnorm offsets restore that regime so the decoder
        # is live from the first step.
        for convs in self.enc_convs:
            for conv in convs:
                conv.b[...] = 0.25
        for conv in self.latent:
            conv.b[...] = 0.25
        for bn in self.bns:
            bn.beta[...] = 1.0
        self._forward_done = False

    # -- parameter enumeration (declaration order; stable for save/optim) ----

    def _named_layers(self):
        for lvl, pair in enumerate(self.enc_convs):
            yield f"enc{lvl}a", pair[0]
            yield f"enc{lvl}b", pair[1]
        yield "latent_a", self.latent[0]
        yield "latent_b", self.latent[1]
        for idx in range(self.config.levels):
            yield f"deconv{idx}", self.deconvs[idx]
            yield f"bn{idx}", self.bns[idx]
            if self.fuses[idx] is not None:
                yield f"fuse{idx}", self.fuses[idx]
        yield "out", self.out_conv

    def parameters(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self._named_layers():
            for key, arr in layer.params().items():
                out[f"{name}.{key}"] = arr
        return out

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self._named_layers():
            for key, arr in layer.grads().items():
                out[f"{name}.{key}"] = arr
        return out

    def state_arrays(self) -> dict[str, np.ndarray]:
        out = {}
        for name, layer in self._named_layers():
            for key, arr in layer.state().items():
                out[f"{name}.{key}"] = arr
        return out

    def zero_grad(self) -> None:
        for g in self.gradients().values():
            g[...] = 0

    def parameter_count(self) -> int:
        return sum(arr.size for arr in self.parameters().values())

    # -- forward / backward --------------------------------------------------

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Input (N, H, W, 3) LDR values; returns log-domain (N, H, W, 3)."""
        d = self.config.downscale
        if x.shape[1] % d or x.shape[2] % d:
            raise ValueError(f"spatial dims must be divisible by {d}, got {x.shape[1:3]}")
        x = x.astype(self.dtype, copy=False)
        skips = []
        for lvl in range(self.config.levels):
            x = self.enc_relus[lvl][0].forward(self.enc_convs[lvl][0].forward(x))
            x = self.enc_relus[lvl][1].forward(self.enc_convs[lvl][1].forward(x))
            skips.append(x)
            x = self.pools[lvl].forward(x)
        x = self.latent_relus[0].forward(self.latent[0].forward(x))
        x = self.latent_relus[1].forward(self.latent[1].forward(x))
        for idx in range(self.config.levels):
            lvl = self.config.levels - 1 - idx
            x = self.deconvs[idx].forward(x)
            x = self.bns[idx].forward(x, training)
            x = self.dec_relus[idx].forward(x)
            if self.fuses[idx] is not None:
                x = self.fuses[idx].forward(x, skips[lvl])
        y = self.out_conv.forward(x)
        self._forward_done = True
        return y

    def backward(self, dy: np.ndarray) -> None:
        """Accumulate parameter gradients for the cached forward pass."""
        if not self._forward_done:
            raise RuntimeError("backward called before forward")
        dskips = [None] * self.config.levels
        dx = self.out_conv.backward(dy.astype(self.dtype, copy=False))
        for idx in reversed(range(self.config.levels)):
            lvl = self.config.levels - 1 - idx
            if self.fuses[idx] is not None:
                dx, denc = self.fuses[idx].backward(dx)
                dskips[lvl] = denc
            dx = self.dec_relus[idx].backward(dx)
            dx = self.bns[idx].backward(dx)
            dx = self.deconvs[idx].backward(dx)
        dx = self.latent[1].backward(self.latent_relus[1].backward(dx))
        dx = self.latent[0].backward(self.latent_relus[0].backward(dx))
        for lvl in reversed(range(self.config.levels)):
            dx = self.pools[lvl].backward(dx)
            if dskips[lvl] is not None:
                dx = dx + dskips[lvl]
            dx = self.enc_convs[lvl][1].backward(self.enc_relus[lvl][1].backward(dx))
            dx = self.enc_convs[lvl][0].backward(self.enc_relus[lvl][0].backward(dx))


# ---------------------------------------------------------------------------
# ADAM

@dataclass
class AdamState:
    lr: float = 5e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
              state: AdamState) -> None:
    """One in-place ADAM update with bias correction."""
    if not state.m:
        for name, p in params.items():
            state.m[name] = np.zeros_like(p, dtype=np.float64)
            state.v[name] = np.zeros_like(p, dtype=np.float64)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, p in params.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * np.square(g)
        p -= (state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype)


# ---------------------------------------------------------------------------
# Weight container: MAGIC, version, config block, named float32 arrays.

def _write_str(fh, s: str) -> None:
    b = s.encode("utf-8")
    fh.write(struct.pack("<I", len(b)))
    fh.write(b)


def _read_exact(fh, n: int) -> bytes:
    b = fh.read(n)
    if len(b) != n:
        raise WeightFormatError("truncated weight file")
    return b


def _read_str(fh) -> str:
    (n,) = struct.unpack("<I", _read_exact(fh, 4))
    return _read_exact(fh, n).decode("utf-8")


def save_weights(net: Network, path) -> None:
    arrays = {**net.parameters(), **net.state_arrays()}
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        cfg = net.config
        fh.write(struct.pack("<I", cfg.levels))
        fh.write(struct.pack("<I", len(cfg.channels)))
        for c in cfg.channels:
            fh.write(struct.pack("<I", c))
        fh.write(struct.pack("<I", cfg.latent_channels))
        fh.write(struct.pack("<I", 1 if cfg.use_skip else 0))
        fh.write(struct.pack("<d", cfg.skip_eps))
        _write_str(fh, cfg.preset)
        fh.write(struct.pack("<I", len(arrays)))
        for name, arr in arrays.items():
            _write_str(fh, name)
            fh.write(struct.pack("<I", arr.ndim))
            for d in arr.shape:
                fh.write(struct.pack("<I", d))
            fh.write(arr.astype("<f4").tobytes())


def load_weights(path, dtype=np.float32) -> Network:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise WeightFormatError("bad magic; not a weight file")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != FORMAT_VERSION:
            raise WeightFormatError(f"unsupported weight format version {version}")
        (levels,) = struct.unpack("<I", _read_exact(fh, 4))
        (nch,) = struct.unpack("<I", _read_exact(fh, 4))
        channels = tuple(struct.unpack("<I", _read_exact(fh, 4))[0] for _ in range(nch))
        (latent,) = struct.unpack("<I", _read_exact(fh, 4))
        (use_skip,) = struct.unpack("<I", _read_exact(fh, 4))
        (skip_eps,) = struct.unpack("<d", _read_exact(fh, 8))
        preset = _read_str(fh)
        config = NetworkConfig(levels=levels, channels=channels, latent_channels=latent,
                               preset=preset, use_skip=bool(use_skip), skip_eps=skip_eps)
        net = Network(config, init_seed=0, dtype=dtype)
        targets = {**net.parameters(), **net.state_arrays()}
        (count,) = struct.unpack("<I", _read_exact(fh, 4))
        seen = set()
        for _ in range(count):
            name = _read_str(fh)
            (ndim,) = struct.unpack("<I", _read_exact(fh, 4))
            shape = tuple(struct.unpack("<I", _read_exact(fh, 4))[0] for _ in range(ndim))
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(_read_exact(fh, 4 * n), dtype="<f4").reshape(shape)
            if name not in targets:
                raise WeightFormatError(f"unknown array {name!r} for this config")
            if targets[name].shape != shape:
                raise WeightFormatError(
                    f"shape mismatch for {name!r}: file {shape}, config {targets[name].shape}")
            targets[name][...] = data.astype(dtype)
            seen.add(name)
        missing = set(targets) - seen
        if missing:
            raise WeightFormatError(f"weight file missing arrays: {sorted(missing)}")
    return net


# ---------------------------------------------------------------------------
# Line-oriented network config files.

def config_to_text(cfg: NetworkConfig) -> str:
    return (f"levels = {cfg.levels}\n"
            f"channels = {', '.join(str(c) for c in cfg.channels)}\n"
            f"latent_channels = {cfg.latent_channels}\n"
            f"preset = {cfg.preset}\n"
            f"use_skip = {cfg.use_skip}\n")


def config_from_text(text: str) -> NetworkConfig:
    fields: dict[str, str] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"malformed config line: {line!r}")
        fields[key.strip()] = value.strip()
    if "preset" in fields and set(fields) == {"preset"}:
        return preset_config(fields["preset"])
    return NetworkConfig(
        levels=int(fields["levels"]),
        channels=tuple(int(c) for c in fields["channels"].replace(",", " ").split()),
        latent_channels=int(fields["latent_channels"]),
        preset=fields.get("preset", "custom"),
        use_skip=fields.get("use_skip", "True") in ("True", "true", "1"),
    )
