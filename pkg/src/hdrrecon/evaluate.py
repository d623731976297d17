"""Quantitative evaluation: MSE tables, dataset statistics, exposure sweeps.

The four error columns follow one convention everywhere: Direct is the
mask-weighted log-domain MSE; I/R, I and R are the combined loss with
lambda = 0.5, 1 and 0 respectively, so I/R = 0.5 I + 0.5 R by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .camera import TrainingPair, clip_quantize, exposure_scale
from .image import ImageHDR, histogram
from .losses import LossConfig, blend_mask, direct_loss, ir_loss
from .network import Network
from .reconstruct import linearize, predict_log

ERROR_COLUMNS = ("direct", "ir", "i", "r")

# Full-scale numbers reported in the source work's Table 1 (direct MSE):
# Reference 0.999, no skip-connections 0.249, direct loss 0.189,
# I/R loss 0.178, pre-training + I/R loss 0.159. Kept for documentation;
# desk-scale runs are compared by ordering, never against these values.
PUBLISHED_DIRECT_MSE = {
    "reference": 0.999,
    "no_skip": 0.249,
    "direct_loss": 0.189,
    "ir_loss": 0.178,
    "pretrain_ir": 0.159,
}


@dataclass(frozen=True)
class MseReport:
    rows: dict[str, dict[str, float]]
    image_count: int
    config: LossConfig

    def to_text(self) -> str:
        lines = [f"{'method':<16}" + "".join(f"{c:>10}" for c in ERROR_COLUMNS)]
        for name, row in self.rows.items():
            lines.append(f"{name:<16}" + "".join(f"{row[c]:>10.4f}" for c in ERROR_COLUMNS))
        lines.append(f"images = {self.image_count}")
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        lines = ["method\t" + "\t".join(ERROR_COLUMNS)]
        for name, row in self.rows.items():
            lines.append(name + "\t" + "\t".join(repr(row[c]) for c in ERROR_COLUMNS))
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SweepReport:
    fractions: tuple[float, ...]
    rows: dict[float, dict[str, float]]

    def to_text(self) -> str:
        lines = [f"{'clipped':<10}" + "".join(f"{c:>10}" for c in ERROR_COLUMNS)]
        for v in self.fractions:
            row = self.rows[v]
            lines.append(f"{v:<10.3f}" + "".join(f"{row[c]:>10.4f}" for c in ERROR_COLUMNS))
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        lines = ["fraction\t" + "\t".join(ERROR_COLUMNS)]
        for v in self.fractions:
            lines.append(repr(v) + "\t" + "\t".join(repr(self.rows[v][c]) for c in ERROR_COLUMNS))
        return "\n".join(lines) + "\n"


def four_errors(y_pred: np.ndarray, hdr: np.ndarray, alpha: np.ndarray,
                config: LossConfig) -> dict[str, float]:
    """Direct, I/R, I and R errors of one log-domain prediction."""
    out = {"direct": direct_loss(y_pred, hdr, alpha, config.eps)[0]}
    for name, lam in (("ir", config.lam), ("i", 1.0), ("r", 0.0)):
        out[name] = ir_loss(y_pred, hdr, alpha, replace(config, lam=lam, mode="ir"))[0]
    return out


def reference_log(ldr_data: np.ndarray, gamma: float = 2.0,
                  eps: float = 1.0 / 255.0) -> np.ndarray:
    """Pseudo-method: the unreconstructed input, log(f^-1(D) + eps)."""
    return np.log(linearize(ldr_data, gamma) + eps)


def mse_table(models: dict[str, Network], test_pairs: list[TrainingPair],
              config: LossConfig = LossConfig(), include_reference: bool = True) -> MseReport:
    """Average the four errors over the test set for each method."""
    if not test_pairs:
        raise ValueError("empty test set")
    methods: dict[str, object] = dict(models)
    if include_reference:
        methods["reference"] = None
    rows = {}
    for name, net in methods.items():
        acc = {c: 0.0 for c in ERROR_COLUMNS}
        for pair in test_pairs:
            alpha = blend_mask(pair.input.data, config.tau)
            if net is None:
                y = reference_log(pair.input.data, eps=config.eps)
            else:
                y = predict_log(net, pair.input)
            errs = four_errors(y, pair.target.data, alpha, config)
            for c in ERROR_COLUMNS:
                acc[c] += errs[c]
        rows[name] = {c: acc[c] / len(test_pairs) for c in ERROR_COLUMNS}
    return MseReport(rows=rows, image_count=len(test_pairs), config=config)


def exposure_sweep(net: Network, scene: ImageHDR, fractions: list[float],
                   config: LossConfig = LossConfig(), gamma: float = 2.0) -> SweepReport:
    """Reconstruction errors as a function of the clipped-pixel fraction.

    For each fraction v the scene is re-exposed so v of the pixels clip,
    display-encoded with the assumed gamma curve and quantized; errors are
    measured against the re-exposed linear scene.
    """
    if sorted(fractions) != list(fractions) or len(set(fractions)) != len(fractions):
        raise ValueError("fractions must be strictly increasing")
    rows = {}
    for v in fractions:
        scaled = scene.data.astype(np.float64)
        if v > 0:
            scaled = scaled * exposure_scale(scene, v)
        ldr = clip_quantize(np.minimum(scaled, 1.0) ** (1.0 / gamma))
        alpha = blend_mask(ldr.data, config.tau)
        y = predict_log(net, ldr)
        rows[v] = four_errors(y, scaled, alpha, config)
    return SweepReport(fractions=tuple(fractions), rows=rows)


@dataclass(frozen=True)
class StatsReport:
    kind: str
    image_count: int
    skipped: int
    mean_histogram: np.ndarray
    bin_edges: np.ndarray
    top_bin_mass: float
    per_image_top_mass: list[float]

    def to_text(self) -> str:
        lines = [f"kind = {self.kind}",
                 f"images = {self.image_count}",
                 f"skipped = {self.skipped}",
                 f"top_bin_mass = {self.top_bin_mass:.6f}"]
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        lines = ["bin_left\tbin_right\tmass"]
        for left, right, mass in zip(self.bin_edges[:-1], self.bin_edges[1:],
                                     self.mean_histogram):
            lines.append(f"{left!r}\t{right!r}\t{mass!r}")
        return "\n".join(lines) + "\n"


def dataset_stats(images: list[np.ndarray], kind: str, bins: int = 256,
                  skipped: int = 0) -> StatsReport:
    """Averaged per-image normalized histograms.

    LDR: value histogram over [0, 1]; the top bin is the saturation spike.
    HDR: histogram of log(1 + value), showing the high-intensity tail.
    """
    if kind not in ("ldr", "hdr"):
        raise ValueError("kind must be 'ldr' or 'hdr'")
    if not images:
        raise ValueError("no readable images")
    hists = []
    tops = []
    edges = None
    if kind == "ldr":
        lo, hi = 0.0, 1.0
    else:
        hi_val = max(float(np.log1p(img).max()) for img in images)
        lo, hi = 0.0, max(hi_val, 1e-6)
    for img in images:
        values = np.log1p(img) if kind == "hdr" else img
        h = histogram(values, bins, (lo, hi))
        hists.append(h.normalized())
        if kind == "ldr":
            tops.append(float((np.asarray(img).max(axis=-1) >= 1.0).mean()))
        else:
            tops.append(float(h.normalized()[-1]))
        edges = h.bin_edges
    mean_hist = np.mean(hists, axis=0)
    return StatsReport(kind=kind, image_count=len(images), skipped=skipped,
                       mean_histogram=mean_hist, bin_edges=edges,
                       top_bin_mass=float(np.mean(tops)), per_image_top_mass=tops)
