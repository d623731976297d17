"""Tests for the evaluation harness."""

import numpy as np

from hdrrecon.camera import CameraParams, TrainingPair, clip_quantize
from hdrrecon.evaluate import (
    ERROR_COLUMNS,
    dataset_stats,
    exposure_sweep,
    four_errors,
    mse_table,
    reference_log,
)
from hdrrecon.image import ImageHDR
from hdrrecon.losses import LossConfig, blend_mask
from hdrrecon.network import Network, preset_config


def micro_net(seed=0):
    return Network(preset_config("micro"), init_seed=seed, dtype=np.float32)


def synthetic_pairs(count, size=16, seed=0):
    rng = np.random.default_rng(seed)
    cam = CameraParams(0.9, 0.6, 0.1, 0.0, 0.0, 0.0, False)
    pairs = []
    for _ in range(count):
        hdr = np.exp(rng.normal(0, 1.5, (size, size, 3))).astype(np.float32)
        pairs.append(TrainingPair(clip_quantize(hdr.astype(np.float64)),
                                  ImageHDR(hdr), cam))
    return pairs


class TestFourErrors:
    def _case(self, seed=0):
        rng = np.random.default_rng(seed)
        ldr = rng.uniform(0, 1, (1, 8, 8, 3))
        ldr[:, 1:3, 1:3] = 1.0
        hdr = np.exp(rng.normal(0, 1, (1, 8, 8, 3)))
        y = rng.normal(size=(1, 8, 8, 3))
        return y, hdr, blend_mask(ldr)

    def test_columns(self):
        y, hdr, alpha = self._case()
        errors = four_errors(y, hdr, alpha, LossConfig())
        assert set(errors) == set(ERROR_COLUMNS)

    def test_ir_is_mean_of_components(self):
        y, hdr, alpha = self._case(1)
        errors = four_errors(y, hdr, alpha, LossConfig(lam=0.5))
        assert np.isclose(errors["ir"],
                          0.5 * errors["i"] + 0.5 * errors["r"], atol=1e-12)

    def test_ground_truth_scores_zero(self):
        _, hdr, alpha = self._case(2)
        errors = four_errors(np.log(hdr + 1 / 255), hdr, alpha, LossConfig())
        assert all(abs(v) < 1e-20 for v in errors.values())


class TestMseTable:
    def test_reference_has_all_columns(self):
        report = mse_table({"net": micro_net()}, synthetic_pairs(3))
        assert set(report.rows) == {"net", "reference"}
        for row in report.rows.values():
            assert set(row) == set(ERROR_COLUMNS)
        assert report.image_count == 3

    def test_deterministic(self):
        pairs = synthetic_pairs(2, seed=1)
        a = mse_table({"net": micro_net(1)}, pairs)
        b = mse_table({"net": micro_net(1)}, pairs)
        assert a.rows == b.rows

    def test_text_and_tsv_render(self):
        report = mse_table({"net": micro_net()}, synthetic_pairs(2))
        text = report.to_text()
        tsv = report.to_tsv()
        assert "reference" in text and "reference" in tsv
        assert len(tsv.splitlines()) == 3  # header + two rows


class TestReferenceLog:
    def test_matches_linearized_input(self):
        rng = np.random.default_rng(3)
        ldr = rng.uniform(0, 1, (4, 4, 3))
        expect = np.log(ldr ** 2 + 1 / 255)
        assert np.allclose(reference_log(ldr), expect)


class TestExposureSweep:
    def test_rows_and_determinism(self):
        scene = synthetic_pairs(1, size=16, seed=4)[0].target
        net = micro_net()
        report = exposure_sweep(net, scene, [0.05, 0.1, 0.15])
        assert report.fractions == (0.05, 0.1, 0.15)
        for row in report.rows.values():
            assert set(row) == set(ERROR_COLUMNS)
        again = exposure_sweep(net, scene, [0.05, 0.1, 0.15])
        assert report.rows == again.rows

    def test_monotone_fractions_required(self):
        scene = synthetic_pairs(1, seed=5)[0].target
        try:
            exposure_sweep(micro_net(), scene, [0.1, 0.1])
        except ValueError:
            return
        raise AssertionError("duplicate fractions should be rejected")


class TestDatasetStats:
    def test_ldr_top_bin_mass(self):
        codes = np.zeros((16, 16, 3), dtype=np.int64)
        codes[:4, :4] = 255  # 16 of 256 pixels fully saturated
        images = [(codes / 255.0).astype(np.float32)]
        report = dataset_stats(images, "ldr")
        assert np.isclose(report.top_bin_mass, 16 / 256)
        assert report.image_count == 1

    def test_hdr_histogram_normalized(self):
        rng = np.random.default_rng(6)
        images = [np.exp(rng.normal(0, 2, (8, 8, 3))) for _ in range(3)]
        report = dataset_stats(images, "hdr")
        assert np.isclose(report.mean_histogram.sum(), 1.0)
        assert report.kind == "hdr"

    def test_to_text(self):
        images = [np.zeros((4, 4, 3))]
        text = dataset_stats(images, "ldr").to_text()
        assert "ldr" in text
