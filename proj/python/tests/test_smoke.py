# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The respnet Authors

import math

import numpy as np
import pytest

import respnet


def test_scale_grid_is_log_spaced_highest_first():
    scales, freqs = respnet.scale_grid("morse", 5, 4000, 100.0, 1600.0)
    assert freqs[0] == pytest.approx(1600.0)
    assert freqs[-1] == pytest.approx(100.0)
    assert np.allclose(np.diff(np.log(freqs)), math.log(0.5))
    assert np.all(np.diff(scales) > 0)


@pytest.mark.parametrize("wavelet", ["morse", "amor", "bump"])
def test_unit_sinusoid_has_unit_coefficients(wavelet):
    t = np.arange(2048) / 4000.0
    x = np.sin(2 * np.pi * 500.0 * t)
    c = respnet.cwt(x, 4000, wavelet, bins=1, f_lo=500.0, f_hi=500.0 + 1e-9)
    assert c.shape == (1, 2048)
    assert c.dtype == np.complex128
    assert np.allclose(np.abs(c[0, 512:1536]), 1.0, atol=0.02)


def test_spectrogram_shape_and_values():
    rng = np.random.default_rng(0)
    x = rng.standard_normal(8000)
    s = respnet.spectrogram(x, 8000, "amor", freq_bins=16, time_frames=32, duration_seconds=1.0)
    assert s.shape == (16, 32)
    assert s.dtype == np.float32
    assert np.all(np.isfinite(s))


def test_bad_wavelet_raises_config_error():
    with pytest.raises(respnet.InvalidConfig):
        respnet.cwt(np.zeros(64), 4000, "haar")
    assert issubclass(respnet.InvalidConfig, respnet.Error)


def test_scores_and_label_evaluation():
    s = respnet.scores(0.81, 0.91)
    assert s["as"] == pytest.approx(0.86)
    assert s["hs"] == pytest.approx(2 * 0.81 * 0.91 / 1.72)
    r = respnet.evaluate_labels("1-1", ["N", "N", "CC", "W"], ["N", "CC", "CC", "N"])
    assert r["class_names"] == ["Normal", "Adventitious"]
    assert r["confusion"].tolist() == [[1, 1], [1, 1]]
    assert r["se"] == pytest.approx(0.5)
    assert r["sp"] == pytest.approx(0.5)
    assert r["score"] == pytest.approx(0.5)


def test_end_to_end_on_synthetic_corpus(tmp_path):
    manifest = respnet.generate_synthetic(tmp_path / "data", seed=3, per_class=2)
    overrides = {
        "task": "1-1",
        "seed": "5",
        "dsp.size": "128x128",
        "dsp.event_seconds": "1.5",
        "dsp.record_seconds": "2.5",
        "train.epochs": "1",
        "augment.crop_bins": "4",
        "model.doub_inc_channels": "4",
        "model.inc_res_channels": "4,8",
        "model.attn_heads": "1",
        "model.attn_key_dim": "4",
        "model.fc_hidden": "8",
    }
    index = respnet.extract(manifest, tmp_path / "features", overrides=overrides)
    summary = respnet.train(index, tmp_path / "run", overrides=overrides)
    assert summary["epochs_completed"] == 1
    report = respnet.evaluate(summary["checkpoint"], index, "1-1", "all", tmp_path / "eval")
    assert report["confusion"].sum() == 14

    clf = respnet.Classifier.load(summary["checkpoint"])
    assert clf.task == "1-1"
    assert clf.class_names == ["Normal", "Adventitious"]
    f, t = clf.input_size
    probs = clf.predict(np.zeros((3, 128, 128), dtype=np.float32))
    assert probs.shape == (3, 2)
    assert np.allclose(probs.sum(axis=1), 1.0)
    assert (f, t) == (124, 124)
