# SPDX-License-Identifier: Apache-2.0
# Copyright 2026 The respnet Authors
"""Wavelet spectrograms and respiratory sound classification."""

from ._core import (
    Classifier,
    DataError,
    Error,
    FormatError,
    InvalidConfig,
    InvalidInput,
    NumericError,
    UsageError,
    cwt,
    evaluate,
    evaluate_labels,
    extract,
    generate_synthetic,
    read_wav,
    scale_grid,
    scores,
    spectrogram,
    train,
)

__all__ = [
    "Classifier",
    "DataError",
    "Error",
    "FormatError",
    "InvalidConfig",
    "InvalidInput",
    "NumericError",
    "UsageError",
    "cwt",
    "evaluate",
    "evaluate_labels",
    "extract",
    "generate_synthetic",
    "read_wav",
    "scale_grid",
    "scores",
    "spectrogram",
    "train",
]
