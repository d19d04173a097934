"""NMSE, support-detection success, and Monte Carlo aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedMetricError


@dataclass(frozen=True)
class TrialOutcome:
    """Per-trial metrics; ``nmse_linear`` is NaN for fault-free trials."""

    nmse_linear: float
    support_exact: bool
    false_positives: int
    false_negatives: int


def nmse(v: np.ndarray, v_hat: np.ndarray) -> float:
    """Normalized error ``||v - v_hat||^2 / ||v||^2`` (linear ratio)."""
    v = np.asarray(v)
    v_hat = np.asarray(v_hat)
    denom = float(np.vdot(v, v).real)
    if denom == 0.0:
        raise UndefinedMetricError("NMSE undefined for a zero reference vector")
    diff = v - v_hat
    return float(np.vdot(diff, diff).real) / denom


def nmse_db(v: np.ndarray, v_hat: np.ndarray) -> float:
    """NMSE in decibels; -inf for an exact estimate."""
    return to_db(nmse(v, v_hat))


def to_db(linear: float) -> float:
    if linear < 0:
        raise ValueError(f"linear ratio must be >= 0, got {linear}")
    return -math.inf if linear == 0.0 else 10.0 * math.log10(linear)


def success(true_support, est_support) -> tuple[bool, int, int]:
    """Exact-set comparison of supports: (exact, false positives, false negatives)."""
    truth = set(np.asarray(true_support, dtype=int).tolist())
    est = set(np.asarray(est_support, dtype=int).tolist())
    fp = len(est - truth)
    fn = len(truth - est)
    return fp == 0 and fn == 0, fp, fn


def success_probability(flags) -> tuple[float, float]:
    """Mean success flag with its binomial standard error."""
    flags = np.asarray(flags, dtype=float)
    if flags.size == 0:
        return math.nan, math.nan
    p = float(flags.mean())
    se = math.sqrt(p * (1.0 - p) / flags.size)
    return p, se


def median_db(linear_values) -> float:
    """Median of linear NMSE samples, in dB (NaN if no samples)."""
    values = np.asarray([v for v in linear_values if not math.isnan(v)], dtype=float)
    if values.size == 0:
        return math.nan
    return to_db(float(np.median(values)))


def mean_db(linear_values) -> float:
    """Mean of linear NMSE samples, in dB (NaN if no samples)."""
    values = np.asarray([v for v in linear_values if not math.isnan(v)], dtype=float)
    if values.size == 0:
        return math.nan
    return to_db(float(values.mean()))
