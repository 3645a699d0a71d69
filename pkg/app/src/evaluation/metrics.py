"""
Evaluation metrics: accumulated relative load error, noise ratio and the
final-error summary table.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
import pandas as pd

from app.utils.exceptions import DegenerateChannelError, DegenerateTruthError, InvalidLengthError, InvalidParameterError

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class ErrorCurve:
    """Running sum E(t) of |(pred - true)/true| over retained samples."""
    time_grid: np.ndarray
    values: np.ndarray
    retained: np.ndarray
    eps: float

    @property
    def final(self) -> float:
        return float(self.values[-1]) if self.values.size else 0.0


@dataclass(eq=False)
class RunResult:
    """One method's prediction error on one sequence and DOF."""
    method: str
    sequence_id: str
    curve: ErrorCurve
    mse: float
    dof: int = 0


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise InvalidLengthError(f"Sequences differ in shape: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise InvalidLengthError("Sequences are empty")


def accumulated_error(pred: np.ndarray, truth: np.ndarray, eps_rel: float = 1e-3,
                      time_grid: Optional[np.ndarray] = None) -> ErrorCurve:
    """
    Accumulated absolute relative error of a predicted load history.

    Samples with |truth| below eps_rel * max|truth| are skipped (they
    contribute zero) and reported through the ``retained`` mask.

    Args:
        pred: Predicted load, length T
        truth: True load, length T
        eps_rel: Relative skip threshold, > 0
        time_grid: Instants of the samples (sample indices when omitted)

    Returns:
        ErrorCurve

    Raises:
        DegenerateTruthError: The true load is identically zero
        InvalidParameterError: eps_rel is not positive
    """
    pred = np.asarray(pred, dtype=float).ravel()
    truth = np.asarray(truth, dtype=float).ravel()
    _check_pair(pred, truth)
    if eps_rel <= 0:
        raise InvalidParameterError(f"eps_rel must be positive, got {eps_rel}")

    peak = np.max(np.abs(truth))
    if peak == 0:
        raise DegenerateTruthError("True load is identically zero; relative error undefined")

    eps = eps_rel * peak
    retained = np.abs(truth) >= eps
    ratio = np.zeros_like(truth)
    ratio[retained] = np.abs((pred[retained] - truth[retained]) / truth[retained])
    skipped = int(truth.size - retained.sum())
    if skipped:
        logger.debug(f"Skipped {skipped} of {truth.size} near-zero truth samples (eps={eps:.3g})")

    grid = np.arange(truth.size, dtype=float) if time_grid is None else np.asarray(time_grid, dtype=float)
    return ErrorCurve(time_grid=grid, values=np.cumsum(ratio), retained=retained, eps=float(eps))


def rms_nsr(clean: np.ndarray, noisy: np.ndarray) -> float:
    """RMS(noisy - clean) / RMS(clean)."""
    clean = np.asarray(clean, dtype=float)
    noisy = np.asarray(noisy, dtype=float)
    _check_pair(clean, noisy)
    clean_rms = np.sqrt(np.mean(clean ** 2))
    if clean_rms == 0:
        raise DegenerateChannelError("Clean signal has zero RMS")
    return float(np.sqrt(np.mean((noisy - clean) ** 2)) / clean_rms)


def mean_squared_error(pred: np.ndarray, truth: np.ndarray) -> float:
    pred = np.asarray(pred, dtype=float)
    truth = np.asarray(truth, dtype=float)
    _check_pair(pred, truth)
    return float(np.mean((pred - truth) ** 2))


def summarize(results: List[RunResult]) -> pd.DataFrame:
    """
    Final-E table: one row per (sequence, DOF), one column per method in
    input order, followed by the matching ``mse_<method>`` columns.

    Args:
        results: Error curves with their labels

    Returns:
        pandas DataFrame with columns sequence, dof (1-based), <methods...>, mse_<methods...>
    """
    if not results:
        raise InvalidLengthError("Nothing to summarize")

    methods = list(dict.fromkeys(r.method for r in results))
    rows = list(dict.fromkeys((r.sequence_id, r.dof) for r in results))
    final = {(r.sequence_id, r.dof, r.method): r.curve.final for r in results}
    mse = {(r.sequence_id, r.dof, r.method): r.mse for r in results}

    records = []
    for sequence_id, dof in rows:
        record = {"sequence": sequence_id, "dof": dof + 1}
        for method in methods:
            record[method] = final.get((sequence_id, dof, method), np.nan)
        for method in methods:
            record[f"mse_{method}"] = mse.get((sequence_id, dof, method), np.nan)
        records.append(record)
    return pd.DataFrame.from_records(records, columns=["sequence", "dof"] + methods + [f"mse_{m}" for m in methods])
