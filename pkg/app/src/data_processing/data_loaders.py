import hashlib
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from app.utils.exceptions import MissingArtifactError, InvalidLengthError

logger = logging.getLogger(__name__)

# Fixed float format keeps reruns byte-identical
FLOAT_FORMAT = "%.10g"

PathLike = Union[str, Path]


def write_frame(df: pd.DataFrame, path: PathLike) -> Path:
    """Write a DataFrame as CSV with the workbench float format."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.debug(f"Wrote {len(df)} rows to {path}")
    return path


def read_frame(path: PathLike) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise MissingArtifactError(f"File not found: {path}")
    return pd.read_csv(path)


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _labels(prefix: str, dofs: Sequence[int]) -> List[str]:
    """Column names with 1-based story numbers."""
    return [f"{prefix}_{d + 1}" for d in dofs]


############################### Dataset sequences ###############################

def sequence_frame(t: np.ndarray, accel: np.ndarray, forces: np.ndarray, measured_dofs: Sequence[int]) -> pd.DataFrame:
    """Columns t, a_meas_<story>... for measured DOFs, f_true_<story>... for every DOF."""
    n = forces.shape[1]
    data = {"t": t}
    data.update(dict(zip(_labels("a_meas", measured_dofs), accel.T)))
    data.update(dict(zip(_labels("f_true", range(n)), forces.T)))
    return pd.DataFrame(data)


def read_sequence(path: PathLike, measured_dofs: Sequence[int], n_stories: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Read a sequence CSV.

    Args:
        path: CSV file
        measured_dofs: 0-based measured DOFs expected in the file
        n_stories: Number of force columns expected

    Returns:
        (t, accel T x len(measured_dofs), forces T x n_stories)
    """
    df = read_frame(path)
    accel_cols = _labels("a_meas", measured_dofs)
    force_cols = _labels("f_true", range(n_stories))
    missing = [c for c in ["t"] + accel_cols + force_cols if c not in df.columns]
    if missing:
        raise MissingArtifactError(f"{path} lacks columns {missing}")
    if df.empty:
        raise InvalidLengthError(f"{path} has no samples")
    return df["t"].to_numpy(dtype=float), df[accel_cols].to_numpy(dtype=float), df[force_cols].to_numpy(dtype=float)


############################### Filter, network and metric outputs ###############################

def trace_frame(trace, n_stories: int) -> pd.DataFrame:
    """Columns t, u_est_<story>..., theta_<j>..., z_<i>..., innov_norm, rho_norm."""
    data = {"t": trace.time_grid}
    data.update(dict(zip(_labels("u_est", range(n_stories)), trace.u_est.T)))
    data.update({f"theta_{j + 1}": col for j, col in enumerate(trace.theta.T)})
    data.update({f"z_{i + 1}": col for i, col in enumerate(trace.z.T)})
    data["innov_norm"] = trace.innov_norm
    data["rho_norm"] = trace.rho_norm
    return pd.DataFrame(data)


def loss_curve_frame(report) -> pd.DataFrame:
    return pd.DataFrame({
        "epoch": np.arange(1, report.stopped_epoch + 1),
        "train_loss": report.train_loss,
        "val_loss": report.val_loss,
    })


def prediction_frame(t: np.ndarray, pred: np.ndarray, target_dofs: Sequence[int]) -> pd.DataFrame:
    """Columns t, u_pred_<story>... for the identified DOFs."""
    pred = np.asarray(pred, dtype=float).reshape(len(t), -1)
    data = {"t": t}
    data.update(dict(zip(_labels("u_pred", target_dofs), pred.T)))
    return pd.DataFrame(data)


def read_prediction(path: PathLike, target_dofs: Sequence[int]) -> np.ndarray:
    """Predicted loads (T x len(target_dofs)) from a prediction or trace CSV."""
    df = read_frame(path)
    for prefix in ("u_pred", "u_est"):
        cols = _labels(prefix, target_dofs)
        if all(c in df.columns for c in cols):
            return df[cols].to_numpy(dtype=float)
    raise MissingArtifactError(f"{path} has no prediction columns for stories {[d + 1 for d in target_dofs]}")


def error_curve_frame(curve) -> pd.DataFrame:
    return pd.DataFrame({"t": curve.time_grid, "E": curve.values, "retained": curve.retained.astype(int)})
