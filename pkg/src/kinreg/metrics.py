"""Error metrics. RMSE is normalized by ``max|truth|`` over the evaluation set."""
import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricReport:
    l1_mean: float
    rmse: float
    linf: float
    r2: float  # nan when the truth is constant
    rmse_normalized: bool = True

    def as_dict(self):
        return {"rmse": self.rmse, "l1_mean": self.l1_mean, "linf": self.linf, "r2": self.r2}


def rmse(pred, truth):
    """Normalized RMSE only."""
    return compute_metrics(pred, truth).rmse


def compute_metrics(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if pred.shape != truth.shape or pred.size == 0:
        raise ValueError(f"need equal non-zero lengths, got {pred.size} and {truth.size}")
    err = pred - truth
    mse = float(np.mean(err**2))
    scale = float(np.max(np.abs(truth)))
    sst = float(np.mean((truth - truth.mean()) ** 2))
    return MetricReport(
        l1_mean=float(np.mean(np.abs(err))),
        rmse=math.sqrt(mse) / scale if scale > 0 else math.sqrt(mse),
        linf=float(np.max(np.abs(err))),
        r2=1.0 - mse / sst if sst > 0 else math.nan,
        rmse_normalized=scale > 0,
    )
