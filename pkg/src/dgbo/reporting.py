"""Report containers shared by the experiment and verification drivers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EstimateReport:
    """Ratio statistics and regression slopes from an inequality sweep."""

    inequality_id: str
    samples: int
    ratios: dict[str, float]
    regression: dict[str, dict[str, float]] = field(default_factory=dict)
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "inequality_id": self.inequality_id,
            "samples": self.samples,
            "ratios": dict(self.ratios),
            "regression": {k: dict(v) for k, v in self.regression.items()},
            "violations": list(self.violations),
        }


def ratio_stats(values) -> dict[str, float]:
    arr = np.asarray([v for v in values if np.isfinite(v)], dtype=np.float64)
    if arr.size == 0:
        return {"max": 0.0, "median": 0.0, "p99": 0.0}
    return {
        "max": float(np.max(arr)),
        "median": float(np.median(arr)),
        "p99": float(np.percentile(arr, 99)),
    }


def loglog_slope(x, y) -> dict[str, float]:
    """Least-squares slope of log(y) against log(x) with its standard error."""
    lx = np.log(np.asarray(x, dtype=np.float64))
    ly = np.log(np.asarray(y, dtype=np.float64))
    if lx.size < 2:
        return {"slope": 0.0, "stderr": float("inf")}
    A = np.vstack([lx, np.ones_like(lx)]).T
    coef, res, _, _ = np.linalg.lstsq(A, ly, rcond=None)
    slope = float(coef[0])
    n = lx.size
    if n > 2:
        fitted = A @ coef
        s2 = float(np.sum((ly - fitted) ** 2)) / (n - 2)
        denom = float(np.sum((lx - lx.mean()) ** 2))
        stderr = float(np.sqrt(s2 / denom)) if denom > 0 else float("inf")
    else:
        stderr = 0.0
    return {"slope": slope, "stderr": stderr}
