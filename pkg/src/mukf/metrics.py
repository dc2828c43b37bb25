"""Run evaluation: trajectory differences and filter consistency statistics.

Everything here works on the column dictionaries produced by
:func:`mukf.logio.read_results` and :func:`mukf.logio.read_truth`, so results
written by one process can be scored by another without re-running anything.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import TimeBaseMismatch


@dataclass
class RunMetrics:
    """Scores for one filter run against ground truth.

    ``nees`` and ``heading_error_deg`` are per-aligned-step series; the
    scalars summarize the run. ``throughput`` is carried over from the run
    when the caller knows it (a results file scored after the fact does not).
    """

    final_diff_m: float
    percent_of_distance: float
    path_length_m: float
    nees: np.ndarray
    frac_within_2sigma: float
    heading_error_deg: np.ndarray
    final_2sigma_m: float
    throughput: float | None = None

    def row(self) -> dict:
        return {
            "final_diff_m": self.final_diff_m,
            "percent_of_distance": self.percent_of_distance,
            "final_2sigma_m": self.final_2sigma_m,
            "frac_within_2sigma": self.frac_within_2sigma,
            "median_nees": float(np.median(self.nees)) if self.nees.size else math.nan,
            "final_heading_error_deg": (
                float(self.heading_error_deg[-1]) if self.heading_error_deg.size else math.nan
            ),
            "throughput": self.throughput if self.throughput is not None else math.nan,
        }


def align_times(t_a: np.ndarray, t_b: np.ndarray, tol: float) -> np.ndarray:
    """Index into ``t_b`` of the nearest neighbor for every entry of ``t_a``.

    Raises :class:`TimeBaseMismatch` when any pairing is further apart than
    ``tol`` (one IMU period, by convention).
    """
    t_a = np.asarray(t_a, dtype=np.float64)
    t_b = np.asarray(t_b, dtype=np.float64)
    if t_a.size == 0 or t_b.size == 0:
        raise TimeBaseMismatch("cannot align an empty time base")
    j = np.searchsorted(t_b, t_a)
    j = np.clip(j, 1, len(t_b) - 1)
    left = t_a - t_b[j - 1]
    right = t_b[j] - t_a
    idx = np.where(left <= right, j - 1, j)
    worst = np.abs(t_b[idx] - t_a).max()
    if worst > tol + 1e-12:
        k = int(np.abs(t_b[idx] - t_a).argmax())
        raise TimeBaseMismatch(
            f"results t={t_a[k]:.6g} is {worst:.6g} s from the nearest truth "
            f"sample (tolerance {tol:.6g} s)"
        )
    return idx


def _wrap_deg(a: np.ndarray) -> np.ndarray:
    return (a + 180.0) % 360.0 - 180.0


def horizontal_2sigma(sig_n: np.ndarray, sig_e: np.ndarray) -> np.ndarray:
    """Scalar horizontal 2-sigma: twice the RSS of the N/E marginals."""
    return 2.0 * np.hypot(sig_n, sig_e)


def evaluate(
    results: dict,
    truth: dict,
    imu_period: float,
    throughput: float | None = None,
) -> RunMetrics:
    """Score ``results`` against ``truth`` (both column dictionaries).

    Truth rows are matched to result rows by nearest-neighbor timestamp
    within ``imu_period``. NEES is the 2-dof horizontal form using the
    filter's own N/E covariance; the 2-sigma envelope check compares the
    horizontal difference against ``2*sqrt(sig_n^2 + sig_e^2)``.
    """
    idx = align_times(results["t"], truth["t"], imu_period)

    dn = results["p_n"] - truth["p_n"][idx]
    de = results["p_e"] - truth["p_e"][idx]
    diff = np.hypot(dn, de)

    step_n = np.diff(truth["p_n"])
    step_e = np.diff(truth["p_e"])
    path = float(np.hypot(step_n, step_e).sum())
    final = float(diff[-1])
    if path > 0.0:
        percent = 100.0 * final / path
    else:
        percent = 0.0 if final == 0.0 else math.inf

    # 2-dof NEES from the filter's own marginal sigmas + N/E cross term
    var_n = results["sig_p_n"] ** 2
    var_e = results["sig_p_e"] ** 2
    cov = results["cov_ne"]
    det = var_n * var_e - cov**2
    with np.errstate(divide="ignore", invalid="ignore"):
        nees = (var_e * dn**2 - 2.0 * cov * dn * de + var_n * de**2) / det
    nees = np.where(det > 0.0, nees, math.inf)

    two_sigma = horizontal_2sigma(results["sig_p_n"], results["sig_p_e"])
    frac = float(np.mean(diff <= two_sigma))

    heading = _wrap_deg(np.degrees(results["yaw"] - truth["yaw"][idx]))

    return RunMetrics(
        final_diff_m=final,
        percent_of_distance=percent,
        path_length_m=path,
        nees=nees,
        frac_within_2sigma=frac,
        heading_error_deg=heading,
        final_2sigma_m=float(two_sigma[-1]),
        throughput=throughput,
    )


_TABLE_FIELDS = [
    "final_diff_m",
    "percent_of_distance",
    "final_2sigma_m",
    "frac_within_2sigma",
    "median_nees",
    "final_heading_error_deg",
    "throughput",
]


def comparison_table(named: dict[str, RunMetrics]) -> str:
    """Render several runs side by side as CSV (one row per run).

    This is the multi-configuration layout: denial studies list one row per
    sensor-set, so the position-difference ordering can be read straight
    down the second column.
    """
    lines = ["name," + ",".join(_TABLE_FIELDS)]
    for name, m in named.items():
        row = m.row()
        lines.append(name + "," + ",".join(f"{row[f]:.6g}" for f in _TABLE_FIELDS))
    return "\n".join(lines) + "\n"
