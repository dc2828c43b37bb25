"""Unscented Kalman filtering on a product manifold.

The engine is generic over a *manifold* object providing four operations
(``sigma_batch``, ``weighted_mean``, ``residuals``, ``retract``) plus a
``dim`` attribute; :class:`mukf.state.NavManifold` supplies the navigation
chart and :class:`mukf.state.VectorManifold` the trivial one. Process and
measurement models are callables over whole sigma-point batches, so the
linear algebra here never loops over points.

Scaled unscented transform with parameters ``alpha``, ``beta``, ``kappa``
(defaults 1e-2, 2, 0): ``lambda = alpha^2 (n + kappa) - n``, sigma scale
``c = alpha sqrt(n + kappa)``, and the usual mean/covariance weights. The
measurement space is always treated as Euclidean.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable

import numpy as np
import scipy.linalg
from scipy.stats import chi2

from .errors import CovarianceNotPSD, DimensionMismatch, InnovationCovarianceSingular

__all__ = [
    "GaussianBelief",
    "SigmaPointSet",
    "UpdateReport",
    "ManifoldUkf",
    "ut_weights",
    "gate_threshold",
    "repair_psd",
]

# Jitter ladder for PSD repair, as fractions of mean diagonal (trace/n):
# start at 1e-12, double until 1e-6, then give up.
_JITTER_START = 1e-12
_JITTER_CAP = 1e-6


@dataclass
class GaussianBelief:
    """Mean point on the manifold plus tangent-space covariance ``(n, n)``."""

    mean: Any
    cov: np.ndarray


@dataclass
class SigmaPointSet:
    """The 2n+1 points drawn from a belief: generating tangent deltas, the
    retracted batch, and the mean/covariance weights."""

    deltas: np.ndarray  # (2n+1, n)
    batch: Any
    wm: np.ndarray
    wc: np.ndarray


@dataclass
class UpdateReport:
    """Outcome of one measurement update (gating diagnostics included)."""

    accepted: bool
    dof: int
    mahalanobis_sq: float
    threshold: float
    innovation: np.ndarray


def ut_weights(n: int, alpha: float, beta: float, kappa: float):
    """Mean and covariance weights of the scaled unscented transform.

    Returns ``(wm, wc, c)`` where ``c`` is the sigma-point scale factor
    ``alpha * sqrt(n + kappa)``.
    """
    lam = alpha * alpha * (n + kappa) - n
    wm = np.full(2 * n + 1, 1.0 / (2.0 * (n + lam)))
    wc = wm.copy()
    wm[0] = lam / (n + lam)
    wc[0] = wm[0] + 1.0 - alpha * alpha + beta
    return wm, wc, alpha * np.sqrt(n + kappa)


@lru_cache(maxsize=None)
def gate_threshold(dof: int, confidence: float) -> float:
    """Chi-square quantile used as the Mahalanobis gate for a ``dof``-dim innovation."""
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must be in (0, 1), got {confidence}")
    return float(chi2.ppf(confidence, dof))


def repair_psd(cov: np.ndarray) -> np.ndarray:
    """Symmetrize and, if needed, jitter a covariance until it factors.

    Adds ``eps * trace/n`` to the diagonal, doubling ``eps`` from 1e-12 up to
    1e-6; raises :class:`CovarianceNotPSD` if the matrix still will not factor
    (that ceiling means the covariance is broken, not merely rounded).
    """
    if not np.isfinite(cov).all():
        raise CovarianceNotPSD("covariance contains non-finite entries")
    cov = 0.5 * (cov + cov.T)
    if not cov.any():
        return cov  # exactly zero is PSD; factor is the zero matrix
    try:
        scipy.linalg.cholesky(cov, lower=False, check_finite=False)
        return cov
    except (scipy.linalg.LinAlgError, ValueError):
        pass
    scale = np.trace(cov) / cov.shape[0]
    if not np.isfinite(scale) or scale <= 0.0:
        raise CovarianceNotPSD("covariance has non-finite or non-positive trace")
    eye = np.eye(cov.shape[0])
    eps = _JITTER_START
    while eps <= _JITTER_CAP:
        try:
            scipy.linalg.cholesky(cov + eps * scale * eye, lower=False, check_finite=False)
            return cov + eps * scale * eye
        except scipy.linalg.LinAlgError:
            eps *= 2.0
    raise CovarianceNotPSD(
        f"covariance not PSD within jitter cap {_JITTER_CAP:g} * trace/n"
    )


def _chol_upper(cov: np.ndarray) -> np.ndarray:
    """Upper-triangular U with U.T @ U = cov, repairing the input if needed.

    A covariance that is exactly zero factors to the zero matrix, so a
    degenerate belief yields sigma points all equal to the mean.
    """
    try:
        return scipy.linalg.cholesky(cov, lower=False, check_finite=False)
    except (scipy.linalg.LinAlgError, ValueError):
        repaired = repair_psd(cov)
        if not repaired.any():
            return repaired
        return scipy.linalg.cholesky(repaired, lower=False, check_finite=False)


class ManifoldUkf:
    """Square-root-free UKF over a manifold chart.

    Parameters
    ----------
    manifold :
        Chart object (see module docstring). ``manifold.dim`` fixes n.
    alpha, beta, kappa :
        Scaled-UT parameters. The defaults keep the sigma spread small
        enough that the local chart stays effectively linear.
    """

    def __init__(self, manifold, alpha: float = 1e-2, beta: float = 2.0, kappa: float = 0.0):
        self.manifold = manifold
        n = manifold.dim
        self.n = n
        self.wm, self.wc, self.c = ut_weights(n, alpha, beta, kappa)

    # -- sigma points ----------------------------------------------------

    def draw_sigma_points(self, belief: GaussianBelief) -> SigmaPointSet:
        """2n+1 points: the mean plus +-c times each Cholesky column of cov."""
        n = self.n
        if belief.cov.shape != (n, n):
            raise DimensionMismatch(f"cov must be ({n}, {n}), got {belief.cov.shape}")
        u = _chol_upper(belief.cov)
        deltas = np.zeros((2 * n + 1, n))
        deltas[1 : n + 1] = self.c * u
        deltas[n + 1 :] = -self.c * u
        batch = self.manifold.sigma_batch(belief.mean, deltas)
        return SigmaPointSet(deltas, batch, self.wm, self.wc)

    # -- prediction ------------------------------------------------------

    def predict(self, belief: GaussianBelief, f: Callable, Q: np.ndarray) -> GaussianBelief:
        """Propagate through ``f(batch) -> batch`` and add process noise ``Q``.

        ``Q`` may be a full ``(n, n)`` matrix or an ``(n,)`` diagonal. ``f``
        may mutate its argument in place and return it.
        """
        pts = self.draw_sigma_points(belief)
        fb = f(pts.batch)
        mean = self.manifold.weighted_mean(fb, self.wm)
        resid = self.manifold.residuals(fb, mean)
        cov = resid.T @ (self.wc[:, None] * resid)
        Q = np.asarray(Q)
        if Q.ndim == 1:
            cov[np.diag_indices_from(cov)] += Q
        else:
            cov += Q
        cov = 0.5 * (cov + cov.T)
        return GaussianBelief(mean, cov)

    # -- update ----------------------------------------------------------

    def update(
        self,
        belief: GaussianBelief,
        h: Callable,
        z: np.ndarray,
        R: np.ndarray,
        gate_confidence: float | None = None,
    ) -> tuple[GaussianBelief, UpdateReport]:
        """Fuse measurement ``z`` with model ``h(batch) -> (m, k)``.

        Sigma points are redrawn from the current belief (not reused from the
        last prediction), which is what makes the linear special case agree
        with a conventional Kalman filter to numerical precision.

        With ``gate_confidence`` set, the update is rejected when the squared
        Mahalanobis innovation distance exceeds the chi-square quantile for
        ``k`` degrees of freedom; a rejected update returns the input belief
        object unchanged.
        """
        z = np.atleast_1d(np.asarray(z, dtype=np.float64))
        k = z.shape[0]
        R = np.asarray(R, dtype=np.float64)
        if R.ndim == 1:
            R = np.diag(R)
        if R.shape != (k, k):
            raise DimensionMismatch(f"R must be ({k}, {k}), got {R.shape}")

        pts = self.draw_sigma_points(belief)
        Z = np.atleast_2d(h(pts.batch))
        if Z.shape != (2 * self.n + 1, k):
            raise DimensionMismatch(
                f"measurement batch must be ({2 * self.n + 1}, {k}), got {Z.shape}"
            )
        z_mean = self.wm @ Z
        dz = Z - z_mean
        S = dz.T @ (self.wc[:, None] * dz) + R
        S = 0.5 * (S + S.T)
        Pxz = pts.deltas.T @ (self.wc[:, None] * dz)
        innov = z - z_mean

        # one solve covers the gate distance and the gain
        try:
            solved = np.linalg.solve(S, np.column_stack([innov, Pxz.T]))
        except np.linalg.LinAlgError as exc:
            raise InnovationCovarianceSingular(str(exc)) from None
        d2 = float(innov @ solved[:, 0])
        if not np.isfinite(d2):
            raise InnovationCovarianceSingular("non-finite Mahalanobis distance")

        threshold = np.inf
        if gate_confidence is not None:
            threshold = gate_threshold(k, gate_confidence)
            if d2 > threshold:
                return belief, UpdateReport(False, k, d2, threshold, innov)

        K = solved[:, 1:].T
        mean = self.manifold.retract(belief.mean, K @ innov)
        cov = belief.cov - K @ S @ K.T
        cov = 0.5 * (cov + cov.T)
        return GaussianBelief(mean, cov), UpdateReport(True, k, d2, threshold, innov)
