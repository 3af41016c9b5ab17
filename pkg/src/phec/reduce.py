"""PCA dimension reduction via power iteration with deflation.

Components are extracted one at a time from the sample covariance;
the sign of each component is fixed so its largest-magnitude entry is
positive, which keeps serialization and comparisons deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

_TOL = 1e-10
_MAX_ITER = 10_000
# Fixed internal seed for the iteration start vectors; pca_fit itself is
# deterministic and takes no seed.
_START_SEED = 0x5EED


@dataclass
class PcaModel:
    """Mean vector plus orthonormal principal directions (rows)."""

    mean: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray

    @property
    def m(self) -> int:
        return self.components.shape[0]

    @property
    def input_dim(self) -> int:
        return self.components.shape[1]

    def explained_variance_ratio(self, total_variance: float | None = None) -> np.ndarray:
        total = total_variance if total_variance is not None else self.explained_variance.sum()
        if total <= 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / total


def pca_fit(X: np.ndarray, m: int) -> PcaModel:
    """Fit the top-``m`` principal components of ``X`` (rows are samples)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DataError("pca_fit needs a 2-D matrix with at least 2 rows")
    if not np.all(np.isfinite(X)):
        raise DataError("pca_fit: non-finite input")
    n, d = X.shape
    if not 1 <= m <= d:
        raise DataError(f"pca_fit: m={m} outside [1, {d}]")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (n - 1)
    components, eigenvalues = _top_eigenpairs(cov, m)
    return PcaModel(mean, components, eigenvalues)


def pca_fit_ratio(X: np.ndarray, variance_ratio: float = 0.95) -> PcaModel:
    """Fit the smallest m whose cumulative explained-variance ratio
    reaches ``variance_ratio``."""
    if not 0 < variance_ratio <= 1:
        raise DataError(f"variance_ratio must be in (0, 1], got {variance_ratio}")
    X = np.asarray(X, dtype=np.float64)
    full = pca_fit(X, X.shape[1])
    total = float(np.trace(np.cov(X, rowvar=False, ddof=1))) if X.shape[1] > 1 else float(
        np.var(X, ddof=1)
    )
    if total <= 0:
        m = 1
    else:
        cumulative = np.cumsum(full.explained_variance) / total
        m = int(np.searchsorted(cumulative, variance_ratio - 1e-12) + 1)
        m = min(m, X.shape[1])
    return PcaModel(full.mean, full.components[:m], full.explained_variance[:m])


def pca_transform(model: PcaModel, X: np.ndarray) -> np.ndarray:
    """Project rows of ``X`` onto the principal directions."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.input_dim:
        raise DataError(
            f"pca_transform: input has {X.shape[1]} features, model expects {model.input_dim}"
        )
    return (X - model.mean) @ model.components.T


def _top_eigenpairs(cov: np.ndarray, m: int) -> tuple[np.ndarray, np.ndarray]:
    """Leading eigenpairs of a symmetric PSD matrix by power iteration.

    Each converged direction is deflated out; iterates are re-orthogonalized
    against the found basis every step to keep roundoff from reintroducing
    earlier directions. Near-null directions (residual energy below machine
    noise) are completed by Gram-Schmidt with eigenvalue 0, so m = d always
    yields a complete orthonormal basis.
    """
    d = cov.shape[0]
    rng = np.random.default_rng(_START_SEED)
    residual = cov.copy()
    scale = max(float(np.trace(cov)), 1.0)
    basis = np.zeros((m, d))
    values = np.zeros(m)
    for k in range(m):
        if float(np.abs(residual).max()) <= 1e-14 * scale:
            basis[k] = _complete_direction(basis[:k], d, rng)
            values[k] = 0.0
            continue
        v = rng.standard_normal(d)
        v = _orthogonalize(v, basis[:k])
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(_MAX_ITER):
            w = residual @ v
            w = _orthogonalize(w, basis[:k])
            norm = np.linalg.norm(w)
            if norm <= 1e-14 * scale:
                break
            v_new = w / norm
            lam_new = float(v_new @ (residual @ v_new))
            if np.linalg.norm(v_new - np.sign(v_new @ v) * v) < _TOL and abs(
                lam_new - lam
            ) <= _TOL * max(abs(lam_new), 1.0):
                v = v_new
                lam = lam_new
                break
            v = v_new
            lam = lam_new
        values[k] = max(lam, 0.0)
        basis[k] = v
        residual -= values[k] * np.outer(v, v)
    for k in range(m):
        basis[k] = _fix_sign(basis[k])
    return basis, values


def _orthogonalize(v: np.ndarray, basis: np.ndarray) -> np.ndarray:
    if basis.shape[0]:
        v = v - basis.T @ (basis @ v)
    return v


def _complete_direction(basis: np.ndarray, d: int, rng) -> np.ndarray:
    for _ in range(100):
        v = _orthogonalize(rng.standard_normal(d), basis)
        norm = np.linalg.norm(v)
        if norm > 1e-8:
            return v / norm
    raise DataError("pca_fit: failed to complete orthonormal basis")


def _fix_sign(v: np.ndarray) -> np.ndarray:
    pivot = int(np.argmax(np.abs(v)))
    return -v if v[pivot] < 0 else v
