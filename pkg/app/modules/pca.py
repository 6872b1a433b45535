import logging
from typing import Mapping, Tuple

import numpy as np

from app.modules.errors import DataError, DegenerateDataError
from app.modules.report_models import Projection2D, ProjectionRow
from app.modules.vector_models import ProfileVector

logger = logging.getLogger(__name__)

PCA_METHODS = ("svd", "eigh")


def _orient(components: np.ndarray) -> np.ndarray:
    """Flips each direction so its largest-magnitude loading is positive."""
    components = components.copy()
    for i, direction in enumerate(components):
        if direction[np.argmax(np.abs(direction))] < 0:
            components[i] = -direction
    return components


def principal_components(
    X: np.ndarray, n_components: int, method: str = "svd"
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Returns (components, explained_variance, mean) of the rows of X.
    components has shape (n_components, dim) with unit-norm orthogonal rows;
    explained_variance holds the matching sample-covariance eigenvalues, descending.
    """
    X = np.asarray(X, dtype=np.float64)
    n, dim = X.shape
    if n < 2:
        raise DegenerateDataError(f"PCA needs at least 2 vectors, got {n}")
    n_components = min(n_components, dim)
    mean = X.mean(axis=0)
    Xc = X - mean

    total = float((Xc * Xc).sum())
    if total <= 1e-24 * max(1.0, float((X * X).sum())):
        raise DegenerateDataError("PCA input has zero total variance (all vectors identical)")

    if method == "svd":
        _, S, Vt = np.linalg.svd(Xc, full_matrices=False)
        variances = np.zeros(n_components)
        k = min(n_components, S.size)
        variances[:k] = S[:k] ** 2 / (n - 1)
        components = np.zeros((n_components, dim))
        components[:k] = Vt[:k]
    elif method == "eigh":
        eigvals, eigvecs = np.linalg.eigh(Xc.T @ Xc / (n - 1))
        order = np.argsort(eigvals)[::-1][:n_components]
        variances = np.clip(eigvals[order], 0.0, None)
        components = eigvecs[:, order].T
    else:
        raise ValueError(f"Unknown PCA method '{method}'; choose from {list(PCA_METHODS)}")

    return _orient(components), variances, mean


def pca2(vectors: Mapping[str, ProfileVector], method: str = "svd") -> Projection2D:
    """Centered 2-D projection of the vectors. Rows come back sorted by key."""
    if len(vectors) < 3:
        raise DegenerateDataError(f"A 2-D projection needs at least 3 vectors, got {len(vectors)}")
    codes = sorted(vectors)
    dims = {vectors[c].dim for c in codes}
    if len(dims) != 1:
        raise DataError(f"Projection vectors have mixed dimensions {sorted(dims)}")
    dim = dims.pop()
    if dim < 2:
        raise DataError(f"A 2-D projection needs vectors of dimension >= 2, got {dim}")

    X = np.vstack([vectors[c].values for c in codes])
    components, variances, mean = principal_components(X, 2, method=method)
    scores = (X - mean) @ components.T
    logger.debug(f"PCA ({method}) over {len(codes)} vectors, dim={dim}: variances={variances.tolist()}")

    rows = [ProjectionRow(code=c, x=float(s[0]), y=float(s[1])) for c, s in zip(codes, scores)]
    return Projection2D(
        rows=rows,
        explained_variance=(float(variances[0]), float(variances[1])),
        components=(tuple(components[0].tolist()), tuple(components[1].tolist())),
    )
