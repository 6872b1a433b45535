"""
Matching scores. Every model is oriented so that a higher score is a better match
(distances are negated).

Single-pair scoring goes through the same batch kernel as candidate ranking, so a
pair scored alone and the same pair scored inside a candidate matrix agree exactly.
"""

import json
import os
from abc import ABC, abstractmethod
from typing import Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel

from app.modules.errors import DataError, DimensionMismatchError
from app.modules.vector_models import MatchScore, ProfileVector

SYMMETRY_TOL = 1e-9
PSD_TOL = 1e-8


class ItmlDiagnostics(BaseModel):
    upper_bound: float
    lower_bound: float
    n_constraints: int
    n_sweeps: int
    converged: bool
    skipped_constraints: int = 0
    # Bounds raised to the positive floor ("u", "l")
    clamped_bounds: Tuple[str, ...] = ()
    pca_dims: Optional[int] = None


class MahalanobisMetric:
    """Symmetric PSD matrix M defining d_M(a, b) = (a-b)^T M (a-b)."""

    def __init__(self, matrix, diagnostics: Optional[ItmlDiagnostics] = None):
        M = np.array(matrix, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
            raise DataError(f"A Mahalanobis matrix must be square and non-empty, got shape {M.shape}")
        if not np.all(np.isfinite(M)):
            raise DataError("Mahalanobis matrix contains non-finite entries")
        if np.max(np.abs(M - M.T)) > SYMMETRY_TOL:
            raise DataError("Mahalanobis matrix is not symmetric")
        eigvals = np.linalg.eigvalsh(M)
        # Round-off tolerance scales with the matrix
        if eigvals[0] < -PSD_TOL * max(1.0, float(np.max(np.abs(eigvals)))):
            raise DataError(f"Mahalanobis matrix is not positive semidefinite (min eigenvalue {eigvals[0]:.6g})")
        M.setflags(write=False)
        self.matrix = M
        self.diagnostics = diagnostics
        self._factor = None

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    def is_symmetric(self, tol: float = SYMMETRY_TOL) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.T)) <= tol)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol

    @property
    def factor(self) -> np.ndarray:
        """L with L^T L = M (negative round-off eigenvalues clipped to 0)."""
        if self._factor is None:
            eigvals, eigvecs = np.linalg.eigh(self.matrix)
            L = np.sqrt(np.clip(eigvals, 0.0, None))[:, None] * eigvecs.T
            L.setflags(write=False)
            self._factor = L
        return self._factor

    def to_dict(self) -> dict:
        return {"dim": self.dim, "matrix": self.matrix.tolist()}

    def save(self, path: Union[str, os.PathLike]):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f)
            f.write("\n")

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> "MahalanobisMetric":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            metric = cls(data["matrix"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
            raise DataError(f"{path}: not a valid metric file: {e}") from e
        if metric.dim != data["dim"]:
            raise DataError(f"{path}: declared dim {data['dim']} does not match matrix size {metric.dim}")
        return metric


# ==========================================
# MATCH MODELS
# ==========================================


class MatchModel(ABC):
    name: str = ""

    @property
    def input_dim(self) -> Optional[int]:
        """Required vector dimension, or None when any dimension is accepted."""
        return None

    def embed(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64)

    @abstractmethod
    def score_embedded(self, query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        pass

    def check_dims(self, query: np.ndarray, candidates: np.ndarray):
        if candidates.ndim != 2 or candidates.shape[1] != query.shape[0]:
            raise DimensionMismatchError(
                f"Cannot score a {query.shape[0]}-dim vector against candidates of shape {candidates.shape}"
            )
        if self.input_dim is not None and query.shape[0] != self.input_dim:
            raise DimensionMismatchError(
                f"{self.name} model expects {self.input_dim}-dim vectors, got {query.shape[0]}"
            )

    def score_many(self, query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        """Scores one query vector against every row of `candidates`."""
        query = np.asarray(query, dtype=np.float64)
        candidates = np.asarray(candidates, dtype=np.float64)
        self.check_dims(query, candidates)
        return self.score_embedded(self.embed(query[None, :])[0], self.embed(candidates))

    def is_degenerate(self, a: np.ndarray, b: np.ndarray) -> bool:
        return False


class CosineModel(MatchModel):
    name = "cosine"

    def score_embedded(self, query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        dots = (candidates * query).sum(axis=1)
        denom = np.sqrt((query * query).sum()) * np.sqrt((candidates * candidates).sum(axis=1))
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(denom > 0, dots / denom, 0.0)
        return np.clip(scores, -1.0, 1.0)

    def is_degenerate(self, a: np.ndarray, b: np.ndarray) -> bool:
        return not (np.any(a != 0) and np.any(b != 0))


class EuclideanModel(MatchModel):
    name = "euclidean"

    def score_embedded(self, query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        diff = candidates - query
        return -np.sqrt((diff * diff).sum(axis=1))


class MetricModel(MatchModel):
    """
    Learned Mahalanobis metric, optionally applied after a linear projection
    (PCA pre-reduction). Vectors are mapped through W = L @ P so the squared
    Mahalanobis distance becomes a squared Euclidean distance.
    """

    name = "itml"

    def __init__(self, metric: MahalanobisMetric, projection: Optional[np.ndarray] = None):
        self.metric = metric
        if projection is not None:
            projection = np.asarray(projection, dtype=np.float64)
            if projection.shape[0] != metric.dim:
                raise DimensionMismatchError(
                    f"Projection outputs {projection.shape[0]} dims but the metric is {metric.dim}-dim"
                )
            self.weights = metric.factor @ projection
        else:
            self.weights = metric.factor
        self.projection = projection

    @property
    def input_dim(self) -> int:
        return int(self.weights.shape[1])

    def embed(self, X: np.ndarray) -> np.ndarray:
        # Row by row so each vector maps identically whatever batch it arrives in
        X = np.asarray(X, dtype=np.float64)
        return np.stack([self.weights @ x for x in X])

    def score_embedded(self, query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        diff = candidates - query
        return -(diff * diff).sum(axis=1)


COSINE = CosineModel()
EUCLIDEAN = EuclideanModel()

# ==========================================
# PAIR SCORING
# ==========================================


def _values(v: Union[ProfileVector, np.ndarray]) -> np.ndarray:
    return v.values if isinstance(v, ProfileVector) else np.asarray(v, dtype=np.float64)


def score_pair(model: MatchModel, a: Union[ProfileVector, np.ndarray], b: Union[ProfileVector, np.ndarray]) -> MatchScore:
    """Single entry point used by evaluation; dispatches on the model."""
    av, bv = _values(a), _values(b)
    if av.shape != bv.shape:
        raise DimensionMismatchError(f"Cannot compare vectors of dimension {av.shape[0]} and {bv.shape[0]}")
    value = float(model.score_many(av, bv[None, :])[0])
    return MatchScore(value=value, degenerate=model.is_degenerate(av, bv))


def cosine_score(a, b) -> MatchScore:
    return score_pair(COSINE, a, b)


def euclidean_score(a, b) -> MatchScore:
    return score_pair(EUCLIDEAN, a, b)


def mahalanobis_score(metric: MahalanobisMetric, a, b) -> MatchScore:
    """Negated squared Mahalanobis distance."""
    return score_pair(MetricModel(metric), a, b)


def build_model(name: str, metric: Optional[MahalanobisMetric] = None, projection: Optional[np.ndarray] = None) -> MatchModel:
    if name == "cosine":
        return COSINE
    if name == "euclidean":
        return EUCLIDEAN
    if name == "itml":
        if metric is None:
            raise ValueError("The itml model needs a trained metric")
        return MetricModel(metric, projection)
    raise ValueError(f"Unknown metric '{name}'")
