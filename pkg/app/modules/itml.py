"""
Information-Theoretic Metric Learning by cyclic Bregman projections.

Learns M close (in LogDet divergence) to an identity prior subject to
d_M(good) <= u and d_M(bad) >= l, with slack controlled by gamma. Bounds come
from percentiles of the squared Euclidean distances of the training pairs.
"""

import logging
from typing import Callable, Optional

import numpy as np

from app.modules.config_models import ItmlConfig
from app.modules.errors import DegenerateDataError, DimensionMismatchError
from app.modules.scoring import ItmlDiagnostics, MahalanobisMetric
from app.modules.vector_models import VectorizedPairs

logger = logging.getLogger(__name__)

MIN_PROJECTION_NORM = 1e-12
MIN_BOUND = 1e-9

SweepCallback = Callable[[int, np.ndarray, np.ndarray], None]


def itml_bounds(pairs: VectorizedPairs, cfg: ItmlConfig):
    """(u, l): similarity upper bound and dissimilarity lower bound."""
    diffs = pairs.left - pairs.right
    sq_dists = (diffs * diffs).sum(axis=1)
    u, l = np.percentile(sq_dists, [cfg.bound_low, cfg.bound_high])
    return max(float(u), MIN_BOUND), max(float(l), MIN_BOUND)


def train_itml(
    pairs: VectorizedPairs,
    cfg: Optional[ItmlConfig] = None,
    on_sweep: Optional[SweepCallback] = None,
) -> MahalanobisMetric:
    """
    Parameters
    ----------
    pairs : vectorized training pairs (good and bad)
    cfg : ItmlConfig, defaults mirror the common reference implementation
    on_sweep : called as on_sweep(sweep, M, lambdas) after each full sweep
        (M symmetrized); copies are passed.
    """
    cfg = cfg or ItmlConfig()
    if pairs.n_good == 0 or pairs.n_bad == 0:
        raise DegenerateDataError(
            f"ITML needs good and bad training pairs, got {pairs.n_good} good / {pairs.n_bad} bad"
        )
    if pairs.dim == 0:
        raise DimensionMismatchError("Training vectors have dimension 0")

    u, l = itml_bounds(pairs, cfg)
    if u >= l:
        raise DegenerateDataError(
            f"Degenerate distance distribution: similarity bound u={u:.6g} >= dissimilarity bound l={l:.6g}; "
            "inspect the training pairs (identical or constant vectors?)"
        )
    clamped = tuple(name for name, bound in (("u", u), ("l", l)) if bound <= MIN_BOUND)
    if clamped:
        logger.warning(f"ITML bound(s) {', '.join(clamped)} at the {MIN_BOUND:g} floor: training pairs at zero distance")

    gamma = cfg.gamma
    diffs = pairs.left - pairs.right
    delta = np.where(pairs.good, 1.0, -1.0)
    n = diffs.shape[0]

    M = np.eye(pairs.dim)
    lambdas = np.zeros(n)
    lambdas_prev = np.zeros(n)
    bounds = np.where(pairs.good, u, l).astype(np.float64)
    skipped = set()
    converged = False
    sweep = 0

    for sweep in range(1, cfg.max_iter + 1):
        for c in range(n):
            v = diffs[c]
            Mv = M @ v
            p = float(v @ Mv)
            if p <= MIN_PROJECTION_NORM:
                skipped.add(c)
                continue
            d = delta[c]
            alpha = min(lambdas[c], d * (1.0 / p - gamma / bounds[c]) / 2.0)
            lambdas[c] -= alpha
            bounds[c] = gamma * bounds[c] / (gamma + d * alpha * bounds[c])
            beta = d * alpha / (1.0 - d * alpha * p)
            M += beta * np.outer(Mv, Mv)

        M = (M + M.T) / 2.0
        if on_sweep is not None:
            on_sweep(sweep, M.copy(), lambdas.copy())

        prev_norm = np.linalg.norm(lambdas_prev)
        if prev_norm == 0.0:
            converged = bool(np.linalg.norm(lambdas) == 0.0)
        else:
            converged = bool(np.linalg.norm(lambdas - lambdas_prev) / prev_norm < cfg.conv_tol)
        if converged:
            break
        lambdas_prev = lambdas.copy()

    if skipped:
        logger.warning(f"ITML skipped {len(skipped)} constraint(s) with vanishing Mahalanobis norm")
    if not converged:
        logger.warning(f"ITML stopped after {cfg.max_iter} sweeps without converging")
    logger.info(f"ITML: u={u:.6g} l={l:.6g} sweeps={sweep} converged={converged}")

    diagnostics = ItmlDiagnostics(
        upper_bound=u,
        lower_bound=l,
        n_constraints=n,
        n_sweeps=sweep,
        converged=converged,
        skipped_constraints=len(skipped),
        clamped_bounds=clamped,
        pca_dims=cfg.pca_dims,
    )
    return MahalanobisMetric(M, diagnostics=diagnostics)


def constraint_satisfaction(metric: MahalanobisMetric, pairs: VectorizedPairs, tol: float = 1e-9) -> float:
    """Fraction of pairs with d_M(good) <= u and d_M(bad) >= l (bounds from the metric's diagnostics)."""
    if metric.diagnostics is None:
        raise ValueError("Metric carries no ITML bounds")
    diffs = pairs.left - pairs.right
    d_m = np.einsum("ij,jk,ik->i", diffs, metric.matrix, diffs)
    u, l = metric.diagnostics.upper_bound, metric.diagnostics.lower_bound
    ok = np.where(pairs.good, d_m <= u * (1 + tol) + tol, d_m >= l * (1 - tol) - tol)
    return float(np.mean(ok))
