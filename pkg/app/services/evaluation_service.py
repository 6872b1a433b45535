import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from app.modules.config_models import RunConfig
from app.modules.errors import DataError, DegenerateDataError
from app.modules.itml import train_itml
from app.modules.models import MatchPair, PairDataset, Taxonomy, pair_side_key
from app.modules.pca import principal_components
from app.modules.report_models import AuditReport, GsrAudit, GsrRecord, ReportRow, ScoredPair, TradeoffSummary
from app.modules.scoring import MahalanobisMetric, MatchModel, MetricModel, build_model, score_pair
from app.modules.statistics import auc, pearson
from app.modules.vector_models import ProfileVector, VectorizedPairs
from app.modules.vectorizers import Vectorizer
from app.services.simulation_service import audit_stream_name, sample_profile, substream
from app.services.vectorizer_service import VectorizerService

logger = logging.getLogger(__name__)

# ==========================================
# NEIGHBOR SEARCH
# ==========================================


class NeighborIndex:
    """
    Exhaustive top-k search over a fixed set of occupation vectors.
    Vectors are embedded once; every query is scored against all rows.
    """

    def __init__(self, profiles: Mapping[str, ProfileVector], model: MatchModel):
        if len(profiles) < 2:
            raise DataError(f"Neighbor search needs at least 2 profiles, got {len(profiles)}")
        self.model = model
        self.codes = sorted(profiles)
        self._position = {code: i for i, code in enumerate(self.codes)}
        X = np.vstack([profiles[c].values for c in self.codes])
        model.check_dims(X[0], X)
        self.embedded = model.embed(X)

    def top_k(self, query_code: str, k: int = 10) -> List[str]:
        if query_code not in self._position:
            raise DataError(f"Query occupation '{query_code}' is not among the profiles")
        q = self._position[query_code]
        scores = self.model.score_embedded(self.embedded[q], self.embedded)
        others = [i for i in range(len(self.codes)) if i != q]
        others.sort(key=lambda i: (-scores[i], self.codes[i]))
        return [self.codes[i] for i in others[:k]]


def top_k_neighbors(
    query_code: str, profiles: Mapping[str, ProfileVector], model: MatchModel, k: int = 10
) -> List[str]:
    """Highest-scoring other codes, ties broken by ascending code."""
    if query_code not in profiles:
        raise DataError(f"Query occupation '{query_code}' is not among the profiles")
    return NeighborIndex(profiles, model).top_k(query_code, k)


# ==========================================
# GENDER SEGREGATION RISK
# ==========================================


def audit_profile_key(repeat: int, code: str) -> str:
    """Identifier of an audit profile's precomputed vector."""
    return f"audit:{code}" if repeat == 0 else f"audit{repeat}:{code}"


def gsr_audit(
    taxonomy: Taxonomy,
    vectorizer: Vectorizer,
    model: MatchModel,
    k: int = 10,
    subset_k: int = 5,
    seed: int = 42,
    repeats: int = 1,
) -> GsrAudit:
    """
    Correlates each labeled occupation's female share with the mean share of
    its top-k neighbors. Profiles are sampled from the full skill lists; with
    repeats > 1 the GSR is the mean over independent profile draws.
    """
    codes = taxonomy.labeled_codes
    if len(codes) < k + 2:
        raise DegenerateDataError(
            f"GSR audit needs at least {k + 2} occupations with female_share, got {len(codes)}"
        )
    shares = np.array([taxonomy.occupations[c].female_share for c in codes])
    if np.all(shares == shares[0]):
        raise DegenerateDataError("Degenerate correlation: every audited occupation has the same female_share")

    runs: List[float] = []
    records: List[GsrRecord] = []
    n_uncovered = 0
    n_zero = 0
    for repeat in range(repeats):
        rng = substream(seed, audit_stream_name(repeat))
        items = []
        for code in codes:
            occ = taxonomy.occupations[code]
            profile = sample_profile(occ, occ.skills, subset_k, rng)
            items.append((audit_profile_key(repeat, code), profile.text))
        vectors = vectorizer.transform_many(items)
        n_uncovered += sum(1 for v in vectors if v.warnings)
        n_zero += sum(1 for v in vectors if not np.any(v.values))

        index = NeighborIndex(dict(zip(codes, vectors)), model)
        run_records = []
        for code, share in zip(codes, shares):
            top = index.top_k(code, k)
            neighbor_share = float(np.mean([taxonomy.occupations[c].female_share for c in top]))
            run_records.append(
                GsrRecord(code=code, female_share=float(share), top_codes=top, mean_neighbor_share=neighbor_share)
            )
        runs.append(pearson(shares, [r.mean_neighbor_share for r in run_records]))
        if repeat == 0:
            records = run_records

    warnings = []
    if n_uncovered:
        warnings.append(f"{n_uncovered} audit profile(s) without word-vector coverage (zero vector used)")
    if n_zero and model.name == "cosine":
        warnings.append(f"{n_zero} audit profile(s) are zero vectors (cosine falls back to 0)")

    gsr = float(np.clip(np.mean(runs), -1.0, 1.0))
    return GsrAudit(records=records, gsr=gsr, n_occupations_used=len(codes), gsr_runs=runs, warnings=warnings)


# ==========================================
# PAIR SCORING
# ==========================================


def vectorize_split(vectorizer: Vectorizer, pairs: Sequence[MatchPair], split: str) -> Tuple[VectorizedPairs, int]:
    """Vectorizes both sides of every pair; also returns the count of vectors carrying warnings."""
    left = vectorizer.transform_many([(pair_side_key(split, i, "left"), p.left.text) for i, p in enumerate(pairs)])
    right = vectorizer.transform_many([(pair_side_key(split, i, "right"), p.right.text) for i, p in enumerate(pairs)])
    flagged = sum(1 for v in left + right if v.warnings)
    vectorized = VectorizedPairs(
        left=np.vstack([v.values for v in left]),
        right=np.vstack([v.values for v in right]),
        good=np.array([p.is_good for p in pairs], dtype=bool),
    )
    return vectorized, flagged


def score_pairs(model: MatchModel, pairs: Sequence[MatchPair], vectors: VectorizedPairs) -> List[ScoredPair]:
    return [
        ScoredPair(pair=pair, score=score_pair(model, l, r))
        for pair, l, r in zip(pairs, vectors.left, vectors.right)
    ]


# ==========================================
# EVALUATION RUN
# ==========================================


class EvaluationResult(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    report: AuditReport
    # Keyed by (vectorizer, metric) of successful rows
    audits: Dict[Tuple[str, str], GsrAudit] = {}
    metrics: Dict[str, MahalanobisMetric] = {}


class EvaluationService:
    def __init__(self, config: RunConfig, taxonomy: Taxonomy, dataset: PairDataset):
        self.config = config
        self.taxonomy = taxonomy
        self.dataset = dataset
        self.vectorizers = VectorizerService(config, taxonomy)
        self._vectorized: Dict[Tuple[str, str], Tuple[VectorizedPairs, int]] = {}
        self._itml: Dict[str, Tuple[MetricModel, List[str]]] = {}

    def _split_vectors(self, vectorizer_name: str, split: str) -> Tuple[VectorizedPairs, int]:
        key = (vectorizer_name, split)
        if key not in self._vectorized:
            vectorizer = self.vectorizers.get(vectorizer_name)
            self._vectorized[key] = vectorize_split(vectorizer, self.dataset.split(split), split)
        return self._vectorized[key]

    def _itml_model(self, vectorizer_name: str) -> Tuple[MetricModel, List[str]]:
        if vectorizer_name in self._itml:
            return self._itml[vectorizer_name]

        cfg = self.config.itml
        train, _ = self._split_vectors(vectorizer_name, "train")
        notes = []
        projection: Optional[np.ndarray] = None
        if cfg.pca_dims is not None:
            projection, _, _ = principal_components(np.vstack([train.left, train.right]), cfg.pca_dims)
            train = VectorizedPairs(left=train.left @ projection.T, right=train.right @ projection.T, good=train.good)
            notes.append(f"itml: PCA pre-reduction to {projection.shape[0]} dims")
            logger.info(f"{vectorizer_name}: ITML on {projection.shape[0]} principal directions")

        logger.info(f"{vectorizer_name}: training ITML on {len(self.dataset.train)} pairs, dim={train.dim}")
        metric = train_itml(train, cfg)
        diag = metric.diagnostics
        if not diag.converged:
            notes.append(f"itml: not converged after {diag.n_sweeps} sweeps")
        for bound in diag.clamped_bounds:
            value = diag.upper_bound if bound == "u" else diag.lower_bound
            notes.append(
                f"itml: bound {bound} clamped to {value:g} (training pairs at zero distance, "
                f"e.g. profiles drawing every skill of a split half)"
            )
        if diag.skipped_constraints:
            notes.append(f"itml: {diag.skipped_constraints} constraint(s) skipped (vanishing norm)")

        self._itml[vectorizer_name] = (MetricModel(metric, projection), notes)
        return self._itml[vectorizer_name]

    def _evaluate_row(self, vectorizer_name: str, metric_name: str) -> Tuple[ReportRow, GsrAudit]:
        vectorizer = self.vectorizers.get(vectorizer_name)
        warnings: List[str] = []

        if metric_name == "itml":
            model, notes = self._itml_model(vectorizer_name)
            warnings.extend(notes)
        else:
            model = build_model(metric_name)

        test, flagged = self._split_vectors(vectorizer_name, "test")
        if flagged:
            warnings.append(f"{flagged} test profile vector(s) without word-vector coverage (zero vector used)")

        scored = score_pairs(model, self.dataset.test, test)
        n_degenerate = sum(1 for s in scored if s.score.degenerate)
        if n_degenerate:
            warnings.append(f"{n_degenerate} test pair score(s) on zero vectors set to 0")

        audit = gsr_audit(
            self.taxonomy,
            vectorizer,
            model,
            k=self.config.top_k,
            subset_k=self.config.k,
            seed=self.config.seed,
            repeats=self.config.gsr_repeats,
        )
        warnings.extend(audit.warnings)

        row = ReportRow(
            vectorizer=vectorizer_name,
            metric=metric_name,
            auc=auc(scored),
            gsr=audit.gsr,
            n_test_pairs=len(scored),
            n_occupations=audit.n_occupations_used,
            warnings=warnings,
        )
        return row, audit

    def run(self) -> EvaluationResult:
        rows: List[ReportRow] = []
        audits: Dict[Tuple[str, str], GsrAudit] = {}
        for vectorizer_name in sorted(self.config.vectorizers):
            for metric_name in sorted(self.config.metrics):
                try:
                    row, audit = self._evaluate_row(vectorizer_name, metric_name)
                    audits[(vectorizer_name, metric_name)] = audit
                    for warning in row.warnings:
                        logger.warning(f"{vectorizer_name}/{metric_name}: {warning}")
                    logger.info(f"{vectorizer_name}/{metric_name}: AUC={row.auc:.4f} GSR={row.gsr:.4f}")
                except Exception as e:
                    logger.error(f"{vectorizer_name}/{metric_name} failed: {e}", exc_info=True)
                    row = ReportRow(
                        vectorizer=vectorizer_name,
                        metric=metric_name,
                        n_test_pairs=len(self.dataset.test),
                        warnings=[f"failed: {type(e).__name__}: {e}"],
                    )
                rows.append(row)

        metrics = {name: model.metric for name, (model, _) in self._itml.items()}
        return EvaluationResult(report=AuditReport(rows=rows), audits=audits, metrics=metrics)


def evaluate_all(
    taxonomy: Taxonomy,
    dataset: PairDataset,
    vectorizers: Sequence[str],
    metrics: Sequence[str],
    config: Optional[RunConfig] = None,
) -> AuditReport:
    base = config or RunConfig()
    run_config = base.model_copy(update={"vectorizers": list(vectorizers), "metrics": list(metrics)})
    return EvaluationService(run_config, taxonomy, dataset).run().report


# ==========================================
# TRADE-OFF SUMMARY
# ==========================================


def summarize_tradeoff(report: AuditReport) -> TradeoffSummary:
    """Best AUC, lowest GSR and the AUC/GSR Pareto front over successful rows."""
    rows = [r for r in report.rows if r.ok]
    if not rows:
        return TradeoffSummary()

    best = max(rows, key=lambda r: (r.auc, -r.gsr))
    fairest = min(rows, key=lambda r: (r.gsr, -r.auc))

    def dominates(a: ReportRow, b: ReportRow) -> bool:
        return a.auc >= b.auc and a.gsr <= b.gsr and (a.auc > b.auc or a.gsr < b.gsr)

    front = [r.model_name for r in rows if not any(dominates(o, r) for o in rows)]

    correlation = None
    if len(rows) >= 3:
        try:
            correlation = pearson([r.auc for r in rows], [r.gsr for r in rows])
        except DegenerateDataError:
            logger.info("AUC/GSR correlation skipped: no variance across models")

    return TradeoffSummary(
        best_auc=best.model_name,
        lowest_gsr=fairest.model_name,
        pareto_front=front,
        auc_gsr_correlation=correlation,
    )
