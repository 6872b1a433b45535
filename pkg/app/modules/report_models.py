import json
import os
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.modules.models import MatchPair
from app.modules.vector_models import MatchScore

# --- Evaluation Models ---


class ScoredPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: MatchPair
    score: MatchScore


class GsrRecord(BaseModel):
    code: str
    female_share: float
    top_codes: List[str]
    mean_neighbor_share: float

    @model_validator(mode="after")
    def check_self_excluded(self) -> "GsrRecord":
        if self.code in self.top_codes:
            raise ValueError(f"Occupation {self.code} lists itself among its neighbors")
        return self


class GsrAudit(BaseModel):
    records: List[GsrRecord]
    gsr: float = Field(ge=-1.0, le=1.0)
    n_occupations_used: int
    # One GSR per audit draw; gsr is their mean
    gsr_runs: List[float] = []
    warnings: List[str] = []


class ReportRow(BaseModel):
    vectorizer: str
    metric: str
    auc: Optional[float] = None
    gsr: Optional[float] = None
    n_test_pairs: int = 0
    n_occupations: int = 0
    warnings: List[str] = []

    @field_validator("auc")
    @classmethod
    def check_auc(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValueError(f"AUC must lie in [0,1], got {v}")
        return v

    @field_validator("gsr")
    @classmethod
    def check_gsr(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not -1.0 <= v <= 1.0:
            raise ValueError(f"GSR must lie in [-1,1], got {v}")
        return v

    @property
    def ok(self) -> bool:
        return self.auc is not None and self.gsr is not None

    @property
    def model_name(self) -> str:
        return f"{self.vectorizer}/{self.metric}"


class AuditReport(BaseModel):
    rows: List[ReportRow]

    @model_validator(mode="after")
    def sort_rows(self) -> "AuditReport":
        self.rows.sort(key=lambda r: (r.vectorizer, r.metric))
        return self

    @property
    def failed_rows(self) -> List[ReportRow]:
        return [r for r in self.rows if not r.ok]

    def row(self, vectorizer: str, metric: str) -> Optional[ReportRow]:
        return next((r for r in self.rows if r.vectorizer == vectorizer and r.metric == metric), None)

    def save(self, path: Union[str, os.PathLike]):
        # json.dump writes floats via repr, i.e. at full precision
        with open(path, "w", encoding="utf-8") as f:
            json.dump([r.model_dump(mode="json") for r in self.rows], f, indent=2, ensure_ascii=False)
            f.write("\n")

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> "AuditReport":
        with open(path, "r", encoding="utf-8") as f:
            return cls(rows=[ReportRow(**row) for row in json.load(f)])


class TradeoffSummary(BaseModel):
    best_auc: Optional[str] = None
    lowest_gsr: Optional[str] = None
    pareto_front: List[str] = []
    auc_gsr_correlation: Optional[float] = None


# --- Projection Models ---


class ProjectionRow(BaseModel):
    code: str
    title: str = ""
    x: float
    y: float
    female_share: Optional[float] = None

    @property
    def labeled(self) -> bool:
        return self.female_share is not None


class Projection2D(BaseModel):
    rows: List[ProjectionRow]
    explained_variance: Tuple[float, float]
    # Unit principal directions, row per component
    components: Tuple[Tuple[float, ...], Tuple[float, ...]]

    @field_validator("explained_variance")
    @classmethod
    def check_variance_order(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] < 0 or v[1] < 0 or v[0] < v[1]:
            raise ValueError(f"Explained variance must be non-negative and descending, got {v}")
        return v
