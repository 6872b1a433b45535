from pathlib import Path
from typing import Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

VECTORIZER_NAMES = ("bow", "wordvec", "sentence")
METRIC_NAMES = ("cosine", "euclidean", "itml")

# --- Metric Learning ---


class ItmlConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float = Field(default=1.0, gt=0, description="Slack trade-off")
    max_iter: int = Field(default=1000, ge=1, description="Maximum number of sweeps")
    conv_tol: float = Field(default=1e-3, gt=0)
    bound_low: float = Field(default=5.0, description="Percentile for the similarity upper bound u")
    bound_high: float = Field(default=95.0, description="Percentile for the dissimilarity lower bound l")
    pca_dims: Optional[int] = Field(default=None, ge=1, le=256)

    @model_validator(mode="after")
    def check_percentiles(self) -> "ItmlConfig":
        if not 0 < self.bound_low < self.bound_high < 100:
            raise ValueError(
                f"ITML percentiles must satisfy 0 < low < high < 100, got {self.bound_low}/{self.bound_high}"
            )
        return self


# --- Run Configuration ---


class RunConfig(BaseModel):
    """Everything a pipeline run depends on. Defaults reproduce the reference setup."""

    model_config = ConfigDict(extra="forbid")

    # Inputs
    occupations_file: Optional[Path] = None
    skills_file: Optional[Path] = None
    gender_file: Optional[Path] = None
    taxonomy_file: Optional[Path] = None
    pairs_file: Optional[Path] = None
    embeddings_file: Optional[Path] = None
    precomputed_file: Optional[Path] = None

    out_dir: Path = Path("output")

    # Simulation / audit constants
    k: int = Field(default=5, ge=1)
    n_pairs: int = Field(default=3940, gt=0)
    top_k: int = Field(default=10, ge=1)
    seed: int = Field(default=42, ge=0)
    gsr_repeats: int = Field(default=1, ge=1)

    vectorizers: List[str] = list(VECTORIZER_NAMES)
    metrics: List[str] = list(METRIC_NAMES)
    itml: ItmlConfig = Field(default_factory=ItmlConfig)

    # Model whose per-occupation audit goes to audit_detail.csv
    detail_vectorizer: str = "bow"
    detail_metric: str = "cosine"

    log_level: str = "INFO"

    @model_validator(mode="before")
    @classmethod
    def fold_flat_itml_keys(cls, data: Any) -> Any:
        # Config files are flat; itml_gamma -> itml.gamma etc.
        if isinstance(data, dict):
            flat = {k: v for k, v in data.items() if k.startswith("itml_")}
            if flat:
                data = {k: v for k, v in data.items() if not k.startswith("itml_")}
                nested = dict(data.get("itml") or {})
                for key, value in flat.items():
                    if value is not None:
                        nested[key[len("itml_"):]] = value
                data["itml"] = nested
        return data

    @field_validator("n_pairs")
    @classmethod
    def check_n_pairs(cls, v: int) -> int:
        if v % 4 != 0:
            raise ValueError(f"n_pairs must be divisible by 4 (balanced good/bad in train and test), got {v}")
        return v

    @field_validator("vectorizers")
    @classmethod
    def check_vectorizers(cls, v: List[str]) -> List[str]:
        unknown = [name for name in v if name not in VECTORIZER_NAMES]
        if unknown:
            raise ValueError(f"Unknown vectorizer(s) {unknown}; choose from {list(VECTORIZER_NAMES)}")
        return v

    @field_validator("metrics")
    @classmethod
    def check_metrics(cls, v: List[str]) -> List[str]:
        unknown = [name for name in v if name not in METRIC_NAMES]
        if unknown:
            raise ValueError(f"Unknown metric(s) {unknown}; choose from {list(METRIC_NAMES)}")
        return v

    @field_validator("detail_vectorizer")
    @classmethod
    def check_detail_vectorizer(cls, v: str) -> str:
        if v not in VECTORIZER_NAMES:
            raise ValueError(f"Unknown detail_vectorizer {v!r}; choose from {list(VECTORIZER_NAMES)}")
        return v

    @field_validator("detail_metric")
    @classmethod
    def check_detail_metric(cls, v: str) -> str:
        if v not in METRIC_NAMES:
            raise ValueError(f"Unknown detail_metric {v!r}; choose from {list(METRIC_NAMES)}")
        return v

    @property
    def resolved_taxonomy_file(self) -> Path:
        return self.taxonomy_file or self.out_dir / "taxonomy.json"

    @property
    def resolved_pairs_file(self) -> Path:
        return self.pairs_file or self.out_dir / "pairs.jsonl"
