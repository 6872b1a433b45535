import os
import json
import yaml
import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from app import __version__
from app.modules.config_models import RunConfig
from app.modules.errors import ConfigError, DataError
from app.modules.models import PairDataset, Taxonomy
from app.modules.report_models import Projection2D
from app.services.evaluation_service import EvaluationResult, EvaluationService, summarize_tradeoff
from app.services.projection_service import emit_projection, write_projection_csv
from app.services.report_service import ReportService, export_texts, write_jsonl
from app.services.simulation_service import generate_pairs
from app.services.taxonomy_service import load_taxonomy, summary_line
from app.services.vectorizer_service import VectorizerService

logger = logging.getLogger(__name__)

PROVENANCE_SUFFIX = ".provenance.yaml"


def calculate_hash(path):
    with open(path, 'rb') as f:
        return hashlib.sha256(f.read()).hexdigest()


def provenance_path(artifact: Path) -> Path:
    return artifact.with_name(artifact.name + PROVENANCE_SUFFIX)


def build_provenance(config: RunConfig, inputs: Dict[str, Optional[Path]], extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """
    Config fingerprint of one artifact. Inputs are recorded by file name and
    content hash only, so the same data in another directory fingerprints the same.
    """
    record: Dict[str, Any] = {
        "version": __version__,
        "seed": config.seed,
        "k": config.k,
        "n_pairs": config.n_pairs,
        "top_k": config.top_k,
        "gsr_repeats": config.gsr_repeats,
        "inputs": {
            name: {"file": Path(path).name, "sha256": calculate_hash(path)}
            for name, path in sorted(inputs.items())
            if path is not None and Path(path).is_file()
        },
    }
    record.update(extra or {})
    canonical = json.dumps(record, sort_keys=True, separators=(",", ":"))
    record["fingerprint"] = hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    return record


def write_provenance(artifact: Path, provenance: Dict[str, Any]) -> Path:
    path = provenance_path(artifact)
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump({"artifact": artifact.name, **provenance}, f, sort_keys=True, allow_unicode=True)
    return path


class AuditController:
    """Runs one pipeline stage per call; every artifact lands in out_dir with a provenance sidecar."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)
        os.makedirs(self.out_dir, exist_ok=True)

    def _stamp(self, artifact: Path, inputs: Dict[str, Optional[Path]], extra: Optional[Dict[str, Any]] = None):
        write_provenance(artifact, build_provenance(self.config, inputs, extra))
        logger.info(f"Wrote {artifact}")

    # --- Inputs ---

    def load_taxonomy(self) -> Taxonomy:
        path = self.config.resolved_taxonomy_file
        if not path.is_file():
            raise DataError(f"Taxonomy file {path} not found; run 'ingest' first or pass --taxonomy")
        return Taxonomy.load(path)

    def pairs_origin(self) -> Dict[str, int]:
        """Seed and k the pair file was simulated with, from its sidecar; the run config when it has none."""
        origin = {"seed": self.config.seed, "k": self.config.k}
        sidecar = provenance_path(self.config.resolved_pairs_file)
        if not sidecar.is_file():
            logger.warning(f"No provenance for {self.config.resolved_pairs_file}; assuming seed={origin['seed']} k={origin['k']}")
            return origin
        try:
            with open(sidecar, 'r', encoding='utf-8') as f:
                record = yaml.safe_load(f) or {}
        except (OSError, yaml.YAMLError) as e:
            raise DataError(f"Cannot read {sidecar}: {e}") from e
        if not isinstance(record, dict):
            raise DataError(f"{sidecar}: expected a key/value document")
        for key in origin:
            value = record.get(key)
            if value is not None:
                if not isinstance(value, int) or isinstance(value, bool):
                    raise DataError(f"{sidecar}: {key} must be an integer, got {value!r}")
                origin[key] = value
        return origin

    def load_pairs(self) -> PairDataset:
        path = self.config.resolved_pairs_file
        if not path.is_file():
            raise DataError(f"Pair file {path} not found; run 'simulate' first or pass --pairs")
        origin = self.pairs_origin()
        return PairDataset.from_jsonl(path, seed=origin["seed"], k=origin["k"])

    # --- Stages ---

    def ingest(self) -> Taxonomy:
        cfg = self.config
        if cfg.occupations_file is None or cfg.skills_file is None:
            raise ConfigError("ingest needs occupations_file and skills_file")
        taxonomy = load_taxonomy(cfg.occupations_file, cfg.skills_file, cfg.gender_file)

        artifact = self.out_dir / "taxonomy.json"
        taxonomy.save(artifact)
        self._stamp(
            artifact,
            {"occupations": cfg.occupations_file, "skills": cfg.skills_file, "gender": cfg.gender_file},
            {"warnings": dict(sorted(taxonomy.warnings.items()))},
        )
        logger.info(summary_line(taxonomy))
        return taxonomy

    def simulate(self) -> PairDataset:
        cfg = self.config
        taxonomy = self.load_taxonomy()
        dataset = generate_pairs(taxonomy, cfg.k, cfg.n_pairs, cfg.seed)

        artifact = self.out_dir / "pairs.jsonl"
        dataset.to_jsonl(artifact)
        self._stamp(artifact, {"taxonomy": cfg.resolved_taxonomy_file})
        return dataset

    def evaluate(self) -> EvaluationResult:
        cfg = self.config
        taxonomy = self.load_taxonomy()
        dataset = self.load_pairs()
        result = EvaluationService(cfg, taxonomy, dataset).run()

        inputs = {
            "taxonomy": cfg.resolved_taxonomy_file,
            "pairs": cfg.resolved_pairs_file,
            "embeddings": cfg.embeddings_file,
            "precomputed": cfg.precomputed_file,
        }
        extra = {
            "vectorizers": sorted(cfg.vectorizers),
            "metrics": sorted(cfg.metrics),
            "itml": cfg.itml.model_dump(),
            "pairs_seed": dataset.seed,
            "pairs_k": dataset.k,
        }
        reports = ReportService(cfg)
        written: List[Path] = [reports.write_report(result.report)]
        written += reports.write_audit_details(result.audits)
        written += reports.write_metrics(result.metrics)
        written.append(reports.write_markdown(result.report, summarize_tradeoff(result.report)))
        for artifact in written:
            self._stamp(artifact, inputs, extra)

        failed = result.report.failed_rows
        if failed:
            logger.warning(f"{len(failed)} of {len(result.report.rows)} evaluation row(s) failed")
        return result

    def project(self, vectorizer_name: str) -> Projection2D:
        cfg = self.config
        taxonomy = self.load_taxonomy()
        vectorizer = VectorizerService(cfg, taxonomy).get(vectorizer_name)
        projection = emit_projection(taxonomy, vectorizer)

        artifact = self.out_dir / "pca.csv"
        write_projection_csv(projection, artifact)
        self._stamp(
            artifact,
            {
                "taxonomy": cfg.resolved_taxonomy_file,
                "embeddings": cfg.embeddings_file if vectorizer_name == "wordvec" else None,
                "precomputed": cfg.precomputed_file if vectorizer_name == "sentence" else None,
            },
            {"vectorizer": vectorizer_name, "explained_variance": list(projection.explained_variance)},
        )
        return projection

    def export_texts(self) -> Path:
        cfg = self.config
        taxonomy = self.load_taxonomy()
        dataset = self.load_pairs()

        artifact = self.out_dir / "texts.jsonl"
        write_jsonl(export_texts(taxonomy, dataset, cfg), artifact)
        self._stamp(artifact, {"taxonomy": cfg.resolved_taxonomy_file, "pairs": cfg.resolved_pairs_file})
        return artifact
