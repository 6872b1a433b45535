import sys
import argparse
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from app.audit_controller import AuditController
from app.config import load_run_config, setup_logging
from app.modules.config_models import METRIC_NAMES, VECTORIZER_NAMES
from app.modules.errors import AuditError, ConfigError
from app.services.taxonomy_service import summary_line

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PARTIAL = 3


class AuditArgumentParser(argparse.ArgumentParser):
    """Usage errors share the config-error exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# Flag destination -> RunConfig field
OVERRIDES = {
    "occupations": "occupations_file",
    "skills": "skills_file",
    "gender": "gender_file",
    "taxonomy": "taxonomy_file",
    "pairs": "pairs_file",
    "embeddings": "embeddings_file",
    "precomputed": "precomputed_file",
    "out_dir": "out_dir",
    "k": "k",
    "n_pairs": "n_pairs",
    "top_k": "top_k",
    "seed": "seed",
    "gsr_repeats": "gsr_repeats",
    "vectorizers": "vectorizers",
    "metrics": "metrics",
    "itml_pca_dims": "itml_pca_dims",
    "log_level": "log_level",
}


def build_parser() -> argparse.ArgumentParser:
    common = AuditArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Flat YAML run configuration")
    common.add_argument("--out-dir", dest="out_dir", type=Path, help="Directory for all outputs")
    common.add_argument("--seed", type=int)
    common.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    parser = AuditArgumentParser(
        prog="skills_audit",
        description="Simulate skills-based matching and audit matchers for AUC and gender segregation risk.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", parents=[common], help="Validate and join the taxonomy CSVs")
    ingest.add_argument("--occupations", type=Path, help="occupations.csv (code,title)")
    ingest.add_argument("--skills", type=Path, help="skills.csv (code,skill_text)")
    ingest.add_argument("--gender", type=Path, help="gender.csv (code,female_share)")
    ingest.set_defaults(handler=cmd_ingest)

    simulate = sub.add_parser("simulate", parents=[common], help="Generate balanced good/bad match pairs")
    simulate.add_argument("--taxonomy", type=Path)
    simulate.add_argument("--k", type=int, help="Skills per profile")
    simulate.add_argument("--n-pairs", dest="n_pairs", type=int, help="Total pairs, divisible by 4")
    simulate.set_defaults(handler=cmd_simulate)

    evaluate = sub.add_parser("evaluate", parents=[common], help="AUC and GSR per vectorizer x metric")
    evaluate.add_argument("--taxonomy", type=Path)
    evaluate.add_argument("--pairs", type=Path)
    evaluate.add_argument("--embeddings", type=Path, help="Word vectors in text format")
    evaluate.add_argument("--precomputed", type=Path, help="Sentence vectors as JSON Lines")
    evaluate.add_argument("--vectorizer", dest="vectorizers", action="append", choices=VECTORIZER_NAMES)
    evaluate.add_argument("--metric", dest="metrics", action="append", choices=METRIC_NAMES)
    evaluate.add_argument("--k", type=int, help="Skills per audit profile")
    evaluate.add_argument("--top-k", dest="top_k", type=int)
    evaluate.add_argument("--gsr-repeats", dest="gsr_repeats", type=int)
    evaluate.add_argument("--itml-pca-dims", dest="itml_pca_dims", type=int)
    evaluate.set_defaults(handler=cmd_evaluate)

    project = sub.add_parser("project", parents=[common], help="2-D PCA of occupation skill vectors")
    project.add_argument("--taxonomy", type=Path)
    project.add_argument("--vectorizer", dest="project_vectorizer", choices=VECTORIZER_NAMES, default="bow")
    project.add_argument("--embeddings", type=Path)
    project.add_argument("--precomputed", type=Path)
    project.set_defaults(handler=cmd_project)

    export = sub.add_parser("export-texts", parents=[common], help="Texts to encode for the sentence vectorizer")
    export.add_argument("--taxonomy", type=Path)
    export.add_argument("--pairs", type=Path)
    export.add_argument("--k", type=int)
    export.add_argument("--gsr-repeats", dest="gsr_repeats", type=int)
    export.set_defaults(handler=cmd_export_texts)

    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {field: getattr(args, dest) for dest, field in OVERRIDES.items() if getattr(args, dest, None) is not None}


# ==========================================
# SUBCOMMANDS
# ==========================================


def cmd_ingest(controller: AuditController, args) -> int:
    taxonomy = controller.ingest()
    print(summary_line(taxonomy))
    for key, count in sorted(taxonomy.warnings.items()):
        print(f"warning: {key}={count}")
    return EXIT_OK


def cmd_simulate(controller: AuditController, args) -> int:
    dataset = controller.simulate()
    print(f"pairs={len(dataset.train) + len(dataset.test)} train={len(dataset.train)} test={len(dataset.test)}")
    return EXIT_OK


def cmd_evaluate(controller: AuditController, args) -> int:
    result = controller.evaluate()
    for row in result.report.rows:
        if row.ok:
            print(f"{row.model_name}: auc={row.auc:.4f} gsr={row.gsr:.4f}")
        else:
            print(f"{row.model_name}: FAILED ({'; '.join(row.warnings)})")
    return EXIT_PARTIAL if result.report.failed_rows else EXIT_OK


def cmd_project(controller: AuditController, args) -> int:
    projection = controller.project(args.project_vectorizer)
    print(f"projected={len(projection.rows)} explained_variance={projection.explained_variance[0]:.6g},{projection.explained_variance[1]:.6g}")
    return EXIT_OK


def cmd_export_texts(controller: AuditController, args) -> int:
    path = controller.export_texts()
    print(f"texts={path}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_run_config(args.config, collect_overrides(args))
        setup_logging(config)
        return args.handler(AuditController(config), args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (AuditError, OSError) as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA
