import csv
import json
import logging
import os
from pathlib import Path
from typing import Dict, Iterable, List, Union

from jinja2 import Environment, FileSystemLoader

from app.modules.config_models import RunConfig
from app.modules.models import SPLITS, PairDataset, Taxonomy, pair_side_key
from app.modules.report_models import AuditReport, GsrAudit, TradeoffSummary
from app.services.evaluation_service import audit_profile_key
from app.services.simulation_service import audit_stream_name, sample_profile, substream

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"
AUDIT_DETAIL_COLUMNS = ("code", "female_share", "mean_neighbor_share")


def write_audit_detail(audit: GsrAudit, path: PathLike):
    """The per-occupation pair plotted against each other: own vs. neighbor female share."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(AUDIT_DETAIL_COLUMNS)
        for record in audit.records:
            writer.writerow([record.code, repr(record.female_share), repr(record.mean_neighbor_share)])


def render_markdown(report: AuditReport, summary: TradeoffSummary, config: RunConfig) -> str:
    env = Environment(loader=FileSystemLoader(str(TEMPLATES_DIR)), keep_trailing_newline=True)
    template = env.get_template("report.md.j2")
    return template.render(report=report, summary=summary, config=config)


# ==========================================
# TEXT EXPORT FOR EXTERNAL ENCODERS
# ==========================================


def export_texts(taxonomy: Taxonomy, dataset: PairDataset, config: RunConfig) -> List[Dict[str, str]]:
    """
    Every (key, text) the sentence vectorizer looks up during a run with this
    config: occupation texts, pair sides and audit profiles.
    """
    rows = [{"key": code, "text": taxonomy.occupations[code].skill_text} for code in taxonomy.codes]
    for split in SPLITS:
        for i, pair in enumerate(dataset.split(split)):
            rows.append({"key": pair_side_key(split, i, "left"), "text": pair.left.text})
            rows.append({"key": pair_side_key(split, i, "right"), "text": pair.right.text})

    # Mirrors gsr_audit's draws so the keys carry the same sampled texts
    for repeat in range(config.gsr_repeats):
        rng = substream(config.seed, audit_stream_name(repeat))
        for code in taxonomy.labeled_codes:
            occ = taxonomy.occupations[code]
            profile = sample_profile(occ, occ.skills, config.k, rng)
            rows.append({"key": audit_profile_key(repeat, code), "text": profile.text})
    return rows


def write_jsonl(rows: Iterable[Dict], path: PathLike):
    with open(path, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False))
            f.write("\n")


class ReportService:
    """Writes evaluation artifacts under the run's output directory."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.out_dir = Path(config.out_dir)

    def write_report(self, report: AuditReport) -> Path:
        path = self.out_dir / "report.json"
        report.save(path)
        return path

    def write_audit_details(self, audits: Dict) -> List[Path]:
        """audit_detail.csv for the configured model, audit_details/<vectorizer>_<metric>.csv for all."""
        written = []
        detail_dir = self.out_dir / "audit_details"
        if audits:
            detail_dir.mkdir(parents=True, exist_ok=True)
        for (vectorizer, metric), audit in sorted(audits.items()):
            path = detail_dir / f"{vectorizer}_{metric}.csv"
            write_audit_detail(audit, path)
            written.append(path)

        key = (self.config.detail_vectorizer, self.config.detail_metric)
        if key in audits:
            path = self.out_dir / "audit_detail.csv"
            write_audit_detail(audits[key], path)
            written.append(path)
        else:
            logger.warning(f"No audit for {key[0]}/{key[1]}; audit_detail.csv not written")
        return written

    def write_metrics(self, metrics: Dict) -> List[Path]:
        written = []
        if metrics:
            (self.out_dir / "metrics").mkdir(parents=True, exist_ok=True)
        for vectorizer, metric in sorted(metrics.items()):
            path = self.out_dir / "metrics" / f"{vectorizer}_itml.json"
            metric.save(path)
            written.append(path)
        return written

    def write_markdown(self, report: AuditReport, summary: TradeoffSummary) -> Path:
        path = self.out_dir / "report.md"
        with open(path, "w", encoding="utf-8") as f:
            f.write(render_markdown(report, summary, self.config))
        return path
