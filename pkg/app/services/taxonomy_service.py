import csv
import logging
import math
import os
from collections import Counter, defaultdict
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple, Union

from pydantic import ValidationError

from app.modules.errors import DataError
from app.modules.models import Occupation, Taxonomy

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

OCCUPATION_COLUMNS = ("code", "title")
SKILL_COLUMNS = ("code", "skill_text")
GENDER_COLUMNS = ("code", "female_share")

# Warning counters carried on the Taxonomy
UNKNOWN_SKILL_CODES = "skills_unknown_code"
BLANK_SKILLS = "skills_blank"
DUPLICATE_SKILLS = "skills_duplicate"
UNKNOWN_GENDER_CODES = "gender_unknown_code"
OCCUPATIONS_WITHOUT_SKILLS = "occupations_without_skills"


def read_csv_rows(path: PathLike, columns: Sequence[str]) -> Iterator[Tuple[int, Dict[str, str]]]:
    """Yields (line number, row) pairs, checking the header and every row's width."""
    with open(path, "r", encoding="utf-8-sig", newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        missing = [c for c in columns if c not in header]
        if missing:
            raise DataError(f"{path}:1: header {header} lacks column(s) {missing}")
        try:
            for row in reader:
                if None in row or any(v is None for v in row.values()):
                    raise DataError(f"{path}:{reader.line_num}: expected {len(header)} fields")
                yield reader.line_num, {c: row[c].strip() for c in columns}
        except csv.Error as e:
            raise DataError(f"{path}:{reader.line_num}: {e}") from e


def _read_occupations(path: PathLike) -> Dict[str, str]:
    titles: Dict[str, str] = {}
    for line_no, row in read_csv_rows(path, OCCUPATION_COLUMNS):
        code = row["code"]
        if not code:
            raise DataError(f"{path}:{line_no}: empty occupation code")
        if code in titles:
            raise DataError(f"{path}:{line_no}: duplicate occupation code '{code}'")
        titles[code] = row["title"]
    return titles


def _read_skills(path: PathLike, known: Set[str], warnings: Counter) -> Dict[str, Set[str]]:
    skills: Dict[str, Set[str]] = defaultdict(set)
    for _, row in read_csv_rows(path, SKILL_COLUMNS):
        code, text = row["code"], row["skill_text"]
        if code not in known:
            warnings[UNKNOWN_SKILL_CODES] += 1
            continue
        if not text:
            warnings[BLANK_SKILLS] += 1
            continue
        if text in skills[code]:
            warnings[DUPLICATE_SKILLS] += 1
            continue
        skills[code].add(text)
    return skills


def _read_gender(path: PathLike, known: Set[str], warnings: Counter) -> Dict[str, float]:
    shares: Dict[str, float] = {}
    for line_no, row in read_csv_rows(path, GENDER_COLUMNS):
        code = row["code"]
        try:
            share = float(row["female_share"])
        except ValueError:
            raise DataError(f"{path}:{line_no}: female_share '{row['female_share']}' is not a number") from None
        if not math.isfinite(share) or not 0.0 <= share <= 1.0:
            raise DataError(f"{path}:{line_no}: female_share {row['female_share']} outside [0,1]")
        if code in shares:
            raise DataError(f"{path}:{line_no}: duplicate gender row for '{code}'")
        if code not in known:
            warnings[UNKNOWN_GENDER_CODES] += 1
            continue
        shares[code] = share
    return shares


def load_taxonomy(
    occupations_file: PathLike,
    skills_file: PathLike,
    gender_file: Optional[PathLike] = None,
) -> Taxonomy:
    """
    Joins the three CSV inputs on occupation code.

    Skills are stored sorted per occupation, so permuting input rows never
    changes the result. Rows that cannot be attached are counted, logged and
    kept on `Taxonomy.warnings`.
    """
    warnings: Counter = Counter()
    titles = _read_occupations(occupations_file)
    skills = _read_skills(skills_file, set(titles), warnings)
    shares = _read_gender(gender_file, set(titles), warnings) if gender_file else {}
    if not gender_file:
        logger.warning("No gender file given; occupations carry no female_share")

    occupations: Dict[str, Occupation] = {}
    for code in sorted(titles):
        if not skills.get(code):
            warnings[OCCUPATIONS_WITHOUT_SKILLS] += 1
            continue
        try:
            occupations[code] = Occupation(
                code=code,
                title=titles[code],
                skills=tuple(sorted(skills[code])),
                female_share=shares.get(code),
            )
        except ValidationError as e:
            raise DataError(f"Occupation '{code}': {e}") from e

    for key, count in sorted(warnings.items()):
        logger.warning(f"Taxonomy ingestion: {key}={count}")

    if len(occupations) < 2:
        raise DataError(
            f"Taxonomy needs at least 2 occupations with skills, got {len(occupations)}"
        )

    sources: List[str] = [f"occupations={Path(occupations_file).name}", f"skills={Path(skills_file).name}"]
    if gender_file:
        sources.append(f"gender={Path(gender_file).name}")

    taxonomy = Taxonomy(occupations=occupations, provenance=" ".join(sources), warnings=dict(warnings))
    logger.info(
        f"Loaded taxonomy: {len(taxonomy.occupations)} occupations, "
        f"{taxonomy.n_skill_rows} skills, {len(taxonomy.labeled_codes)} labeled"
    )
    return taxonomy


def summary_line(taxonomy: Taxonomy) -> str:
    return (
        f"occupations={len(taxonomy.occupations)} "
        f"skills={taxonomy.n_skill_rows} "
        f"labeled={len(taxonomy.labeled_codes)}"
    )
