import json
import math
import os
from typing import Dict, Iterable, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, ValidationError, computed_field, field_validator, model_validator

from app.modules.errors import DataError

SPLITS = ("train", "test")
SIDES = ("left", "right")

# --- Taxonomy Models ---


class Occupation(BaseModel):
    model_config = ConfigDict(frozen=True)

    code: str
    title: str = ""
    skills: Tuple[str, ...] = ()
    female_share: Optional[float] = None

    @field_validator("code")
    @classmethod
    def validate_code(cls, v: str) -> str:
        v = v.strip()
        if not v:
            raise ValueError("Occupation code must be non-empty")
        return v

    @field_validator("skills")
    @classmethod
    def validate_skills(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        if any(not s.strip() for s in v):
            raise ValueError("Skill statements must not be empty or whitespace-only")
        if len(set(v)) != len(v):
            raise ValueError("Skill statements must be distinct within an occupation")
        return v

    @field_validator("female_share")
    @classmethod
    def validate_female_share(cls, v: Optional[float]) -> Optional[float]:
        if v is None:
            return v
        if not math.isfinite(v) or not 0.0 <= v <= 1.0:
            raise ValueError(f"female_share must lie in [0,1], got {v}")
        return v

    @property
    def labeled(self) -> bool:
        return self.female_share is not None

    @property
    def skill_text(self) -> str:
        return occupation_skill_text(self)


def occupation_skill_text(occ: Occupation) -> str:
    """All skill statements of an occupation in stored order, single-space joined."""
    if not occ.skills:
        raise DataError(f"Occupation {occ.code} has no skills to concatenate")
    return " ".join(occ.skills)


class Taxonomy(BaseModel):
    model_config = ConfigDict(frozen=True)

    occupations: Dict[str, Occupation]
    provenance: str = ""
    warnings: Dict[str, int] = {}

    @model_validator(mode="after")
    def check_occupations(self) -> "Taxonomy":
        for code, occ in self.occupations.items():
            if code != occ.code:
                raise ValueError(f"Taxonomy key {code} does not match occupation code {occ.code}")
        if len(self.occupations) < 2:
            raise ValueError(f"A taxonomy needs at least 2 occupations, got {len(self.occupations)}")
        return self

    @property
    def codes(self) -> List[str]:
        return sorted(self.occupations)

    @property
    def labeled_codes(self) -> List[str]:
        return [c for c in self.codes if self.occupations[c].labeled]

    @property
    def n_skill_rows(self) -> int:
        return sum(len(o.skills) for o in self.occupations.values())

    def get(self, code: str) -> Occupation:
        try:
            return self.occupations[code]
        except KeyError:
            raise DataError(f"Unknown occupation code '{code}'") from None

    def same_content(self, other: "Taxonomy") -> bool:
        """Equality on codes, skills and female_share (ignores provenance and warning counts)."""
        return self.occupations == other.occupations

    def save(self, path: Union[str, os.PathLike]):
        data = {
            "provenance": self.provenance,
            "warnings": dict(sorted(self.warnings.items())),
            "occupations": [
                self.occupations[code].model_dump(mode="json") for code in self.codes
            ],
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, ensure_ascii=False)
            f.write("\n")

    @classmethod
    def load(cls, path: Union[str, os.PathLike]) -> "Taxonomy":
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
            occupations = [Occupation(**row) for row in data["occupations"]]
            codes = [o.code for o in occupations]
            if len(set(codes)) != len(codes):
                raise DataError(f"{path}: duplicate occupation code")
            return cls(
                occupations={o.code: o for o in occupations},
                provenance=data.get("provenance", ""),
                warnings=data.get("warnings", {}),
            )
        except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as e:
            raise DataError(f"{path}: not a valid taxonomy file: {e}") from e


# --- Simulation Models ---


class SkillSplit(BaseModel):
    """One occupation's skills partitioned into disjoint train/test halves."""

    model_config = ConfigDict(frozen=True)

    train_half: Tuple[str, ...]
    test_half: Tuple[str, ...]

    @model_validator(mode="after")
    def check_disjoint(self) -> "SkillSplit":
        if set(self.train_half) & set(self.test_half):
            raise ValueError("Train and test halves share skill statements")
        if len(self.train_half) < len(self.test_half):
            raise ValueError("The train half takes the extra statement of an odd-sized list")
        return self

    def half(self, split: str) -> Tuple[str, ...]:
        if split not in SPLITS:
            raise ValueError(f"Unknown split '{split}'")
        return self.train_half if split == "train" else self.test_half


class SkillPartition(BaseModel):
    model_config = ConfigDict(frozen=True)

    splits: Dict[str, SkillSplit]
    # Occupations with fewer than 2 skills
    excluded: Tuple[str, ...] = ()

    @property
    def eligible_codes(self) -> List[str]:
        return sorted(self.splits)


class SkillProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    occupation_code: str
    skill_texts: Tuple[str, ...]

    @field_validator("skill_texts")
    @classmethod
    def validate_skill_texts(cls, v: Tuple[str, ...]) -> Tuple[str, ...]:
        if not v:
            raise ValueError("A skill profile needs at least one skill statement")
        return v

    @computed_field
    @property
    def text(self) -> str:
        return " ".join(self.skill_texts)


class MatchPair(BaseModel):
    model_config = ConfigDict(frozen=True)

    left: SkillProfile
    right: SkillProfile
    label: Literal["good", "bad"]

    @model_validator(mode="after")
    def check_label(self) -> "MatchPair":
        same = self.left.occupation_code == self.right.occupation_code
        if same != (self.label == "good"):
            raise ValueError(
                f"Pair {self.left.occupation_code}/{self.right.occupation_code} cannot be labeled '{self.label}'"
            )
        return self

    @property
    def is_good(self) -> bool:
        return self.label == "good"


def pair_side_key(split: str, index: int, side: str) -> str:
    """Identifier under which a pair side's precomputed vector is stored."""
    return f"{split}:{index}:{side}"


class PairDataset(BaseModel):
    model_config = ConfigDict(frozen=True)

    train: Tuple[MatchPair, ...]
    test: Tuple[MatchPair, ...]
    seed: Optional[int] = None
    k: Optional[int] = None

    @model_validator(mode="after")
    def check_balance(self) -> "PairDataset":
        for split in SPLITS:
            pairs = self.split(split)
            n_good = sum(1 for p in pairs if p.is_good)
            if n_good * 2 != len(pairs):
                raise ValueError(f"{split} split is unbalanced: {n_good} good of {len(pairs)}")
        return self

    def split(self, name: str) -> Tuple[MatchPair, ...]:
        if name not in SPLITS:
            raise ValueError(f"Unknown split '{name}'")
        return self.train if name == "train" else self.test

    def rows(self) -> Iterable[Dict]:
        for split in SPLITS:
            for pair in self.split(split):
                yield {
                    "left_code": pair.left.occupation_code,
                    "left_skills": list(pair.left.skill_texts),
                    "right_code": pair.right.occupation_code,
                    "right_skills": list(pair.right.skill_texts),
                    "label": pair.label,
                    "split": split,
                }

    def to_jsonl(self, path: Union[str, os.PathLike]):
        with open(path, "w", encoding="utf-8") as f:
            for row in self.rows():
                f.write(json.dumps(row, ensure_ascii=False))
                f.write("\n")

    @classmethod
    def from_jsonl(
        cls, path: Union[str, os.PathLike], seed: Optional[int] = None, k: Optional[int] = None
    ) -> "PairDataset":
        splits: Dict[str, List[MatchPair]] = {name: [] for name in SPLITS}
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    pair = MatchPair(
                        left=SkillProfile(occupation_code=row["left_code"], skill_texts=row["left_skills"]),
                        right=SkillProfile(occupation_code=row["right_code"], skill_texts=row["right_skills"]),
                        label=row["label"],
                    )
                    splits[row["split"]].append(pair)
                except (json.JSONDecodeError, KeyError, TypeError, ValidationError) as e:
                    raise DataError(f"{path}:{line_no}: malformed pair row: {e}") from e
        try:
            return cls(train=tuple(splits["train"]), test=tuple(splits["test"]), seed=seed, k=k)
        except ValidationError as e:
            raise DataError(f"{path}: {e}") from e
