import hashlib
import logging
import math
from typing import List, Sequence

import numpy as np

from app.modules.errors import DataError
from app.modules.models import (
    SPLITS,
    MatchPair,
    Occupation,
    PairDataset,
    SkillPartition,
    SkillProfile,
    SkillSplit,
    Taxonomy,
)

logger = logging.getLogger(__name__)

MIN_SKILLS_FOR_SPLIT = 2

# ==========================================
# RANDOM STREAMS
# ==========================================


def substream(seed: int, name: str) -> np.random.Generator:
    """
    Independent generator per pipeline stage. Streams are keyed by name, so
    adding or skipping one stage never shifts another stage's draws.
    """
    name_key = int(hashlib.sha256(name.encode("utf-8")).hexdigest()[:8], 16)
    return np.random.default_rng([seed, name_key])


def audit_stream_name(repeat: int) -> str:
    return "audit" if repeat == 0 else f"audit/{repeat}"


# ==========================================
# SKILL PARTITION & PROFILES
# ==========================================


def split_skills(taxonomy: Taxonomy, seed: int) -> SkillPartition:
    rng = substream(seed, "split")
    splits = {}
    excluded = []
    for code in taxonomy.codes:
        skills = taxonomy.occupations[code].skills
        if len(skills) < MIN_SKILLS_FOR_SPLIT:
            excluded.append(code)
            continue
        shuffled = [skills[i] for i in rng.permutation(len(skills))]
        cut = math.ceil(len(shuffled) / 2)
        splits[code] = SkillSplit(train_half=tuple(shuffled[:cut]), test_half=tuple(shuffled[cut:]))

    if excluded:
        logger.warning(
            f"{len(excluded)} occupation(s) with fewer than {MIN_SKILLS_FOR_SPLIT} skills excluded from pair generation"
        )
    return SkillPartition(splits=splits, excluded=tuple(excluded))


def sample_profile(occ: Occupation, pool: Sequence[str], k: int, rng: np.random.Generator) -> SkillProfile:
    """Draws min(k, |pool|) statements without replacement; text keeps the draw order."""
    if not pool:
        raise DataError(f"Cannot sample a profile for {occ.code} from an empty skill pool")
    if k < 1:
        raise ValueError(f"Profile size k must be >= 1, got {k}")
    foreign = set(pool) - set(occ.skills)
    if foreign:
        raise DataError(f"Pool for {occ.code} holds {len(foreign)} statement(s) not in that occupation")
    picks = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
    return SkillProfile(occupation_code=occ.code, skill_texts=tuple(pool[i] for i in picks))


# ==========================================
# PAIR GENERATION
# ==========================================


def generate_pairs(taxonomy: Taxonomy, k: int, n_pairs: int, seed: int) -> PairDataset:
    """
    Balanced good/bad pairs for both splits. Profiles for the train split only
    use each occupation's train half, test profiles only its test half.
    """
    if n_pairs <= 0 or n_pairs % 4 != 0:
        raise DataError(f"n_pairs must be a positive multiple of 4, got {n_pairs}")

    partition = split_skills(taxonomy, seed)
    eligible = partition.eligible_codes
    if len(eligible) < 2:
        raise DataError(f"Pair generation needs at least 2 occupations with >= 2 skills, got {len(eligible)}")

    rng = substream(seed, "pairs")
    n_per_label = n_pairs // 4
    splits = {}
    for split in SPLITS:
        pairs: List[MatchPair] = []
        for _ in range(n_per_label):
            occ = taxonomy.occupations[eligible[rng.integers(len(eligible))]]
            pool = partition.splits[occ.code].half(split)
            left = sample_profile(occ, pool, k, rng)
            right = sample_profile(occ, pool, k, rng)
            pairs.append(MatchPair(left=left, right=right, label="good"))
        for _ in range(n_per_label):
            i, j = rng.choice(len(eligible), size=2, replace=False)
            occ_a = taxonomy.occupations[eligible[i]]
            occ_b = taxonomy.occupations[eligible[j]]
            left = sample_profile(occ_a, partition.splits[occ_a.code].half(split), k, rng)
            right = sample_profile(occ_b, partition.splits[occ_b.code].half(split), k, rng)
            pairs.append(MatchPair(left=left, right=right, label="bad"))
        splits[split] = tuple(pairs[i] for i in rng.permutation(len(pairs)))

    logger.info(
        f"Generated {n_pairs} pairs (k={k}, seed={seed}) over {len(eligible)} occupations, "
        f"{len(partition.excluded)} excluded"
    )
    return PairDataset(train=splits["train"], test=splits["test"], seed=seed, k=k)
