import csv
import hashlib
import os
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

# Add project root to path
ROOT = Path(__file__).resolve().parent.parent
sys.path.append(str(ROOT))

from app.modules.models import Occupation, Taxonomy
from app.modules.vector_models import ProfileVector, VectorizedPairs
from app.modules.vectorizers import Vectorizer

SAMPLE_DIR = ROOT / "data" / "sample"

POOL_A = ["anchor", "bolt", "crane", "drill", "engine", "forge", "gear", "hinge"]
POOL_B = ["baking", "cream", "dough", "flour", "glaze", "honey", "icing", "juice"]


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(rows)


def make_taxonomy(skills: Dict[str, List[str]], shares: Optional[Dict[str, float]] = None) -> Taxonomy:
    shares = shares or {}
    return Taxonomy(
        occupations={
            code: Occupation(code=code, title=f"Occupation {code}", skills=tuple(sorted(s)), female_share=shares.get(code))
            for code, s in skills.items()
        }
    )


def two_cluster_taxonomy(n_per_cluster: int = 20, n_skills: int = 12, share_a: float = 0.9, share_b: float = 0.1) -> Taxonomy:
    """Cluster A and B use disjoint word pools; every skill also carries one token unique to it."""
    skills, shares = {}, {}
    for prefix, pool, share in (("A", POOL_A, share_a), ("B", POOL_B, share_b)):
        for i in range(n_per_cluster):
            code = f"{prefix}{i:02d}"
            skills[code] = [f"{pool[j % 8]} {pool[(j + 3) % 8]} {prefix.lower()}{i}task{j}" for j in range(n_skills)]
            shares[code] = share
    return make_taxonomy(skills, shares)


def axis_pairs(good_steps: Sequence[float], bad_steps: Sequence[float]) -> VectorizedPairs:
    """2-D pairs on an integer grid: good pairs differ along the second axis, bad along the first."""
    lefts, rights, good = [], [], []
    for i, step in enumerate(list(good_steps) + list(bad_steps)):
        base = np.array([float(i % 7), float(i // 7)])
        is_good = i < len(good_steps)
        offset = np.array([0.0, step]) if is_good else np.array([step, 0.0])
        lefts.append(base)
        rights.append(base + offset)
        good.append(is_good)
    return VectorizedPairs(left=np.vstack(lefts), right=np.vstack(rights), good=np.array(good))


class NoiseVectorizer(Vectorizer):
    """Seeded Gaussian vector per key; ignores the text."""

    name = "noise"

    def __init__(self, seed: int, dim: int = 16):
        self.seed = seed
        self._dim = dim

    @property
    def dim(self) -> int:
        return self._dim

    def transform(self, text: str, key: Optional[str] = None) -> ProfileVector:
        key_hash = int(hashlib.sha256((key or text).encode("utf-8")).hexdigest()[:8], 16)
        rng = np.random.default_rng([self.seed, key_hash])
        return ProfileVector(values=rng.standard_normal(self._dim), source=self.name)


def close_log_handlers():
    import logging

    for handler in list(logging.getLogger().handlers):
        handler.close()
        logging.getLogger().removeHandler(handler)
