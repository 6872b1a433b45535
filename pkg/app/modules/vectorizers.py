"""
Text → vector transforms.

Three interchangeable vectorizers share the `Vectorizer` interface:

- `BowVectorizer`: raw 1+2-gram counts over a vocabulary fitted on occupation texts.
- `WordVectorVectorizer`: mean of pretrained word vectors (word2vec/GloVe text format).
- `PrecomputedVectorizer`: sentence embeddings computed offline and looked up by key.
"""

import json
import logging
import os
import re
from abc import ABC, abstractmethod
from collections.abc import Mapping
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from sklearn.feature_extraction.text import CountVectorizer

from app.modules.errors import DataError, MissingVectorError
from app.modules.vector_models import ProfileVector

logger = logging.getLogger(__name__)

# Maximal alphanumeric runs; underscores split tokens
TOKEN_RUN = re.compile(r"[^\W_]+")
MIN_TOKEN_LENGTH = 2
NO_COVERAGE_WARNING = "no token covered by word vectors"

TokenStream = List[str]

# ==========================================
# TOKENIZATION & BAG OF WORDS
# ==========================================


def tokenize(text: str) -> TokenStream:
    return [t for t in TOKEN_RUN.findall(text.lower()) if len(t) >= MIN_TOKEN_LENGTH]


class Vocabulary(BaseModel):
    model_config = ConfigDict(frozen=True)

    index: Dict[str, int]
    n_range: Tuple[int, int] = (1, 2)

    @model_validator(mode="after")
    def check_bijective(self) -> "Vocabulary":
        if sorted(self.index.values()) != list(range(len(self.index))):
            raise ValueError("Vocabulary indices must be exactly 0..|vocab|-1")
        return self

    def __len__(self) -> int:
        return len(self.index)


def _count_vectorizer(vocabulary: Optional[Dict[str, int]] = None, n_range=(1, 2)) -> CountVectorizer:
    return CountVectorizer(
        tokenizer=tokenize,
        token_pattern=None,
        lowercase=False,
        ngram_range=tuple(n_range),
        vocabulary=vocabulary,
        dtype=np.int64,
    )


def fit_bow(corpus: Sequence[str]) -> Vocabulary:
    """All unigrams and adjacent bigrams of the corpus, indexed in lexicographic order."""
    if not corpus:
        raise DataError("Cannot fit a bag-of-words vocabulary on an empty corpus")
    cv = _count_vectorizer()
    try:
        cv.fit(list(corpus))
    except ValueError as e:
        # sklearn: "empty vocabulary; perhaps the documents only contain stop words"
        raise DataError(f"Corpus yields no tokens of length >= {MIN_TOKEN_LENGTH}: {e}") from e
    index = {term: int(i) for term, i in sorted(cv.vocabulary_.items())}
    return Vocabulary(index=index)


def transform_bow(vocab: Vocabulary, text: str) -> ProfileVector:
    return BowVectorizer(vocab).transform(text)


# ==========================================
# PRETRAINED WORD VECTORS
# ==========================================


class EmbeddingTable(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    vectors: Dict[str, np.ndarray]
    dim: int
    warnings: Dict[str, int] = {}

    @model_validator(mode="after")
    def check_dims(self) -> "EmbeddingTable":
        if self.dim <= 0 or not self.vectors:
            raise ValueError("An embedding table needs at least one vector of positive dimension")
        for token, vec in self.vectors.items():
            if vec.shape != (self.dim,):
                raise ValueError(f"Vector for '{token}' has shape {vec.shape}, expected ({self.dim},)")
        return self

    def __len__(self) -> int:
        return len(self.vectors)


def _is_int(field: str) -> bool:
    try:
        int(field)
        return True
    except ValueError:
        return False


def load_embeddings(path: Union[str, os.PathLike]) -> EmbeddingTable:
    """Reads the word-vector text format: optional `<count> <dim>` header, then `token v1 ... vd` rows."""
    vectors: Dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    header: Optional[Tuple[int, int]] = None
    duplicates = 0

    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            fields = line.split()
            if not fields:
                continue
            if line_no == 1 and len(fields) == 2 and all(_is_int(x) for x in fields):
                header = (int(fields[0]), int(fields[1]))
                continue

            token, raw = fields[0], fields[1:]
            if not raw:
                raise DataError(f"{path}:{line_no}: token '{token}' has no vector values")
            try:
                values = np.array([float(x) for x in raw], dtype=np.float64)
            except ValueError as e:
                raise DataError(f"{path}:{line_no}: unparseable float ({e})") from e
            if not np.all(np.isfinite(values)):
                raise DataError(f"{path}:{line_no}: non-finite value in vector for '{token}'")

            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise DataError(f"{path}:{line_no}: vector has dimension {len(values)}, expected {dim}")

            if token in vectors:
                duplicates += 1
            vectors[token] = values

    if not vectors:
        raise DataError(f"{path}: no word vectors found")
    # The header is informational only; rows decide the table
    warnings = {}
    if header is not None and header[1] != dim:
        logger.warning(f"{path}: header declares dimension {header[1]} but rows have {dim}")
        warnings["header_dim_mismatch"] = 1
    if duplicates:
        logger.warning(f"{path}: {duplicates} duplicate token(s), last occurrence kept")
        warnings["duplicate_tokens"] = duplicates
    if header is not None and header[0] != len(vectors) + duplicates:
        logger.warning(f"{path}: header declares {header[0]} rows, found {len(vectors) + duplicates}")
        warnings["header_count_mismatch"] = 1

    return EmbeddingTable(vectors=vectors, dim=dim, warnings=warnings)


def transform_avg(table: EmbeddingTable, text: str) -> ProfileVector:
    return WordVectorVectorizer(table).transform(text)


# ==========================================
# PRECOMPUTED SENTENCE EMBEDDINGS
# ==========================================


class PrecomputedVectors(Mapping):
    """Read-only key → ProfileVector mapping loaded from JSON Lines."""

    def __init__(self, vectors: Dict[str, np.ndarray], dim: int, source: str = "sentence"):
        self._vectors = vectors
        self.dim = dim
        self.source = source

    def __getitem__(self, key: str) -> ProfileVector:
        try:
            values = self._vectors[key]
        except KeyError:
            raise MissingVectorError(key) from None
        return ProfileVector(values=values, source=self.source)

    def __iter__(self) -> Iterator[str]:
        return iter(self._vectors)

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, key) -> bool:
        return key in self._vectors


def load_precomputed(path: Union[str, os.PathLike]) -> PrecomputedVectors:
    vectors: Dict[str, np.ndarray] = {}
    dim: Optional[int] = None
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                key = row["key"]
                values = np.asarray(row["vector"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise DataError(f"{path}:{line_no}: malformed embedding row: {e}") from e
            if not isinstance(key, str):
                raise DataError(f"{path}:{line_no}: key must be a string")
            if values.ndim != 1 or values.size == 0 or not np.all(np.isfinite(values)):
                raise DataError(f"{path}:{line_no}: vector for '{key}' must be a non-empty list of finite floats")
            if key in vectors:
                raise DataError(f"{path}:{line_no}: duplicate key '{key}' (ambiguous embedding)")
            if dim is None:
                dim = values.size
            elif values.size != dim:
                raise DataError(f"{path}:{line_no}: vector for '{key}' has dimension {values.size}, expected {dim}")
            vectors[key] = values
    if not vectors:
        raise DataError(f"{path}: no embeddings found")
    return PrecomputedVectors(vectors, dim)


# ==========================================
# VECTORIZER INTERFACE
# ==========================================


class Vectorizer(ABC):
    name: str = ""

    @property
    @abstractmethod
    def dim(self) -> int:
        pass

    @abstractmethod
    def transform(self, text: str, key: Optional[str] = None) -> ProfileVector:
        """
        Vectorizes one text. `key` identifies the text for vectorizers that
        look vectors up instead of computing them.
        """
        pass

    def transform_many(self, items: Sequence[Tuple[str, str]]) -> List[ProfileVector]:
        """items: (key, text) tuples."""
        return [self.transform(text, key=key) for key, text in items]


class BowVectorizer(Vectorizer):
    name = "bow"

    def __init__(self, vocab: Vocabulary):
        self.vocab = vocab
        self._cv = _count_vectorizer(vocabulary=vocab.index, n_range=vocab.n_range)

    @classmethod
    def fit(cls, corpus: Sequence[str]) -> "BowVectorizer":
        return cls(fit_bow(corpus))

    @property
    def dim(self) -> int:
        return len(self.vocab)

    def transform(self, text: str, key: Optional[str] = None) -> ProfileVector:
        counts = self._cv.transform([text]).toarray()[0]
        return ProfileVector(values=counts.astype(np.float64), source=self.name)


class WordVectorVectorizer(Vectorizer):
    name = "wordvec"

    def __init__(self, table: EmbeddingTable):
        self.table = table

    @property
    def dim(self) -> int:
        return self.table.dim

    def transform(self, text: str, key: Optional[str] = None) -> ProfileVector:
        covered = [self.table.vectors[t] for t in tokenize(text) if t in self.table.vectors]
        if not covered:
            return ProfileVector(
                values=np.zeros(self.table.dim), source=self.name, warnings=(NO_COVERAGE_WARNING,)
            )
        return ProfileVector(values=np.mean(np.vstack(covered), axis=0), source=self.name)


class PrecomputedVectorizer(Vectorizer):
    name = "sentence"

    def __init__(self, vectors: PrecomputedVectors):
        self.vectors = vectors

    @property
    def dim(self) -> int:
        return self.vectors.dim

    def transform(self, text: str, key: Optional[str] = None) -> ProfileVector:
        if key is None:
            raise DataError("Precomputed embeddings are looked up by key; none was given")
        return self.vectors[key]
