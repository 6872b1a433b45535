import logging
from typing import Dict

from app.modules.config_models import VECTORIZER_NAMES, RunConfig
from app.modules.errors import ConfigError
from app.modules.models import Taxonomy
from app.modules.vectorizers import (
    BowVectorizer,
    PrecomputedVectorizer,
    Vectorizer,
    WordVectorVectorizer,
    load_embeddings,
    load_precomputed,
)

logger = logging.getLogger(__name__)


class VectorizerService:
    """Fits or loads each vectorizer once per run."""

    def __init__(self, config: RunConfig, taxonomy: Taxonomy):
        self.config = config
        self.taxonomy = taxonomy
        self._cache: Dict[str, Vectorizer] = {}

    def get(self, name: str) -> Vectorizer:
        if name not in self._cache:
            self._cache[name] = self._build(name)
        return self._cache[name]

    def _build(self, name: str) -> Vectorizer:
        if name == "bow":
            # Vocabulary comes from the whole taxonomy, not from training pairs
            corpus = [self.taxonomy.occupations[c].skill_text for c in self.taxonomy.codes]
            vectorizer = BowVectorizer.fit(corpus)
            logger.info(f"Fitted bag-of-words vocabulary: {vectorizer.dim} n-grams")
            return vectorizer
        if name == "wordvec":
            if self.config.embeddings_file is None:
                raise ConfigError("The wordvec vectorizer needs embeddings_file")
            table = load_embeddings(self.config.embeddings_file)
            logger.info(f"Loaded {len(table)} word vectors of dimension {table.dim}")
            return WordVectorVectorizer(table)
        if name == "sentence":
            if self.config.precomputed_file is None:
                raise ConfigError("The sentence vectorizer needs precomputed_file")
            vectors = load_precomputed(self.config.precomputed_file)
            logger.info(f"Loaded {len(vectors)} precomputed sentence vectors of dimension {vectors.dim}")
            return PrecomputedVectorizer(vectors)
        raise ConfigError(f"Unknown vectorizer '{name}'; choose from {list(VECTORIZER_NAMES)}")
