import unittest
import os
import sys
from itertools import product

import numpy as np
from hypothesis import assume, given, settings, strategies as st

# Add project root to path
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from helpers import axis_pairs, two_cluster_taxonomy
from app.modules.itml import constraint_satisfaction, train_itml
from app.modules.pca import pca2
from app.modules.scoring import COSINE, EUCLIDEAN, MahalanobisMetric, MatchModel, MetricModel, score_pair
from app.modules.statistics import auc_from_scores, pearson
from app.modules.config_models import ItmlConfig
from app.modules.vector_models import ProfileVector, VectorizedPairs
from app.modules.vectorizers import BowVectorizer, fit_bow, tokenize, transform_bow
from app.services.evaluation_service import gsr_audit, top_k_neighbors

# Small integer grid so that ties are common
tied_scores = st.lists(st.integers(-5, 5).map(float), min_size=1, max_size=25)


def brute_force_auc(good, bad) -> float:
    wins = sum(1.0 if g > b else 0.5 if g == b else 0.0 for g, b in product(good, bad))
    return wins / (len(good) * len(bad))


def profile_vectors(matrix: np.ndarray) -> dict:
    return {f"c{i:02d}": ProfileVector(values=row, source="test") for i, row in enumerate(matrix)}


class ShiftedModel(MatchModel):
    """Applies a strictly increasing transform on top of another model's scores."""

    def __init__(self, base: MatchModel, transform):
        self.base = base
        self.transform = transform
        self.name = base.name

    def embed(self, X):
        return self.base.embed(X)

    def score_embedded(self, query, candidates):
        return self.transform(self.base.score_embedded(query, candidates))

    def is_degenerate(self, a, b):
        return self.base.is_degenerate(a, b)


class TestAucProperties(unittest.TestCase):
    @settings(max_examples=200, deadline=None)
    @given(tied_scores, tied_scores)
    def test_rank_formula_equals_pair_count(self, good, bad):
        self.assertAlmostEqual(auc_from_scores(good, bad), brute_force_auc(good, bad), delta=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(tied_scores, tied_scores)
    def test_label_swap(self, good, bad):
        self.assertAlmostEqual(auc_from_scores(bad, good), 1.0 - auc_from_scores(good, bad), delta=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.integers(1, 9).map(float), min_size=1, max_size=25),
           st.lists(st.integers(1, 9).map(float), min_size=1, max_size=25))
    def test_monotone_transforms(self, good, bad):
        base = auc_from_scores(good, bad)
        for transform in (lambda x: 2 * x + 7, lambda x: x ** 3):
            moved = auc_from_scores([transform(x) for x in good], [transform(x) for x in bad])
            self.assertAlmostEqual(moved, base, delta=1e-12)


class TestPearsonProperties(unittest.TestCase):
    @settings(max_examples=100, deadline=None)
    @given(
        st.lists(st.floats(-100, 100, allow_nan=False), min_size=3, max_size=30),
        st.floats(0.1, 10), st.floats(-10, 10), st.floats(0.1, 10), st.floats(-10, 10),
        st.integers(0, 2 ** 32 - 1),
    )
    def test_positive_affine_invariance(self, xs, a, b, c, d, seed):
        x = np.array(xs)
        y = np.random.default_rng(seed).standard_normal(x.size)
        assume(np.ptp(x) >= 1.0)
        r = pearson(x, y)
        self.assertAlmostEqual(pearson(a * x + b, c * y + d), r, delta=1e-12)
        self.assertTrue(-1.0 <= r <= 1.0)


class TestTopKProperties(unittest.TestCase):
    @settings(max_examples=100, deadline=None)
    @given(
        st.integers(2, 40), st.integers(1, 16), st.integers(1, 12),
        st.sampled_from(["cosine", "euclidean", "metric"]), st.integers(0, 2 ** 32 - 1),
    )
    def test_matches_full_sort_oracle(self, n, dim, k, model_name, seed):
        rng = np.random.default_rng(seed)
        matrix = rng.integers(-2, 3, size=(n, dim)).astype(float)
        # Duplicate some rows to force ties
        for i in range(0, n - 1, 3):
            matrix[i + 1] = matrix[i]
        if model_name == "cosine":
            model = COSINE
        elif model_name == "euclidean":
            model = EUCLIDEAN
        else:
            A = rng.standard_normal((dim, dim))
            model = MetricModel(MahalanobisMetric((A @ A.T + (A @ A.T).T) / 2))

        profiles = profile_vectors(matrix)
        for query in sorted(profiles)[:5]:
            others = [c for c in profiles if c != query]
            oracle = sorted(others, key=lambda c: (-score_pair(model, profiles[query], profiles[c]).value, c))[:k]
            self.assertEqual(top_k_neighbors(query, profiles, model, k), oracle)

    def test_identity_metric_ranks_like_euclidean(self):
        rng = np.random.default_rng(8)
        profiles = profile_vectors(rng.standard_normal((25, 6)))
        identity = MetricModel(MahalanobisMetric(np.eye(6)))
        for query in profiles:
            self.assertEqual(top_k_neighbors(query, profiles, identity, 10),
                             top_k_neighbors(query, profiles, EUCLIDEAN, 10))


class TestScoringProperties(unittest.TestCase):
    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
    def test_symmetry_and_self_maximality(self, dim, seed):
        rng = np.random.default_rng(seed)
        a, b = rng.standard_normal(dim), rng.standard_normal(dim)
        A = rng.standard_normal((dim, dim))
        metric_model = MetricModel(MahalanobisMetric((A @ A.T + (A @ A.T).T) / 2))
        for model in (COSINE, EUCLIDEAN, metric_model):
            self.assertAlmostEqual(score_pair(model, a, b).value, score_pair(model, b, a).value, delta=1e-9)
        for model in (EUCLIDEAN, metric_model):
            self.assertGreaterEqual(score_pair(model, a, a).value, score_pair(model, a, b).value)
            self.assertLessEqual(score_pair(model, a, b).value, 0.0)
        self.assertGreaterEqual(score_pair(COSINE, a, a).value + 1e-12, score_pair(COSINE, a, b).value)


class TestBowProperties(unittest.TestCase):
    words = st.lists(st.sampled_from(["repair", "small", "engines", "drive", "trucks", "cook"]), min_size=1, max_size=6)

    @settings(max_examples=100, deadline=None)
    @given(words, words)
    def test_concatenation_dominates_unigrams(self, first, second):
        s1, s2 = " ".join(first), " ".join(second)
        vocab = fit_bow([s1, s2])
        v1, v2, v12 = (transform_bow(vocab, s).values for s in (s1, s2, f"{s1} {s2}"))
        for term, i in vocab.index.items():
            if " " not in term:
                self.assertGreaterEqual(v12[i], max(v1[i], v2[i]))

    @settings(max_examples=50, deadline=None)
    @given(st.text(max_size=40))
    def test_tokenize_is_deterministic_and_clean(self, text):
        tokens = tokenize(text)
        self.assertEqual(tokens, tokenize(text))
        self.assertTrue(all(len(t) >= 2 and t.strip() == t for t in tokens))


class TestItmlProperties(unittest.TestCase):
    def test_separable_axis_set(self):
        pairs = axis_pairs([1.0] * 48 + [3.0] * 2, [3.0] * 48 + [1.0] * 2)
        failures = []

        def check_sweep(sweep, M, lambdas):
            if np.max(np.abs(M - M.T)) > 1e-9:
                failures.append(f"sweep {sweep}: asymmetric")
            if np.linalg.eigvalsh(M)[0] < -1e-8:
                failures.append(f"sweep {sweep}: not PSD")
            if lambdas.min() < 0:
                failures.append(f"sweep {sweep}: negative slack")

        metric = train_itml(pairs, on_sweep=check_sweep)
        self.assertEqual(failures, [])
        self.assertTrue(metric.is_symmetric())
        self.assertTrue(metric.is_psd())
        self.assertGreaterEqual(constraint_satisfaction(metric, pairs), 0.95)
        self.assertGreater(metric.matrix[0][0], metric.matrix[1][1])

    @settings(max_examples=20, deadline=None)
    @given(st.integers(2, 4), st.integers(0, 2 ** 32 - 1))
    def test_random_sets_stay_psd(self, dim, seed):
        rng = np.random.default_rng(seed)
        left = rng.standard_normal((30, dim))
        good = np.arange(30) < 15
        scale = np.where(good, 0.3, 2.0)[:, None]
        right = left + scale * rng.standard_normal((30, dim))
        metric = train_itml(VectorizedPairs(left=left, right=right, good=good), ItmlConfig(max_iter=50))
        self.assertTrue(metric.is_symmetric())
        self.assertTrue(metric.is_psd())


class TestGsrProperties(unittest.TestCase):
    def test_gsr_unchanged_under_monotone_score_transforms(self):
        taxonomy = two_cluster_taxonomy(n_per_cluster=8)
        vectorizer = BowVectorizer.fit([taxonomy.occupations[c].skill_text for c in taxonomy.codes])
        base = gsr_audit(taxonomy, vectorizer, EUCLIDEAN, seed=5)
        # Euclidean scores are <= 0; shift to positive before cubing
        for transform in (lambda s: 2 * s + 7, lambda s: (s + 1000.0) ** 3):
            moved = gsr_audit(taxonomy, vectorizer, ShiftedModel(EUCLIDEAN, transform), seed=5)
            self.assertEqual(moved.gsr, base.gsr)
            self.assertEqual([r.top_codes for r in moved.records], [r.top_codes for r in base.records])


class TestPcaProperties(unittest.TestCase):
    @settings(max_examples=100, deadline=None)
    @given(st.integers(3, 20), st.integers(2, 8), st.integers(0, 2 ** 32 - 1))
    def test_ordering_centering_orthonormality(self, n, dim, seed):
        rng = np.random.default_rng(seed)
        projection = pca2(profile_vectors(rng.standard_normal((n, dim))))
        var_x, var_y = projection.explained_variance
        self.assertGreaterEqual(var_x, var_y)
        self.assertGreaterEqual(var_y, 0.0)

        xs = np.array([r.x for r in projection.rows])
        ys = np.array([r.y for r in projection.rows])
        self.assertLess(abs(xs.mean()), 1e-9)
        self.assertLess(abs(ys.mean()), 1e-9)

        c1, c2 = (np.array(c) for c in projection.components)
        self.assertAlmostEqual(np.linalg.norm(c1), 1.0, delta=1e-9)
        self.assertAlmostEqual(np.linalg.norm(c2), 1.0, delta=1e-9)
        self.assertAlmostEqual(float(c1 @ c2), 0.0, delta=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(3, 15), st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
    def test_rank_two_distances_preserved(self, n, dim, seed):
        rng = np.random.default_rng(seed)
        plane = rng.standard_normal((n, 2))
        basis, _ = np.linalg.qr(rng.standard_normal((dim, 2)))
        points = plane @ basis.T + rng.standard_normal(dim)
        projection = pca2(profile_vectors(points))
        projected = np.array([[r.x, r.y] for r in projection.rows])
        codes = [r.code for r in projection.rows]
        original = np.vstack([points[int(c[1:])] for c in codes])
        for i in range(n):
            for j in range(i + 1, n):
                self.assertAlmostEqual(
                    np.linalg.norm(projected[i] - projected[j]),
                    np.linalg.norm(original[i] - original[j]),
                    delta=1e-8,
                )


if __name__ == "__main__":
    unittest.main()
