import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import basis, build_store, random_unit_vectors, unit
from memescope.store import cosine
from memescope.vecops import (CombineSpec, DegenerateCombinationError,
                              PairedCorpus, combine, cross_modal_fuse,
                              fuse_pair, recall_at_k, semantic_capture_check)


class TestCombine:
    def test_identity_single_term(self, rng):
        vecs = random_unit_vectors(rng, 1, 16)
        store = build_store(vecs, [0])
        out = combine(CombineSpec([(1, 1.0)]), store)
        assert np.allclose(out, store.vector(1), atol=1e-6)

    def test_equal_weights_orthonormal(self):
        out = combine(CombineSpec([(basis(8, 0), 0.5), (basis(8, 1), 0.5)]))
        expected = np.zeros(8)
        expected[:2] = 1 / np.sqrt(2)
        assert np.allclose(out, expected, atol=1e-12)

    def test_self_cancellation_is_degenerate(self, rng):
        vecs = random_unit_vectors(rng, 1, 16)
        store = build_store(vecs, [0])
        with pytest.raises(DegenerateCombinationError, match="degenerate combination"):
            combine(CombineSpec([(1, 1.0), (1, -1.0)]), store)

    def test_no_renormalize(self):
        out = combine(CombineSpec([(basis(4, 0), 2.0)], renormalize=False))
        assert np.allclose(out, [2, 0, 0, 0])

    def test_empty_or_zero_weights_invalid(self):
        with pytest.raises(ValueError):
            combine(CombineSpec([]))
        with pytest.raises(ValueError):
            combine(CombineSpec([(basis(4, 0), 0.0)]))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 9999), scale=st.floats(0.1, 50.0))
    def test_weight_scaling_keeps_direction(self, seed, scale):
        r = np.random.default_rng(seed)
        a, b = random_unit_vectors(r, 2, 12)
        base = combine(CombineSpec([(a, 0.3), (b, 0.7)]))
        scaled = combine(CombineSpec([(a, 0.3 * scale), (b, 0.7 * scale)]))
        assert cosine(base, scaled) == pytest.approx(1.0, abs=1e-9)

    def test_scaling_preserves_retrieval_argmax(self, rng):
        vecs = random_unit_vectors(rng, 30, 16)
        store = build_store(vecs, [0] * 30)
        base = combine(CombineSpec([(1, 0.5), (2, 0.5)]), store)
        scaled = combine(CombineSpec([(1, 2.5), (2, 2.5)]), store)
        top_base = [h.id for h in store.top_k(base, 5)]
        top_scaled = [h.id for h in store.top_k(scaled, 5)]
        assert top_base == top_scaled


class TestFusePair:
    def _store(self):
        rows = [basis(8, 0), basis(8, 1)]
        return build_store(rows, [0, 1])

    def test_commutative(self, rng):
        vecs = random_unit_vectors(rng, 2, 16)
        store = build_store(vecs, [0, 1])
        fused = fuse_pair(1, 2, store)
        # swap roles: same records presented as (text, image) is invalid, so
        # the commutativity check is over term order inside the combination
        swapped = combine(CombineSpec([(2, 0.5), (1, 0.5)]), store)
        assert cosine(fused, swapped) == pytest.approx(1.0, abs=1e-12)

    def test_identical_vectors_same_direction(self):
        store = build_store([basis(8, 3), basis(8, 3)], [0, 1])
        fused = fuse_pair(1, 2, store)
        assert cosine(fused, basis(8, 3)) == pytest.approx(1.0, abs=1e-9)

    def test_orthonormal_hand_value(self):
        store = self._store()
        fused = fuse_pair(1, 2, store)
        assert cosine(fused, basis(8, 0)) == pytest.approx(0.7071, abs=1e-4)

    def test_modality_checked(self):
        store = self._store()
        with pytest.raises(ValueError, match="not an image"):
            fuse_pair(2, 1, store)


class TestCrossModalFuse:
    def test_same_direction(self):
        v = unit([1, 2, 3, 4])
        out = cross_modal_fuse(v, v)
        assert cosine(out, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthonormal_hand_value(self):
        out = cross_modal_fuse(basis(8, 0), basis(8, 1))
        expected = 0.8 / np.sqrt(0.04 + 0.64)
        assert cosine(out, basis(8, 1)) == pytest.approx(expected, abs=1e-9)
        assert cosine(out, basis(8, 1)) == pytest.approx(0.9701, abs=1e-4)

    def test_default_weights_are_image_point_two_text_point_eight(self):
        from memescope.vecops import CROSS_MODAL_WEIGHTS
        assert CROSS_MODAL_WEIGHTS == (0.2, 0.8)


class TestRecallAtK:
    def _identity_store(self, rng, n=12, dim=16):
        imgs = random_unit_vectors(rng, n, dim)
        vecs = np.vstack([imgs, imgs])  # texts equal their paired images
        store = build_store(vecs, [0] * n + [1] * n)
        pairs = [(i + 1, i + 1 + n) for i in range(n)]
        return store, PairedCorpus(pairs)

    def test_identity_pairs_recall_one(self, rng):
        store, corpus = self._identity_store(rng)
        assert recall_at_k(corpus, 1, store) == 1.0

    def test_k_equal_corpus_size_is_one(self, rng):
        r = np.random.default_rng(7)
        imgs = random_unit_vectors(r, 10, 8)
        texts = random_unit_vectors(r, 10, 8)
        store = build_store(np.vstack([imgs, texts]), [0] * 10 + [1] * 10)
        corpus = PairedCorpus([(i + 1, i + 11) for i in range(10)])
        assert recall_at_k(corpus, 10, store) == 1.0

    def test_monotone_in_k(self):
        for seed in range(100):
            r = np.random.default_rng(seed)
            imgs = random_unit_vectors(r, 8, 6)
            texts = random_unit_vectors(r, 8, 6)
            store = build_store(np.vstack([imgs, texts]), [0] * 8 + [1] * 8)
            corpus = PairedCorpus([(i + 1, i + 9) for i in range(8)])
            accs = [recall_at_k(corpus, k, store) for k in range(1, 9)]
            assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))

    def test_duplicate_image_rejected(self, rng):
        store, corpus = self._identity_store(rng, n=3)
        corpus.pairs.append(corpus.pairs[0])
        with pytest.raises(ValueError, match="duplicate image"):
            recall_at_k(corpus, 1, store)


class TestSemanticCapture:
    def test_planted_midpoint_true_at_k1(self, rng):
        dim = 32
        origin, infl = random_unit_vectors(rng, 2, dim)
        mid = unit(0.5 * origin + 0.5 * infl)
        background = random_unit_vectors(rng, 20, dim)
        rows = np.vstack([[origin], [infl], [mid], background])
        store = build_store(rows, [0] * len(rows))
        assert semantic_capture_check(1, 2, 3, store, k=1)

    def test_orthogonal_ground_truth_false(self, rng):
        dim = 64
        origin, infl = basis(dim, 0), basis(dim, 1)
        truth = basis(dim, 2)
        # dense corpus of vectors near the true midpoint outranks the truth
        near = unit(0.5 * origin + 0.5 * infl)
        fillers = [unit(near + 0.01 * random_unit_vectors(rng, 1, dim)[0])
                   for _ in range(10)]
        rows = np.vstack([[origin], [infl], [truth], fillers])
        store = build_store(rows, [0] * len(rows))
        assert not semantic_capture_check(1, 2, 3, store, k=3)

    def test_ten_planted_pairs_all_captured(self, rng):
        dim = 48
        rows, triples = [], []
        background = random_unit_vectors(rng, 30, dim)
        rid = 1
        for _ in range(10):
            origin, infl = random_unit_vectors(rng, 2, dim)
            mid = unit(0.5 * origin + 0.5 * infl)
            rows.extend([origin, infl, mid])
            triples.append((rid, rid + 1, rid + 2))
            rid += 3
        rows.extend(background)
        store = build_store(np.asarray(rows), [0] * len(rows))
        captured = sum(semantic_capture_check(o, i, g, store, k=3)
                       for o, i, g in triples)
        assert captured == 10
