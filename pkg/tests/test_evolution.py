import numpy as np
import pytest

from conftest import basis, build_store, random_unit_vectors, unit
from memescope.evolution import (PRESETS, EntityCategory, EntityInfluencer,
                                 EvolutionThresholds, entity_variants,
                                 false_positive_rates, find_influencers,
                                 find_variants, sweep)

def planted_band_store(rng, sims, dim=64):
    """Origin at id 1; candidates planted at exact cosines to it."""
    origin = basis(dim, 0)
    rows = [origin]
    for i, s in enumerate(sims):
        rows.append(unit(s * origin + np.sqrt(1 - s * s) * basis(dim, i + 1)))
    return build_store(rows, [0] * len(rows))


class TestPresets:
    def test_happy_merchant_band(self):
        t = PRESETS["happy-merchant"]
        assert (t.variant_lo, t.variant_hi) == (0.85, 0.91)
        assert t.mask_hi == 0.91
        assert t.triplet_accept_lo == 0.94

    def test_pepe_band(self):
        t = PRESETS["pepe"]
        assert (t.variant_lo, t.variant_hi) == (0.93, 0.95)
        assert t.mask_hi == 0.96
        assert t.triplet_accept_lo == 0.89

    def test_mask_defaults_to_variant_hi(self):
        t = EvolutionThresholds(variant_lo=0.5, variant_hi=0.8)
        assert t.mask_hi == 0.8

    def test_invalid_thresholds(self):
        with pytest.raises(ValueError):
            EvolutionThresholds(variant_lo=0.9, variant_hi=0.8)
        with pytest.raises(ValueError):
            EvolutionThresholds(variant_lo=0.1, variant_hi=0.2,
                                triplet_accept_lo=0.0)


class TestFindVariants:
    def test_planted_band_membership(self, rng):
        store = planted_band_store(rng, [0.86, 0.90, 0.92])
        t = EvolutionThresholds(variant_lo=0.85, variant_hi=0.91)
        hits = find_variants(1, t, store)
        assert [h.id for h in hits] == [3, 2]  # sorted by score desc

    def test_origin_excluded(self, rng):
        store = planted_band_store(rng, [0.88])
        t = EvolutionThresholds(variant_lo=0.5, variant_hi=1.0)
        assert 1 not in {h.id for h in find_variants(1, t, store)}

    def test_text_origin_rejected(self, rng):
        store = build_store(random_unit_vectors(rng, 2, 8), [1, 0])
        with pytest.raises(ValueError, match="not an image"):
            find_variants(1, EvolutionThresholds(0.5, 0.9), store)


class TestFindInfluencers:
    def setup_planted(self, rng, dim=128, noise=0.0, background=40):
        origin, infl = random_unit_vectors(rng, 2, dim)
        variant = unit(0.5 * origin + 0.5 * infl)
        if noise:
            variant = unit(variant + noise * random_unit_vectors(rng, 1, dim)[0])
        rows = [origin, variant, infl]
        rows.extend(random_unit_vectors(rng, background, dim))
        store = build_store(np.asarray(rows), [0] * (background + 3))
        return store  # origin=1, variant=2, influencer=3

    def test_planted_influencer_ranked_first(self, rng):
        store = self.setup_planted(rng, noise=0.01)
        t = EvolutionThresholds(variant_lo=0.5, variant_hi=0.95,
                                influencer_mask_hi=0.9, triplet_accept_lo=0.94)
        result = find_influencers(1, 2, t, store)
        assert result.triplets[0].influencer_id == 3
        assert result.triplets[0].influencer_rank == 1
        assert result.triplets[0].sim_sum_variant >= 0.94

    def test_candidate_identical_to_variant_masked(self, rng):
        store = self.setup_planted(rng)
        dup = store.vector(2).copy()
        rows = np.vstack([store.vectors, [dup]])
        ids = list(int(i) for i in store.ids) + [99]
        store2 = build_store(rows, [0] * len(rows), ids=ids)
        t = EvolutionThresholds(variant_lo=0.5, variant_hi=0.95,
                                influencer_mask_hi=0.91, triplet_accept_lo=0.1)
        result = find_influencers(1, 2, t, store2)
        assert 99 not in {x.influencer_id for x in result.triplets}

    def test_no_candidate_survives_masking(self, rng):
        origin, infl = random_unit_vectors(rng, 2, 32)
        variant = unit(0.5 * origin + 0.5 * infl)
        store = build_store([origin, variant, variant], [0, 0, 0])
        t = EvolutionThresholds(variant_lo=0.1, variant_hi=0.99,
                                influencer_mask_hi=0.5, triplet_accept_lo=0.5)
        result = find_influencers(1, 2, t, store)
        assert result.triplets == []
        assert result.reason == "no candidate survives masking"

    def test_below_accept_threshold_discarded(self, rng):
        store = self.setup_planted(rng)
        t = EvolutionThresholds(variant_lo=0.5, variant_hi=0.95,
                                influencer_mask_hi=0.9, triplet_accept_lo=0.999999)
        result = find_influencers(1, 2, t, store)
        ids = {x.influencer_id for x in result.triplets}
        assert ids in (set(), {3})
        for x in result.triplets:
            assert x.sim_sum_variant >= 0.999999

    def test_matches_brute_force_oracle(self, rng):
        store = self.setup_planted(rng, background=200)
        t = EvolutionThresholds(variant_lo=0.2, variant_hi=0.95,
                                influencer_mask_hi=0.95, triplet_accept_lo=0.0001,
                                k=10)
        result = find_influencers(1, 2, t, store)

        variant_vec = store.vector(2).astype(np.float64)
        origin_vec = store.vector(1).astype(np.float64)
        scored = []
        for rid in store.ids:
            rid = int(rid)
            if rid in (1, 2):
                continue
            c = store.vector(rid).astype(np.float64)
            if float(c @ variant_vec) > t.mask_hi:
                continue
            s = origin_vec + c
            scored.append((rid, float(s @ variant_vec / np.linalg.norm(s))))
        scored.sort(key=lambda r: (-r[1], r[0]))
        expected = [rid for rid, s in scored[:10] if s >= t.triplet_accept_lo]
        assert [x.influencer_id for x in result.triplets] == expected


class TestEntityVariants:
    def build(self, rng, dim=64):
        origin = basis(dim, 0)
        entity_text = basis(dim, 1)
        fused = unit(0.2 * origin + 0.8 * entity_text)
        near = unit(fused + 0.05 * basis(dim, 2))        # rank 1
        far = unit(fused + 0.12 * basis(dim, 3))         # rank 2
        rows = [origin, near, far, entity_text]
        rows.extend(random_unit_vectors(rng, 10, dim))
        mods = [0, 0, 0, 1] + [0] * 10
        return build_store(np.asarray(rows), mods)

    def _entity(self):
        return EntityInfluencer("nazi", EntityCategory.NORP, text_id=4)

    def test_popularity_beats_similarity(self, rng):
        store = self.build(rng)
        popularity = {2: 3, 3: 7}
        out = entity_variants(1, [self._entity()], store, popularity, k=2)
        assert out[0].variant_id == 3
        assert out[0].post_count == 7

    def test_tie_goes_to_higher_similarity(self, rng):
        store = self.build(rng)
        out = entity_variants(1, [self._entity()], store, {2: 3, 3: 3}, k=2)
        assert out[0].variant_id == 2

    def test_single_eligible_image(self, rng):
        dim = 16
        origin, entity_text = basis(dim, 0), basis(dim, 1)
        only = unit(0.2 * origin + 0.8 * entity_text)
        store = build_store([origin, only, entity_text], [0, 0, 1])
        out = entity_variants(1, [EntityInfluencer("x", EntityCategory.GPE, 3)],
                              store, {}, k=2)
        assert out[0].variant_id == 2

    def test_order_independence(self, rng):
        store = self.build(rng)
        e1 = self._entity()
        e2 = EntityInfluencer("germany", EntityCategory.GPE, text_id=4)
        a = entity_variants(1, [e1, e2], store, {2: 1, 3: 9}, k=2)
        b = entity_variants(1, [e2, e1], store, {2: 1, 3: 9}, k=2)
        assert {(v.entity.surface, v.variant_id) for v in a} == \
            {(v.entity.surface, v.variant_id) for v in b}


class TestSweep:
    def test_fifteen_sheets(self, rng):
        store = planted_band_store(rng, [0.82, 0.86, 0.90, 0.94])
        sheets = sweep(1, store, lo_from=0.81, lo_to=0.95, step=0.01, seed=4)
        assert len(sheets) == 15
        assert sheets[0].threshold == 0.81
        assert sheets[-1].threshold == 0.95

    def test_small_bucket_fully_sampled(self, rng):
        store = planted_band_store(rng, [0.855, 0.852, 0.858, 0.851, 0.856])
        sheets = sweep(1, store, lo_from=0.85, lo_to=0.85, step=0.01,
                       sample_n=16, seed=0)
        assert len(sheets) == 1
        assert len(sheets[0].sample_ids) == 5

    def test_seed_determinism(self, rng):
        sims = list(np.linspace(0.811, 0.949, 60))
        store = planted_band_store(rng, sims, dim=128)
        a = sweep(1, store, seed=11)
        b = sweep(1, store, seed=11)
        assert [s.sample_ids for s in a] == [s.sample_ids for s in b]

    def test_fp_rates(self, rng):
        store = planted_band_store(rng, [0.815, 0.816, 0.817])
        sheets = sweep(1, store, lo_from=0.81, lo_to=0.82, step=0.01, seed=0)
        labels = {2: "fp", 3: "tp", 4: "fp"}
        rates = false_positive_rates(sheets, labels)
        first = rates[0]
        assert first["labeled"] == 3
        assert first["false_positive_pct"] == pytest.approx(100 * 2 / 3)

    def test_fp_rates_rejects_bad_labels(self, rng):
        store = planted_band_store(rng, [0.815])
        sheets = sweep(1, store, lo_from=0.81, lo_to=0.82, step=0.01)
        with pytest.raises(ValueError, match="tp or fp"):
            false_positive_rates(sheets, {2: "yes"})
