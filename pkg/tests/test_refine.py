from __future__ import annotations

import random

import pytest

from geoscene.errors import CrossSceneMerge, MissingPredicate
from geoscene.model import Triplet, TripletSource
from geoscene.refine import (
    RefineConfig,
    compute_geo_triplets,
    geo_triplet_score,
    merge_triplets,
    merge_triplets_with_stats,
    refine_scene_graph,
    refine_with_stats,
)

from _oracles import oracle_merge
from conftest import make_scene

CFG = RefineConfig()

# two boxes side by side: (0,1) is RIGHT/NEAR, (1,0) is LEFT/NEAR
SIDE_BY_SIDE = [(0, 0, 100, 80), (60, 0, 160, 80)]
# subject above object in image coordinates: (0,1) is DOWN
STACKED = [(0, 0, 10, 10), (0, 20, 10, 30)]


def geo_for(scene, vocab, cfg=CFG):
    return compute_geo_triplets(scene, cfg, vocab)


class TestComputeGeoTriplets:
    def test_two_objects_four_triplets(self, ext_vocab):
        scene = make_scene(SIDE_BY_SIDE)
        assert len(geo_for(scene, ext_vocab)) == 4

    def test_single_object_empty(self, ext_vocab):
        scene = make_scene([(0, 0, 10, 10)])
        assert geo_for(scene, ext_vocab) == []

    def test_five_objects_forty_triplets(self, ext_vocab):
        # brute-force pair enumeration: N(N-1) ordered pairs, two relations each
        boxes = [(i * 30.0, 0, i * 30.0 + 10, 10) for i in range(5)]
        scene = make_scene(boxes)
        n = len(boxes)
        expected = sum(
            2 for i in range(n) for j in range(n) if i != j
        )
        assert expected == 40
        assert len(geo_for(scene, ext_vocab)) == expected

    def test_coincident_centroids_emit_proximity_only(self, ext_vocab):
        scene = make_scene([(0, 0, 10, 10), (2, 2, 8, 8)])
        triplets = geo_for(scene, ext_vocab)
        assert len(triplets) == 2
        near = ext_vocab.index_of("near")
        assert all(t.predicate == near for t in triplets)

    def test_scores_derived_from_min_model_score(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        scene = make_scene(
            SIDE_BY_SIDE,
            triplets=[Triplet(0, riding, 1, 0.8), Triplet(1, riding, 0, 0.4)],
        )
        assert geo_triplet_score(scene, CFG) == pytest.approx(0.5 * 0.4)
        assert all(t.score == pytest.approx(0.2) for t in geo_for(scene, ext_vocab))

    def test_default_base_without_model_triplets(self, ext_vocab):
        scene = make_scene(SIDE_BY_SIDE)
        assert geo_triplet_score(scene, CFG) == pytest.approx(0.25)

    def test_missing_predicate(self, vocab):
        # the base vocabulary lacks far/left/right
        scene = make_scene(SIDE_BY_SIDE)
        with pytest.raises(MissingPredicate):
            compute_geo_triplets(scene, CFG, vocab)

    def test_canonical_names_work_without_aliases(self):
        from geoscene.model import PredicateVocabulary, RelationCategory

        g = RelationCategory.GEOMETRIC
        bare = PredicateVocabulary(
            tuple((n, g) for n in ("near", "far", "above", "under", "left", "right"))
        )
        triplets = compute_geo_triplets(make_scene(STACKED), CFG, bare)
        names = {bare.name_of(t.predicate) for t in triplets}
        assert names == {"far", "under", "above"}

    def test_direction_only_when_disabled_proximity(self, ext_vocab):
        cfg = RefineConfig(emit_proximity=False)
        triplets = compute_geo_triplets(make_scene(SIDE_BY_SIDE), cfg, ext_vocab)
        names = {ext_vocab.name_of(t.predicate) for t in triplets}
        assert names == {"left", "right"}


class TestMergePolicy:
    def test_rule_a_empty_model(self, ext_vocab):
        scene = make_scene(SIDE_BY_SIDE)
        geo = geo_for(scene, ext_vocab)
        merged = merge_triplets([], geo, CFG, ext_vocab)
        assert set(merged) == set(geo)

    def test_rule_c_suppresses_confident_semantic_pair(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        model = [Triplet(0, riding, 1, 0.9)]
        scene = make_scene(SIDE_BY_SIDE, triplets=model)
        geo = geo_for(scene, ext_vocab)
        merged, stats = merge_triplets_with_stats(model, geo, CFG, ext_vocab)
        pairs_01 = [t for t in merged if t.pair == (0, 1)]
        assert pairs_01 == model
        assert stats.suppressed == 2
        # the reverse pair still gains its geometric triplets
        assert len([t for t in merged if t.pair == (1, 0)]) == 2

    def test_rule_c_threshold_is_inclusive(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        model = [Triplet(0, riding, 1, CFG.suppress_threshold)]
        geo = geo_for(make_scene(SIDE_BY_SIDE, triplets=model), ext_vocab)
        merged = merge_triplets(model, geo, CFG, ext_vocab)
        assert [t for t in merged if t.pair == (0, 1)] == model

    def test_weak_semantic_does_not_suppress(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        model = [Triplet(0, riding, 1, 0.69)]
        geo = geo_for(make_scene(SIDE_BY_SIDE, triplets=model), ext_vocab)
        merged = merge_triplets(model, geo, CFG, ext_vocab)
        assert len([t for t in merged if t.pair == (0, 1)]) == 3

    def test_rule_b_replaces_conflicting_weak_direction(self, ext_vocab):
        above = ext_vocab.index_of("above")
        under = ext_vocab.index_of("under")
        model = [Triplet(0, above, 1, 0.2)]
        scene = make_scene(STACKED, triplets=model)  # computed direction: DOWN -> under
        geo = geo_for(scene, ext_vocab)
        merged, stats = merge_triplets_with_stats(model, geo, CFG, ext_vocab)
        predicates = {t.predicate for t in merged if t.pair == (0, 1)}
        assert under in predicates
        assert above not in predicates
        assert stats.replaced == 1

    def test_rule_b_needs_low_score(self, ext_vocab):
        above = ext_vocab.index_of("above")
        model = [Triplet(0, above, 1, 0.5)]  # 0.5 >= conflict threshold: kept
        scene = make_scene(STACKED, triplets=model)
        merged = merge_triplets(model, geo_for(scene, ext_vocab), CFG, ext_vocab)
        assert any(t.predicate == above for t in merged)

    def test_alias_agreement_is_not_a_conflict(self, ext_vocab):
        # object 1 sits above subject 0 -> computed bucket TOP -> canonical "above"
        above = ext_vocab.index_of("above")
        model = [Triplet(1, above, 0, 0.1)]
        scene = make_scene(STACKED, triplets=model)
        merged = merge_triplets(model, geo_for(scene, ext_vocab), CFG, ext_vocab)
        assert model[0] in merged

    def test_non_bucket_geometric_predicate_never_replaced(self, ext_vocab):
        behind = ext_vocab.index_of("behind")
        model = [Triplet(0, behind, 1, 0.05)]
        scene = make_scene(STACKED, triplets=model)
        merged = merge_triplets(model, geo_for(scene, ext_vocab), CFG, ext_vocab)
        assert model[0] in merged

    def test_duplicate_geo_dropped(self, ext_vocab):
        near = ext_vocab.index_of("near")
        model = [Triplet(0, near, 1, 0.9)]
        scene = make_scene(SIDE_BY_SIDE, triplets=model)
        merged = merge_triplets(model, geo_for(scene, ext_vocab), CFG, ext_vocab)
        near_01 = [t for t in merged if t.pair == (0, 1) and t.predicate == near]
        assert near_01 == model

    def test_cross_scene_merge_detected(self, ext_vocab):
        near = ext_vocab.index_of("near")
        with pytest.raises(CrossSceneMerge):
            merge_triplets(
                [Triplet(5, near, 6, 0.5)], [], CFG, ext_vocab, valid_ids={0, 1}
            )

    def test_output_sorted_and_permutation_invariant(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        near = ext_vocab.index_of("near")
        model = [
            Triplet(0, riding, 1, 0.4),
            Triplet(1, near, 0, 0.6),
            Triplet(0, near, 1, 0.4),
        ]
        scene = make_scene(SIDE_BY_SIDE, triplets=model)
        geo = geo_for(scene, ext_vocab)
        merged = merge_triplets(model, geo, CFG, ext_vocab)
        shuffled = merge_triplets(model[::-1], geo[::-1], CFG, ext_vocab)
        assert merged == shuffled
        assert [t.score for t in merged] == sorted((t.score for t in merged), reverse=True)


class TestRefineSceneGraph:
    def test_empty_model_two_objects(self, ext_vocab):
        refined = refine_scene_graph(make_scene(SIDE_BY_SIDE), CFG, ext_vocab)
        assert len(refined.triplets) == 4
        assert all(t.source is TripletSource.GEOMETRIC for t in refined.triplets)

    def test_idempotent(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        scene = make_scene(
            SIDE_BY_SIDE + [(300, 300, 400, 380)],
            triplets=[Triplet(0, riding, 1, 0.9), Triplet(2, riding, 0, 0.1)],
        )
        once = refine_scene_graph(scene, CFG, ext_vocab)
        twice = refine_scene_graph(once, CFG, ext_vocab)
        assert set(once.triplets) == set(twice.triplets)

    def test_objects_and_boxes_untouched(self, ext_vocab):
        scene = make_scene(SIDE_BY_SIDE)
        refined = refine_scene_graph(scene, CFG, ext_vocab)
        assert refined.objects == scene.objects
        assert refined.image_id == scene.image_id

    def test_never_removes_non_geometric_model_triplet(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        holding = ext_vocab.index_of("holding")
        model = [Triplet(0, riding, 1, 0.05), Triplet(1, holding, 0, 0.95)]
        scene = make_scene(SIDE_BY_SIDE, triplets=model)
        refined = refine_scene_graph(scene, CFG, ext_vocab)
        for t in model:
            assert t in refined.triplets

    def test_woman_motorcycle_narrative(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        scene = make_scene(
            SIDE_BY_SIDE,
            labels=["woman", "motorcycle"],
            triplets=[Triplet(0, riding, 1, 0.9)],
        )
        refined, stats = refine_with_stats(scene, CFG, ext_vocab)
        by_pair = {}
        for t in refined.triplets:
            by_pair.setdefault(t.pair, []).append(t)
        assert [t.predicate for t in by_pair[(0, 1)]] == [riding]
        assert len(by_pair[(1, 0)]) == 2
        assert stats.suppressed == 2

    def test_every_pair_covered_unless_suppressed(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        boxes = SIDE_BY_SIDE + [(500, 500, 600, 580)]
        scene = make_scene(boxes, triplets=[Triplet(0, riding, 1, 0.9)])
        refined = refine_scene_graph(scene, CFG, ext_vocab)
        covered = {t.pair for t in refined.triplets}
        all_pairs = {(i, j) for i in range(3) for j in range(3) if i != j}
        assert covered == all_pairs  # (0,1) kept via the model's own triplet

    def test_rank_safety_without_replacements(self, ext_vocab):
        riding = ext_vocab.index_of("riding")
        wearing = ext_vocab.index_of("wearing")
        model = [Triplet(0, riding, 1, 0.6), Triplet(1, wearing, 0, 0.35)]
        scene = make_scene(SIDE_BY_SIDE, triplets=model)
        refined, stats = refine_with_stats(scene, CFG, ext_vocab)
        assert stats.replaced == 0
        assert list(refined.triplets[: len(model)]) == sorted(
            model, key=lambda t: -t.score
        )


def _random_policy_fixture(rng, ext_vocab):
    n = rng.randint(2, 4)
    boxes = []
    for _ in range(n):
        x, y = rng.randint(0, 500), rng.randint(0, 500)
        boxes.append((x, y, x + rng.randint(5, 200), y + rng.randint(5, 200)))
    names = ["near", "far", "above", "under", "left", "right", "riding", "holding",
             "behind", "wearing", "has"]
    triplets = []
    for _ in range(rng.randint(0, 6)):
        s, o = rng.sample(range(n), 2)
        predicate = ext_vocab.index_of(rng.choice(names))
        triplets.append(Triplet(s, predicate, o, round(rng.random(), 3)))
    return make_scene(boxes, triplets=triplets)


class TestPolicyOracle:
    def test_merge_agrees_with_independent_policy_table(self, ext_vocab):
        rng = random.Random(20240817)
        for _ in range(150):
            scene = _random_policy_fixture(rng, ext_vocab)
            geo = compute_geo_triplets(scene, CFG, ext_vocab)
            merged = merge_triplets(list(scene.triplets), geo, CFG, ext_vocab)
            expected = oracle_merge(list(scene.triplets), geo, CFG, ext_vocab)
            assert set(merged) == expected
