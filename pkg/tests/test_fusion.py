import random

import pytest

from textfuse.fusion import (
    FusionConfig,
    FusionError,
    LabelPolicy,
    MissingScore,
    Prediction,
    PredictionSet,
    Relation,
    WorkItem,
    assign_text,
    fuse_image,
    fuse_pair,
)
from textfuse.geometry import iou

from conftest import grid_ground_truth, random_convex_quad, rect


def pred(box, text, score=None, model_id="m"):
    return Prediction(box=box, text=text, score=score, model_id=model_id)


def item(box, text, score=None, model_id="m", index=0):
    return WorkItem.from_prediction(pred(box, text, score, model_id), index)


CFG = FusionConfig(label_policy=LabelPolicy.MODEL_PRIORITY, model_priority=("m1", "m2"))


class TestFusePair:
    def test_identical_boxes_merge(self):
        h = item(rect(0, 0, 2, 2), "xin", model_id="m1")
        k = item(rect(0, 0, 2, 2), "xin", model_id="m2")
        out = fuse_pair(h, k, CFG)
        assert len(out) == 1
        assert out[0].text == "xin"
        assert out[0].box.area() == pytest.approx(4.0)
        assert all(e.relation is Relation.MERGED for e in out[0].provenance)

    def test_disjoint_passthrough(self):
        h = item(rect(0, 0, 2, 2), "a", model_id="m1")
        k = item(rect(10, 10, 12, 12), "b", model_id="m2")
        out = fuse_pair(h, k, CFG)
        assert out == [h, k]

    def test_partial_overlap_splits(self):
        # IoU = 1/3 < 0.5: both boxes shrink to their area-2 remainders
        h = item(rect(0, 0, 2, 2), "xin", model_id="m1")
        k = item(rect(1, 0, 3, 2), "chào", model_id="m2")
        out = fuse_pair(h, k, CFG)
        assert [o.text for o in out] == ["xin", "chào"]
        for o in out:
            assert o.box.area() == pytest.approx(2.0, rel=0.01)
            assert all(e.relation is Relation.SPLIT for e in o.provenance)

    def test_contained_box_dropped_with_diagnostic(self):
        # inner box fully inside the outer one but IoU < 0.5: the inner
        # remainder is empty and gets dropped
        h = item(rect(0, 0, 10, 10), "big", model_id="m1")
        k = item(rect(4, 4, 6, 6), "small", model_id="m2")
        diags = []
        out = fuse_pair(h, k, CFG, diags)
        assert [o.text for o in out] == ["big"]
        assert len(diags) == 1

    def test_merged_box_is_intersection_refit(self):
        h = item(rect(0, 0, 4, 2), "a", model_id="m1")
        k = item(rect(1, 0, 4, 2), "b", model_id="m2")
        out = fuse_pair(h, k, CFG)
        assert len(out) == 1
        assert out[0].box.area() == pytest.approx(6.0)


class TestAssignText:
    def test_singleton(self):
        c = item(rect(0, 0, 1, 1), "solo", model_id="m1")
        assert assign_text([c], LabelPolicy.MODEL_PRIORITY, ("m1",)) == ("solo", "m1")

    def test_highest_score(self):
        a = item(rect(0, 0, 1, 1), "hi", score=0.9, model_id="m1")
        b = item(rect(0, 0, 1, 1), "lo", score=0.7, model_id="m2")
        assert assign_text([b, a], LabelPolicy.HIGHEST_SCORE)[0] == "hi"

    def test_equal_scores_break_by_priority(self):
        a = item(rect(0, 0, 1, 1), "one", score=0.8, model_id="m1")
        b = item(rect(0, 0, 1, 1), "two", score=0.8, model_id="m2")
        text, winner = assign_text([a, b], LabelPolicy.HIGHEST_SCORE, ("m2", "m1"))
        assert (text, winner) == ("two", "m2")

    def test_missing_score_raises(self):
        a = item(rect(0, 0, 1, 1), "x", model_id="m1")
        with pytest.raises(MissingScore):
            assign_text([a], LabelPolicy.HIGHEST_SCORE)

    def test_largest_source_area(self):
        a = item(rect(0, 0, 1, 1), "small", model_id="m1")
        b = item(rect(0, 0, 5, 5), "large", model_id="m2")
        assert assign_text([a, b], LabelPolicy.LARGEST_SOURCE_AREA)[0] == "large"

    def test_empty_raises(self):
        with pytest.raises(FusionError):
            assign_text([], LabelPolicy.MODEL_PRIORITY, ("m1",))


def make_sets(rng, n_models=2, image_id="img"):
    gt = grid_ground_truth(rng)
    sets = []
    for m in range(n_models):
        preds = [
            pred(r.box, r.text, model_id=f"m{m}")
            for i, r in enumerate(gt)
            if rng.random() > 0.2
        ]
        sets.append(PredictionSet(image_id, f"m{m}", preds))
    return sets


class TestFuseImage:
    def test_single_model_identity(self):
        rng = random.Random(3)
        (s,) = make_sets(rng, n_models=1)
        res = fuse_image([s])
        assert sorted((p.box for p in res.predictions), key=lambda b: b.flat()) == sorted(
            (p.box for p in s.predictions), key=lambda b: b.flat()
        )
        assert all(
            e.relation is Relation.PASSTHROUGH
            for p in res.predictions
            for e in p.provenance
        )

    def test_two_identical_models_merge_everything(self):
        rng = random.Random(4)
        (s1,) = make_sets(rng, n_models=1)
        s2 = PredictionSet(
            "img", "other", [pred(p.box, p.text, model_id="other") for p in s1.predictions]
        )
        res = fuse_image([s1, s2], FusionConfig())
        assert len(res.predictions) == len(s1.predictions)
        assert {p.text for p in res.predictions} == {p.text for p in s1.predictions}
        for p in res.predictions:
            assert {e.relation for e in p.provenance} == {Relation.MERGED}

    def test_disjoint_models_union(self):
        a = PredictionSet("img", "m1", [pred(rect(0, 0, 2, 2), "a", model_id="m1")])
        b = PredictionSet("img", "m2", [pred(rect(10, 10, 12, 12), "b", model_id="m2")])
        res = fuse_image([a, b])
        assert {p.text for p in res.predictions} == {"a", "b"}

    def test_mixed_image_ids_rejected(self):
        a = PredictionSet("img1", "m1", [])
        b = PredictionSet("img2", "m2", [])
        with pytest.raises(FusionError):
            fuse_image([a, b])

    def test_post_fusion_separation(self):
        rng = random.Random(11)
        for trial in range(10):
            sets = make_sets(rng, n_models=3)
            res = fuse_image(sets, FusionConfig())
            assert res.fixpoint_reached
            boxes = [p.box.polygon() for p in res.predictions]
            for i in range(len(boxes)):
                for j in range(i + 1, len(boxes)):
                    assert iou(boxes[i], boxes[j]) < 0.5

    def test_refusing_output_is_noop(self):
        rng = random.Random(12)
        sets = make_sets(rng, n_models=2)
        res = fuse_image(sets, FusionConfig())
        assert res.fixpoint_reached
        again = fuse_image(
            [
                PredictionSet(
                    "img",
                    "fused",
                    [pred(p.box, p.text, model_id="fused") for p in res.predictions],
                )
            ]
        )
        assert [(p.box, p.text) for p in again.predictions] == [
            (p.box, p.text) for p in res.predictions
        ]

    def test_no_synthesized_text(self):
        rng = random.Random(13)
        for trial in range(5):
            sets = make_sets(rng, n_models=3)
            input_texts = {p.text for s in sets for p in s.predictions}
            res = fuse_image(sets, FusionConfig())
            assert {p.text for p in res.predictions} <= input_texts

    def test_deterministic(self):
        rng1, rng2 = random.Random(14), random.Random(14)
        r1 = fuse_image(make_sets(rng1, n_models=3), FusionConfig())
        r2 = fuse_image(make_sets(rng2, n_models=3), FusionConfig())
        assert [(p.box, p.text, p.provenance) for p in r1.predictions] == [
            (p.box, p.text, p.provenance) for p in r2.predictions
        ]

    def test_missing_scores_fall_back_to_priority(self):
        a = PredictionSet("img", "m1", [pred(rect(0, 0, 2, 2), "first", model_id="m1")])
        b = PredictionSet("img", "m2", [pred(rect(0, 0, 2, 2), "second", model_id="m2")])
        res = fuse_image([a, b], FusionConfig())
        assert res.predictions[0].text == "first"
        assert any("fell back" in d for d in res.diagnostics)

    def test_output_sorted(self):
        rng = random.Random(15)
        sets = make_sets(rng, n_models=2)
        res = fuse_image(sets, FusionConfig())
        keys = [(p.box.corners[0].y, p.box.corners[0].x, p.box.area()) for p in res.predictions]
        assert keys == sorted(keys)


class TestConfigValidation:
    def test_threshold_range(self):
        with pytest.raises(FusionError):
            FusionConfig(iou_threshold=0.0)
        with pytest.raises(FusionError):
            FusionConfig(iou_threshold=1.5)

    def test_priority_required(self):
        with pytest.raises(FusionError):
            FusionConfig(label_policy=LabelPolicy.MODEL_PRIORITY)

    def test_max_passes_floor(self):
        with pytest.raises(FusionError):
            FusionConfig(max_passes=0)

    def test_score_range_checked(self):
        with pytest.raises(FusionError):
            Prediction(box=rect(0, 0, 1, 1), text="x", score=1.5)

    def test_model_id_mismatch_rejected(self):
        with pytest.raises(FusionError):
            PredictionSet("img", "m1", [pred(rect(0, 0, 1, 1), "x", model_id="m2")])


def test_text_nfc_normalized():
    import unicodedata

    decomposed = unicodedata.normalize("NFD", "việt")
    p = pred(rect(0, 0, 1, 1), decomposed)
    assert p.text == unicodedata.normalize("NFC", "việt")
    assert len(p.text) == 4
