import numpy as np
import pytest

from acdc import rotation
from acdc.bundle.types import (
    AssetDatabase,
    AssetEntry,
    MountType,
    PlacedObject,
    PlaneSpec,
    SceneDescription,
)
from acdc.errors import UnpairedObject
from acdc.geometry import Aabb
from acdc.metrics import (
    aabb_iou,
    aggregate,
    evaluate,
    format_table,
    orientation_difference,
    ROTATION_GROUPS,
)

import oracles
from synth import unit_vector


def make_db():
    def entry(aid, cat, extents):
        return AssetEntry(
            id=aid,
            category=cat,
            category_embedding=unit_vector(3, 0),
            canonical_extents=np.asarray(extents, dtype=float),
            snapshots=(),
        )

    return AssetDatabase(
        assets=(
            entry("cab_a", "cabinet", (1.0, 1.0, 2.0)),
            entry("cab_b", "cabinet", (1.2, 0.9, 1.8)),
            entry("tab_a", "table", (1.5, 0.8, 0.7)),
        )
    )


def placed(oid, aid, pos, yaw=0.0, scale=(1, 1, 1)):
    return PlacedObject(
        source_object_id=oid,
        asset_id=aid,
        position=np.asarray(pos, dtype=float),
        orientation=rotation.about_z(yaw),
        scale=np.asarray(scale, dtype=float),
        mount_type=MountType("on_support"),
        support="floor",
    )


def scene(objs):
    return SceneDescription(
        objects=tuple(objs),
        floor_plane=PlaneSpec(np.zeros(3), np.array([0.0, 0.0, 1.0])),
        wall_planes=(),
    )


class TestAabbIou:
    def test_identity_symmetry_disjoint(self, rng):
        for _ in range(20):
            lo = rng.uniform(-1, 0, 3)
            hi = lo + rng.uniform(0.1, 2, 3)
            a = Aabb(lo, hi)
            assert aabb_iou(a, a) == pytest.approx(1.0)
            lo2 = rng.uniform(-1, 0, 3)
            b = Aabb(lo2, lo2 + rng.uniform(0.1, 2, 3))
            assert aabb_iou(a, b) == pytest.approx(aabb_iou(b, a))
            expected = oracles.box_iou_3d(a.min, a.max, b.min, b.max)
            assert aabb_iou(a, b) == pytest.approx(expected, abs=1e-12)
        far = Aabb(hi + 10, hi + 11)
        assert aabb_iou(a, far) == 0.0


class TestOrientationDiff:
    def test_range_and_symmetry_group(self):
        q = rotation.about_z(np.pi)
        ident = ROTATION_GROUPS["identity"]
        centro = ROTATION_GROUPS["centrosymmetric"]
        assert orientation_difference(rotation.IDENTITY, q, ident) == pytest.approx(np.pi)
        assert orientation_difference(rotation.IDENTITY, q, centro) == pytest.approx(0.0, abs=1e-9)

    def test_left_invariance(self, rng):
        for _ in range(20):
            a = rotation.normalize(rng.normal(size=4))
            b = rotation.normalize(rng.normal(size=4))
            g = rotation.normalize(rng.normal(size=4))
            d1 = orientation_difference(a, b, ROTATION_GROUPS["identity"])
            d2 = orientation_difference(
                rotation.multiply(g, a), rotation.multiply(g, b), ROTATION_GROUPS["identity"]
            )
            assert 0.0 <= d1 <= np.pi
            assert d1 == pytest.approx(d2, abs=1e-9)


class TestEvaluate:
    def test_perfect_reconstruction(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1]), placed("o2", "tab_a", [3, 0, 0.35])])
        report = evaluate(gt, gt, db)
        assert report.category_accuracy == 1.0
        assert report.model_accuracy == 1.0
        assert report.center_l2_cm == (0.0, 0.0)
        assert report.orientation_diff_rad == (0.0, 0.0)
        assert report.bbox_iou == (1.0, 0.0)
        assert report.center_aligned_iou == (1.0, 0.0)

    def test_translated_box_five_cm(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        rec = scene([placed("o1", "cab_a", [0.05, 0, 1])])
        report = evaluate(gt, rec, db)
        assert report.center_l2_cm[0] == pytest.approx(5.0, abs=1e-6)
        assert report.center_aligned_iou[0] == pytest.approx(1.0, abs=1e-12)
        # 1x1x2 box shifted 5 cm in x: inter 0.95*1*2, union 2*2-1.9
        expected = oracles.box_iou_3d(
            (-0.5, -0.5, 0.0), (0.5, 0.5, 2.0), (-0.45, -0.5, 0.0), (0.55, 0.5, 2.0)
        )
        assert report.bbox_iou[0] == pytest.approx(expected, abs=1e-12)
        assert report.bbox_iou[0] < 1.0

    def test_centrosymmetric_rotation_zero_diff(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        rec = scene([placed("o1", "cab_a", [0, 0, 1], yaw=np.pi)])
        plain = evaluate(gt, rec, db)
        assert plain.orientation_diff_rad[0] == pytest.approx(np.pi)
        sym = evaluate(gt, rec, db, symmetry={"cabinet": "centrosymmetric"})
        assert sym.orientation_diff_rad[0] == pytest.approx(0.0, abs=1e-9)

    def test_category_vs_model_accuracy(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        rec = scene([placed("o1", "cab_b", [0, 0, 0.9])])
        report = evaluate(gt, rec, db)
        assert report.category_accuracy == 1.0  # same category
        assert report.model_accuracy == 0.0  # different asset

    def test_center_aligned_geq_plain_iou(self, rng):
        db = make_db()
        for _ in range(15):
            gt = scene([placed("o1", "cab_a", rng.uniform(-1, 1, 3) + [0, 0, 2])])
            rec = scene([placed("o1", "cab_a", rng.uniform(-1, 1, 3) + [0, 0, 2])])
            report = evaluate(gt, rec, db)
            assert report.center_aligned_iou[0] >= report.bbox_iou[0] - 1e-12

    def test_unpaired_object(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        rec = scene([placed("oX", "cab_a", [0, 0, 1])])
        with pytest.raises(UnpairedObject):
            evaluate(gt, rec, db)

    def test_table_formatting(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        text = format_table(evaluate(gt, gt, db))
        assert "1/1" in text and "Cen. IoU" in text


class TestAggregate:
    def test_single_report_passthrough(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        rec = scene([placed("o1", "cab_a", [0.05, 0, 1])])
        report = evaluate(gt, rec, db)
        agg = aggregate([report])
        assert agg["pooled"]["center_l2_cm"]["mean"] == pytest.approx(5.0, abs=1e-6)

    def test_pooled_mean_equal_counts(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        rec4 = scene([placed("o1", "cab_a", [0.04, 0, 1])])
        rec6 = scene([placed("o1", "cab_a", [0.06, 0, 1])])
        r1 = evaluate(gt, rec4, db)
        r2 = evaluate(gt, rec6, db)
        agg = aggregate([r1, r2])
        assert agg["pooled"]["center_l2_cm"]["mean"] == pytest.approx(5.0, abs=1e-6)
        assert agg["pooled"]["model_accuracy"] == 1.0

    def test_empty_report_flagged_and_excluded(self):
        db = make_db()
        gt = scene([placed("o1", "cab_a", [0, 0, 1])])
        rec = scene([placed("o1", "cab_a", [0.05, 0, 1])])
        full = evaluate(gt, rec, db)
        empty = evaluate(scene([]), scene([]), db)
        agg = aggregate([full, empty])
        assert agg["scenes"][1]["empty"] is True
        assert agg["pooled"]["center_l2_cm"]["mean"] == pytest.approx(5.0, abs=1e-6)
