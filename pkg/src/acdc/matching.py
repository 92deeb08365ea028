"""Digital-cousin selection: category, model, and orientation matching.

Model and orientation choices come from per-pixel nearest-neighbor statistics
over feature patch grids (a voting rule for top-k picks and a trimmed mean
nearest-neighbor distance for ranking), optionally refined by delegate
annotations read from a sidecar file.
"""

from __future__ import annotations

import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rotation
from ._kernels import min_sqdist
from .bundle.types import (
    AssetDatabase,
    AssetEntry,
    DelegateAnnotations,
    ObjectRecord,
)
from .errors import (
    DegenerateInput,
    DimensionMismatch,
    EmptyCandidates,
    EmptyCategory,
    NoCandidateSatisfiesArticulation,
)
from .geometry import PointCloud, z_min_obb

log = logging.getLogger(__name__)

DEFAULT_TRIM_FRACTION = 0.10


@dataclass(frozen=True)
class MatchConfig:
    k_cat: int = 3
    k_cand: int = 10
    k_cous: int = 8
    k_model: int = 10
    k_ori: int = 4
    trim_fraction: float = DEFAULT_TRIM_FRACTION
    selector_path: str = "embedding_only"  # embedding_only | delegate
    articulation_count_threshold: int | None = None

    def __post_init__(self):
        if min(self.k_cat, self.k_cand, self.k_cous, self.k_model, self.k_ori) < 1:
            raise ValueError("all k_* parameters must be positive")
        if self.k_cous > self.k_cand:
            raise ValueError("k_cous must not exceed k_cand")
        if not (0.0 <= self.trim_fraction < 1.0):
            raise ValueError("trim_fraction must be in [0, 1)")
        if self.selector_path not in ("embedding_only", "delegate"):
            raise ValueError(f"unknown selector path {self.selector_path!r}")
        if self.articulation_count_threshold is not None and self.articulation_count_threshold < 0:
            raise ValueError("articulation_count_threshold must be non-negative")


@dataclass(frozen=True)
class Cousin:
    asset_id: str
    orientation: np.ndarray  # quaternion (w, x, y, z)
    distance: float
    trace: dict[str, str] = field(default_factory=dict)  # which path chose model/orientation

    def __post_init__(self):
        q = np.asarray(self.orientation, dtype=np.float64).reshape(4)
        q.flags.writeable = False
        object.__setattr__(self, "orientation", q)


@dataclass(frozen=True)
class CousinMatch:
    object_id: str
    cousins: tuple[Cousin, ...]

    def __post_init__(self):
        object.__setattr__(self, "cousins", tuple(self.cousins))


def _as_grid(features) -> np.ndarray:
    arr = np.asarray(features, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr.reshape(-1, arr.shape[-1])
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise DimensionMismatch(f"expected a non-empty feature grid, got shape {arr.shape}")
    return np.ascontiguousarray(arr)


def top_categories(label_embedding, db: AssetDatabase, k_cat: int) -> list[str]:
    """The k_cat category names most cosine-similar to the label embedding.

    Ties break lexicographically by category name.
    """
    emb = np.asarray(label_embedding, dtype=np.float64).reshape(-1)
    by_name: dict[str, np.ndarray] = {}
    for asset in db.assets:
        by_name.setdefault(asset.category, np.asarray(asset.category_embedding, np.float64))
    if not by_name:
        raise EmptyCategory("asset database has no categories")
    scored = []
    for name in sorted(by_name):
        cat = by_name[name]
        if cat.shape != emb.shape:
            raise DimensionMismatch(
                f"label embedding dim {emb.shape[0]} != category embedding dim {cat.shape[0]}"
            )
        denom = np.linalg.norm(emb) * np.linalg.norm(cat)
        score = float(emb @ cat / denom) if denom > 0 else 0.0
        scored.append((-score, name))
    scored.sort()
    return [name for _, name in scored[:k_cat]]


def nn_distances(query, matched) -> np.ndarray:
    """Per query vector, L2 distance to its nearest vector of ``matched``."""
    q = _as_grid(query)
    m = _as_grid(matched)
    if q.shape[1] != m.shape[1]:
        raise DimensionMismatch(f"feature dims differ: {q.shape[1]} vs {m.shape[1]}")
    return np.sqrt(min_sqdist(q, m))


def trimmed_count(n: int, trim_fraction: float) -> int:
    """Number of largest distances to drop: ceil(trim*n), but always keep one."""
    return min(math.ceil(trim_fraction * n), n - 1)


def embedding_distance(query, matched, trim_fraction: float = DEFAULT_TRIM_FRACTION) -> float:
    """Trimmed mean nearest-neighbor distance between two feature grids.

    Per query vector the nearest-neighbor L2 distance into ``matched`` is
    taken; the largest ceil(trim_fraction*n) of those are dropped and the
    rest averaged.
    """
    if not (0.0 <= trim_fraction < 1.0):
        raise ValueError("trim_fraction must be in [0, 1)")
    dists = np.sort(nn_distances(query, matched))
    drop = trimmed_count(len(dists), trim_fraction)
    kept = dists[: len(dists) - drop]
    return float(kept.mean())


def vote_top_k(query, candidates, k: int, trim_fraction: float = DEFAULT_TRIM_FRACTION) -> list[int]:
    """Iterative top-k candidate ranking by per-pixel nearest-neighbor votes.

    Each round, every query vector votes for the candidate owning its globally
    nearest vector (across all remaining candidates); the candidate with the
    most votes wins the round and is removed. Vote ties break by smaller
    trimmed embedding distance, then by smaller candidate index.
    """
    q = _as_grid(query)
    grids = [_as_grid(c) for c in candidates]
    if not grids:
        raise EmptyCandidates("no candidate feature grids")
    d = q.shape[1]
    for g in grids:
        if g.shape[1] != d:
            raise DimensionMismatch(f"feature dims differ: {d} vs {g.shape[1]}")

    # (nq, n_cand): distance from each query vector to each candidate's nearest
    # vector. A query's global NN owner is the argmin over remaining columns;
    # equal columns resolve to the smaller candidate index, matching a scan in
    # candidate-major order.
    dist_matrix = np.column_stack([min_sqdist(q, g) for g in grids])
    trimmed = None  # computed lazily, only to break tally ties

    remaining = list(range(len(grids)))
    ranking: list[int] = []
    for _ in range(min(k, len(grids))):
        sub = dist_matrix[:, remaining]
        owners = np.argmin(sub, axis=1)
        tallies = np.bincount(owners, minlength=len(remaining))
        best = np.max(tallies)
        tied = [remaining[i] for i in np.nonzero(tallies == best)[0]]
        if len(tied) > 1:
            if trimmed is None:
                trimmed = {}
            for c in tied:
                if c not in trimmed:
                    trimmed[c] = embedding_distance(q, grids[c], trim_fraction)
            tied.sort(key=lambda c: (trimmed[c], c))
        winner = tied[0]
        ranking.append(winner)
        remaining.remove(winner)
    return ranking


def refine_orientation_bbox(q_c, object_points: PointCloud) -> np.ndarray:
    """Compose a z-rotation onto q_c aligning the asset's canonical xy axes
    with the minimum-footprint frame of the object cloud.

    Among the four quarter-turn-equivalent yaws, the one with the smallest
    angular change from q_c wins. Degenerate clouds leave q_c unchanged with
    a warning.
    """
    q_c = rotation.normalize(q_c)
    try:
        yaw, _ = z_min_obb(object_points)
    except DegenerateInput:
        log.warning("orientation refinement skipped: degenerate object cloud")
        return q_c
    # Box-frame x axis heading; the cloud rotated by `yaw` is axis-aligned.
    beta = -yaw
    x_axis = rotation.rotate(q_c, np.array([1.0, 0.0, 0.0]))
    alpha = float(np.arctan2(x_axis[1], x_axis[0]))
    candidates = []
    for kq in range(4):
        delta = beta + kq * (np.pi / 2) - alpha
        delta = (delta + np.pi) % (2 * np.pi) - np.pi
        candidates.append((abs(delta), delta))
    _, delta = min(candidates)
    return rotation.multiply(rotation.about_z(delta), q_c)


# -- full per-object selection -------------------------------------------------------


def _representative_ranking(
    obj: ObjectRecord, pool: list[AssetEntry], trim: float
) -> list[tuple[float, AssetEntry]]:
    q = obj.feature_grid()
    ranked = [
        (embedding_distance(q, a.representative_snapshot().feature_grid(), trim), a)
        for a in pool
    ]
    ranked.sort(key=lambda t: (t[0], t[1].id))
    return ranked


def _orientation_candidates(
    obj: ObjectRecord, asset: AssetEntry, cfg: MatchConfig
) -> list[tuple[float, int]]:
    """(distance, snapshot index) for the top k_ori voted snapshots, ranked by
    distance (ties keep vote order)."""
    q = obj.feature_grid()
    grids = [s.feature_grid() for s in asset.snapshots]
    k_ori = min(cfg.k_ori, len(grids))
    voted = vote_top_k(q, grids, k_ori, cfg.trim_fraction)
    scored = [
        (embedding_distance(q, grids[s], cfg.trim_fraction), rank, s)
        for rank, s in enumerate(voted)
    ]
    scored.sort(key=lambda t: (t[0], t[1]))
    return [(dist, s) for dist, _, s in scored]


def select_cousins(
    obj: ObjectRecord,
    db: AssetDatabase,
    cfg: MatchConfig,
    sidecar: DelegateAnnotations | None = None,
) -> CousinMatch:
    """Rank up to k_cous (asset, orientation, distance) cousins for one object.

    Categories come from label-embedding similarity; model candidates from
    trimmed distances against representative snapshots; orientations from
    voting plus distance ranking over each candidate's snapshot set. With
    selector_path="delegate", sidecar choices are honored when they name a
    candidate within the top k_model (models) or top k_ori (orientations);
    out-of-list choices fall back to the embedding path with a warning.

    Articulated objects are restricted to articulated assets. When the count
    threshold is set, the best visual match over the unrestricted pool fixes
    the reference door/drawer counts and every cousin must match them within
    the threshold.
    """
    cats = top_categories(obj.label_embedding, db, cfg.k_cat)
    pool = sorted((a for a in db.assets if a.category in cats), key=lambda a: a.id)
    if not pool:
        raise EmptyCategory(f"no assets in categories {cats}")

    ranked = _representative_ranking(obj, pool, cfg.trim_fraction)

    if obj.articulated:
        reference = ranked[0][1]
        eligible = {a.id for a in pool if a.articulated}
        if cfg.articulation_count_threshold is not None:
            thr = cfg.articulation_count_threshold
            eligible = {
                aid
                for aid in eligible
                for a in [db.asset_by_id(aid)]
                if abs(a.door_count - reference.door_count) <= thr
                and abs(a.drawer_count - reference.drawer_count) <= thr
            }
        if not eligible:
            raise NoCandidateSatisfiesArticulation(
                f"object {obj.id!r}: no articulated asset within door/drawer "
                f"threshold of reference {ranked[0][1].id!r}"
            )
        ranked = [(d, a) for d, a in ranked if a.id in eligible]

    candidates = [a for _, a in ranked[: cfg.k_cand]]

    delegate_model: str | None = None
    choice = sidecar.get(obj.id) if sidecar is not None else None
    if cfg.selector_path == "delegate" and choice is not None and choice.chosen_model:
        shortlist = {a.id for _, a in ranked[: cfg.k_model]}
        if choice.chosen_model in shortlist:
            delegate_model = choice.chosen_model
            if not any(a.id == delegate_model for a in candidates):
                candidates.append(db.asset_by_id(delegate_model))
        else:
            log.warning(
                "object %s: delegate chose %r outside the top-%d candidate list; "
                "falling back to embedding ranking",
                obj.id,
                choice.chosen_model,
                cfg.k_model,
            )

    scored: list[tuple[float, str, Cousin]] = []
    for asset in candidates:
        oris = _orientation_candidates(obj, asset, cfg)
        dist, snap_idx = oris[0]
        trace = {"model": "embedding", "orientation": "embedding"}
        if asset.id == delegate_model:
            trace["model"] = "delegate"
            if choice is not None and choice.chosen_orientation_index is not None:
                idx = choice.chosen_orientation_index
                if 0 <= idx < len(oris):
                    dist, snap_idx = oris[idx]
                    trace["orientation"] = "delegate"
                else:
                    log.warning(
                        "object %s: delegate orientation index %d outside the "
                        "top-%d list; falling back to embedding ranking",
                        obj.id,
                        idx,
                        len(oris),
                    )
        cousin = Cousin(
            asset_id=asset.id,
            orientation=asset.snapshots[snap_idx].orientation,
            distance=dist,
            trace=trace,
        )
        scored.append((dist, asset.id, cousin))

    scored.sort(key=lambda t: (t[0], t[1]))
    ordering = [c for _, _, c in scored]
    if delegate_model is not None:
        ordering = [c for c in ordering if c.asset_id == delegate_model] + [
            c for c in ordering if c.asset_id != delegate_model
        ]
    return CousinMatch(object_id=obj.id, cousins=tuple(ordering[: cfg.k_cous]))


# -- matches.json -----------------------------------------------------------------


def matches_payload(matches: list[CousinMatch]) -> dict:
    return {
        "objects": [
            {
                "object_id": m.object_id,
                "cousins": [
                    {
                        "asset_id": c.asset_id,
                        "orientation": [float(v) for v in c.orientation],
                        "distance": c.distance,
                        "trace": dict(c.trace),
                    }
                    for c in m.cousins
                ],
            }
            for m in matches
        ]
    }


def write_matches(matches: list[CousinMatch], path: str | os.PathLike) -> None:
    text = json.dumps(matches_payload(matches), indent=2, ensure_ascii=False) + "\n"
    tmp = Path(path).with_name(Path(path).name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def read_matches(path: str | os.PathLike) -> list[CousinMatch]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return [
        CousinMatch(
            object_id=str(m["object_id"]),
            cousins=tuple(
                Cousin(
                    asset_id=str(c["asset_id"]),
                    orientation=np.asarray(c["orientation"], dtype=np.float64),
                    distance=float(c["distance"]),
                    trace=dict(c.get("trace", {})),
                )
                for c in m["cousins"]
            ),
        )
        for m in payload.get("objects", [])
    ]
