"""Class catalog and per-dataset configuration.

Everything the labeling/fusion algorithms need to know about a dataset
lives in one immutable :class:`ClassRegistry`: class ids, names, palette,
the small/large class sets, the directed class-similarity matrix, the
area-ratio and confidence thresholds, and the road-correction geometry.
Registries load from a small JSON format (see ``load_registry``); a
Cityscapes-19 config ships with the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

VOID_ID = 255


class ConfigError(ValueError):
    """Registry config is malformed; message carries the offending field path."""


@dataclass(frozen=True)
class ClassDef:
    id: int
    name: str
    color: tuple[int, int, int]


@dataclass(frozen=True)
class RoadRegion:
    """Centroid gate for the road correction, in fractions of image size.

    A mask qualifies when its area rank (1-based, descending) is at most
    ``top_k`` and its centroid lies in [x_lo*W, x_hi*W] x [y_lo*H, y_hi*H]
    (bounds inclusive).
    """

    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float
    top_k: int

    def __post_init__(self):
        if not (0.0 <= self.x_lo < self.x_hi <= 1.0):
            raise ConfigError(f"road_region: need 0 <= x_lo < x_hi <= 1, got [{self.x_lo}, {self.x_hi}]")
        if not (0.0 <= self.y_lo < self.y_hi <= 1.0):
            raise ConfigError(f"road_region: need 0 <= y_lo < y_hi <= 1, got [{self.y_lo}, {self.y_hi}]")
        if self.top_k < 1:
            raise ConfigError(f"road_region.top_k: must be >= 1, got {self.top_k}")

    def contains(self, centroid: tuple[float, float], width: int, height: int) -> bool:
        cx, cy = centroid
        return (self.x_lo * width <= cx <= self.x_hi * width
                and self.y_lo * height <= cy <= self.y_hi * height)


def default_road_region() -> RoadRegion:
    """Lower central band: x in [0.25W, 0.75W], y in [0.5H, H], top 3 masks."""
    return RoadRegion(x_lo=0.25, x_hi=0.75, y_lo=0.5, y_hi=1.0, top_k=3)


@dataclass(frozen=True)
class SimilarityMatrix:
    """Directed 0/1 class-pair indicator.

    ``(i, j)`` present means pixels the dense pseudo-label calls ``i`` may
    legitimately sit inside a mask labeled ``j`` (one instance mask can
    swallow both). The relation is NOT symmetric: (road, sidewalk) does
    not imply (sidewalk, road).
    """

    pairs: frozenset[tuple[int, int]]

    def __contains__(self, pair: tuple[int, int]) -> bool:
        return tuple(pair) in self.pairs

    def dense(self) -> np.ndarray:
        """(256, 256) uint8 lookup table indexed by raw label values."""
        table = np.zeros((256, 256), dtype=np.uint8)
        for i, j in self.pairs:
            table[i, j] = 1
        return table


@dataclass(frozen=True)
class ClassRegistry:
    classes: tuple[ClassDef, ...]
    small_classes: frozenset[int]
    large_classes: frozenset[int]
    similarity: SimilarityMatrix
    road_id: int
    sidewalk_id: int
    alpha: float
    beta: float
    road_region: RoadRegion
    void_id: int = VOID_ID
    _sim_dense: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        _validate(self)
        object.__setattr__(self, "_sim_dense", self.similarity.dense())

    @property
    def class_ids(self) -> tuple[int, ...]:
        return tuple(c.id for c in self.classes)

    @property
    def names(self) -> dict[int, str]:
        return {c.id: c.name for c in self.classes}

    def palette(self) -> np.ndarray:
        """(256, 3) uint8 color lookup; void and unknown ids map to black."""
        lut = np.zeros((256, 3), dtype=np.uint8)
        for c in self.classes:
            lut[c.id] = c.color
        return lut

    def similarity_dense(self) -> np.ndarray:
        return self._sim_dense


def _validate(reg: ClassRegistry) -> None:
    ids = [c.id for c in reg.classes]
    seen = set()
    for k, cid in enumerate(ids):
        if cid in seen:
            raise ConfigError(f"classes[{k}].id: duplicate id {cid}")
        seen.add(cid)
        if not (0 <= cid <= 255):
            raise ConfigError(f"classes[{k}].id: {cid} outside [0, 255]")
        if cid == reg.void_id:
            raise ConfigError(f"classes[{k}].id: {cid} collides with void_id")
    id_set = set(ids)
    overlap = reg.small_classes & reg.large_classes
    if overlap:
        raise ConfigError(f"small_classes/large_classes: overlap {sorted(overlap)}")
    if len(reg.small_classes) + len(reg.large_classes) > len(ids):
        raise ConfigError("small_classes/large_classes: combined size exceeds class count")
    for fname, members in (("small_classes", reg.small_classes),
                           ("large_classes", reg.large_classes)):
        for cid in sorted(members):
            if cid not in id_set:
                raise ConfigError(f"{fname}: id {cid} not in classes")
    for fname, cid in (("road_id", reg.road_id), ("sidewalk_id", reg.sidewalk_id)):
        if cid not in id_set:
            raise ConfigError(f"{fname}: id {cid} not in classes")
    for k, (i, j) in enumerate(sorted(reg.similarity.pairs)):
        if i not in id_set:
            raise ConfigError(f"similarity[{k}]: unknown class id {i}")
        if j not in id_set:
            raise ConfigError(f"similarity[{k}]: unknown class id {j}")
    for fname, value in (("alpha", reg.alpha), ("beta", reg.beta)):
        if not (0.0 <= value <= 1.0):
            raise ConfigError(f"{fname}: must be in [0, 1], got {value}")


def registry_from_dict(cfg: dict) -> ClassRegistry:
    """Build and validate a registry from parsed config JSON."""
    try:
        classes = tuple(
            ClassDef(id=int(c["id"]), name=str(c["name"]), color=tuple(int(v) for v in c["color"]))
            for c in cfg["classes"]
        )
        pairs = frozenset((int(i), int(j)) for i, j in cfg["similarity"])
        rr = cfg["road_region"]
        region = RoadRegion(
            x_lo=float(rr["x_lo"]), x_hi=float(rr["x_hi"]),
            y_lo=float(rr["y_lo"]), y_hi=float(rr["y_hi"]),
            top_k=int(rr["top_k"]),
        )
        return ClassRegistry(
            classes=classes,
            void_id=int(cfg.get("void_id", VOID_ID)),
            small_classes=frozenset(int(v) for v in cfg["small_classes"]),
            large_classes=frozenset(int(v) for v in cfg["large_classes"]),
            similarity=SimilarityMatrix(pairs),
            road_id=int(cfg["road_id"]),
            sidewalk_id=int(cfg["sidewalk_id"]),
            alpha=float(cfg["alpha"]),
            beta=float(cfg["beta"]),
            road_region=region,
        )
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"malformed config value: {exc}") from exc


def registry_to_dict(reg: ClassRegistry) -> dict:
    return {
        "classes": [{"id": c.id, "name": c.name, "color": list(c.color)} for c in reg.classes],
        "void_id": reg.void_id,
        "small_classes": sorted(reg.small_classes),
        "large_classes": sorted(reg.large_classes),
        "similarity": [list(p) for p in sorted(reg.similarity.pairs)],
        "road_id": reg.road_id,
        "sidewalk_id": reg.sidewalk_id,
        "alpha": reg.alpha,
        "beta": reg.beta,
        "road_region": {
            "x_lo": reg.road_region.x_lo,
            "x_hi": reg.road_region.x_hi,
            "y_lo": reg.road_region.y_lo,
            "y_hi": reg.road_region.y_hi,
            "top_k": reg.road_region.top_k,
        },
    }


def load_registry(path: str | Path) -> ClassRegistry:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return registry_from_dict(cfg)


def save_registry(reg: ClassRegistry, path: str | Path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(registry_to_dict(reg), fh, indent=2)
        fh.write("\n")


def cityscapes_registry() -> ClassRegistry:
    """The shipped 19-class driving config (road ... bike)."""
    ref = resources.files("maskfuse") / "configs" / "cityscapes19.json"
    return registry_from_dict(json.loads(ref.read_text(encoding="utf-8")))
