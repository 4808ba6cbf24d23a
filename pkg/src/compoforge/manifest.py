"""Typed dataset records and strict JSONL manifest I/O.

The pipeline moves data between stages as JSONL manifests. Three record
shapes exist: source images, candidate crops, and training pairs. Parsing
is strict: unknown keys are rejected, wrong types are rejected, and every
error names the file and 1-based line it came from. Serialization is
canonical (fixed key order, compact separators, repr-shortest floats) so
that the same logical manifest always produces byte-identical files.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ManifestError, ValidationError


class SourceDataset(enum.Enum):
    GAIC = "gaic"
    CPC = "cpc"
    SACD = "sacd"
    FLMS = "flms"
    FLICKR_CROP = "flickr_crop"
    CUHK_CROP = "cuhk_crop"
    DL3DV = "dl3dv"
    UNSPLASH_LITE = "unsplash_lite"
    USER_COLLECTED = "user_collected"
    OTHER = "other"


class Task(enum.Enum):
    SHIFT = "shift"
    ZOOM_IN = "zoom_in"
    VIEW_CHANGE = "view_change"


class Stage(enum.Enum):
    IMAGES = "images"
    CROPS = "crops"
    PAIRS = "pairs"


# ---------------------------------------------------------------------------
# wire parsing helpers


def _reject_unknown(obj: dict[str, Any], allowed: set[str], what: str) -> None:
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ValidationError(f"{what}: unknown keys {unknown}")


def _get(obj: dict[str, Any], key: str, what: str) -> Any:
    if key not in obj:
        raise ValidationError(f"{what}: missing required key {key!r}")
    return obj[key]


def _as_str(value: Any, key: str, what: str) -> str:
    if not isinstance(value, str):
        raise ValidationError(f"{what}: key {key!r} must be a string")
    return value


def _as_int(value: Any, key: str, what: str) -> int:
    # bool is a subclass of int; it is never a valid count or coordinate
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{what}: key {key!r} must be an integer")
    return value


def _as_float(value: Any, key: str, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{what}: key {key!r} must be a number")
    out = float(value)
    if not math.isfinite(out):
        raise ValidationError(f"{what}: key {key!r} must be finite")
    return out


def _as_bool(value: Any, key: str, what: str) -> bool:
    if not isinstance(value, bool):
        raise ValidationError(f"{what}: key {key!r} must be a boolean")
    return value


def _as_enum(value: Any, enum_cls: type, key: str, what: str):
    name = _as_str(value, key, what)
    try:
        return enum_cls(name)
    except ValueError:
        valid = sorted(m.value for m in enum_cls)
        raise ValidationError(f"{what}: key {key!r} has unknown value {name!r}; expected one of {valid}") from None


# ---------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class ImageRef:
    """A source image, identified within one source dataset."""

    image_id: str
    source_dataset: SourceDataset
    width_px: int
    height_px: int
    byte_size: int
    keywords: tuple[str, ...] = ()
    score: float | None = None
    # set by an external super-resolution step; carried through untouched
    sr_applied: bool = False

    def __post_init__(self) -> None:
        if not self.image_id:
            raise ValidationError("image record: image_id must be non-empty")
        if self.width_px < 1 or self.height_px < 1:
            raise ValidationError(f"image {self.image_id}: dimensions must be >= 1")
        if self.byte_size < 0:
            raise ValidationError(f"image {self.image_id}: byte_size must be >= 0")
        if self.score is not None and not math.isfinite(self.score):
            raise ValidationError(f"image {self.image_id}: score must be finite")

    @property
    def aspect(self) -> float:
        return self.width_px / self.height_px

    def to_wire(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "image_id": self.image_id,
            "source_dataset": self.source_dataset.value,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "byte_size": self.byte_size,
            "keywords": list(self.keywords),
        }
        if self.score is not None:
            out["score"] = self.score
        if self.sr_applied:
            out["sr_applied"] = True
        return out

    @classmethod
    def from_wire(cls, obj: dict[str, Any]) -> "ImageRef":
        what = "image record"
        _reject_unknown(obj, {"image_id", "source_dataset", "width_px", "height_px",
                              "byte_size", "keywords", "score", "sr_applied"}, what)
        raw_kw = _get(obj, "keywords", what)
        if not isinstance(raw_kw, list) or not all(isinstance(k, str) for k in raw_kw):
            raise ValidationError(f"{what}: key 'keywords' must be a list of strings")
        return cls(
            image_id=_as_str(_get(obj, "image_id", what), "image_id", what),
            source_dataset=_as_enum(_get(obj, "source_dataset", what), SourceDataset, "source_dataset", what),
            width_px=_as_int(_get(obj, "width_px", what), "width_px", what),
            height_px=_as_int(_get(obj, "height_px", what), "height_px", what),
            byte_size=_as_int(_get(obj, "byte_size", what), "byte_size", what),
            keywords=tuple(raw_kw),
            score=None if "score" not in obj else _as_float(obj["score"], "score", what),
            sr_applied=False if "sr_applied" not in obj else _as_bool(obj["sr_applied"], "sr_applied", what),
        )


@dataclass(frozen=True)
class CropRecord:
    """A candidate crop of a source image, in parent pixel coordinates."""

    crop_id: str
    image_id: str
    source_dataset: SourceDataset
    x: int
    y: int
    w: int
    h: int
    parent_width: int
    parent_height: int
    score: float | None = None
    best: bool | None = None

    def __post_init__(self) -> None:
        if not self.crop_id:
            raise ValidationError("crop record: crop_id must be non-empty")
        if self.w < 1 or self.h < 1:
            raise ValidationError(f"crop {self.crop_id}: w and h must be >= 1")
        if self.x < 0 or self.y < 0:
            raise ValidationError(f"crop {self.crop_id}: x and y must be >= 0")
        if self.parent_width < 1 or self.parent_height < 1:
            raise ValidationError(f"crop {self.crop_id}: parent dimensions must be >= 1")
        if self.x + self.w > self.parent_width or self.y + self.h > self.parent_height:
            raise ValidationError(f"crop {self.crop_id}: rectangle exceeds parent bounds")
        if self.score is not None and not math.isfinite(self.score):
            raise ValidationError(f"crop {self.crop_id}: score must be finite")

    @property
    def aspect(self) -> float:
        return self.w / self.h

    def to_wire(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "crop_id": self.crop_id,
            "image_id": self.image_id,
            "source_dataset": self.source_dataset.value,
            "x": self.x,
            "y": self.y,
            "w": self.w,
            "h": self.h,
            "parent_width": self.parent_width,
            "parent_height": self.parent_height,
        }
        if self.score is not None:
            out["score"] = self.score
        if self.best is not None:
            out["best"] = self.best
        return out

    @classmethod
    def from_wire(cls, obj: dict[str, Any]) -> "CropRecord":
        what = "crop record"
        _reject_unknown(obj, {"crop_id", "image_id", "source_dataset", "x", "y", "w", "h",
                              "parent_width", "parent_height", "score", "best"}, what)
        return cls(
            crop_id=_as_str(_get(obj, "crop_id", what), "crop_id", what),
            image_id=_as_str(_get(obj, "image_id", what), "image_id", what),
            source_dataset=_as_enum(_get(obj, "source_dataset", what), SourceDataset, "source_dataset", what),
            x=_as_int(_get(obj, "x", what), "x", what),
            y=_as_int(_get(obj, "y", what), "y", what),
            w=_as_int(_get(obj, "w", what), "w", what),
            h=_as_int(_get(obj, "h", what), "h", what),
            parent_width=_as_int(_get(obj, "parent_width", what), "parent_width", what),
            parent_height=_as_int(_get(obj, "parent_height", what), "parent_height", what),
            score=None if "score" not in obj else _as_float(obj["score"], "score", what),
            best=None if "best" not in obj else _as_bool(obj["best"], "best", what),
        )


@dataclass(frozen=True)
class CropRef:
    """A crop used as one side of a pair (no parent dimensions carried)."""

    crop_id: str
    image_id: str
    source_dataset: SourceDataset
    x: int
    y: int
    w: int
    h: int
    score: float | None = None

    def __post_init__(self) -> None:
        if not self.crop_id:
            raise ValidationError("crop side: crop_id must be non-empty")
        if self.w < 1 or self.h < 1:
            raise ValidationError(f"crop side {self.crop_id}: w and h must be >= 1")
        if self.x < 0 or self.y < 0:
            raise ValidationError(f"crop side {self.crop_id}: x and y must be >= 0")
        if self.score is not None and not math.isfinite(self.score):
            raise ValidationError(f"crop side {self.crop_id}: score must be finite")

    @property
    def aspect(self) -> float:
        return self.w / self.h

    @classmethod
    def from_crop(cls, crop: CropRecord) -> "CropRef":
        return cls(crop_id=crop.crop_id, image_id=crop.image_id,
                   source_dataset=crop.source_dataset,
                   x=crop.x, y=crop.y, w=crop.w, h=crop.h, score=crop.score)

    def to_wire(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "kind": "crop",
            "crop_id": self.crop_id,
            "image_id": self.image_id,
            "source_dataset": self.source_dataset.value,
            "x": self.x,
            "y": self.y,
            "w": self.w,
            "h": self.h,
        }
        if self.score is not None:
            out["score"] = self.score
        return out

    @classmethod
    def from_wire(cls, obj: dict[str, Any]) -> "CropRef":
        what = "crop side"
        _reject_unknown(obj, {"kind", "crop_id", "image_id", "source_dataset",
                              "x", "y", "w", "h", "score"}, what)
        return cls(
            crop_id=_as_str(_get(obj, "crop_id", what), "crop_id", what),
            image_id=_as_str(_get(obj, "image_id", what), "image_id", what),
            source_dataset=_as_enum(_get(obj, "source_dataset", what), SourceDataset, "source_dataset", what),
            x=_as_int(_get(obj, "x", what), "x", what),
            y=_as_int(_get(obj, "y", what), "y", what),
            w=_as_int(_get(obj, "w", what), "w", what),
            h=_as_int(_get(obj, "h", what), "h", what),
            score=None if "score" not in obj else _as_float(obj["score"], "score", what),
        )


PairSide = ImageRef | CropRef


def _side_to_wire(side: PairSide) -> dict[str, Any]:
    if isinstance(side, ImageRef):
        return {"kind": "image", **side.to_wire()}
    return side.to_wire()


def _side_from_wire(obj: Any, what: str) -> PairSide:
    if not isinstance(obj, dict):
        raise ValidationError(f"{what}: pair side must be an object")
    kind = _as_str(_get(obj, "kind", what), "kind", what)
    if kind == "image":
        rest = {k: v for k, v in obj.items() if k != "kind"}
        return ImageRef.from_wire(rest)
    if kind == "crop":
        return CropRef.from_wire(obj)
    raise ValidationError(f"{what}: pair side kind must be 'image' or 'crop', got {kind!r}")


@dataclass(frozen=True)
class PairRecord:
    """One poor/good training pair with its task metadata."""

    pair_id: str
    task: Task
    poor: PairSide
    good: PairSide
    task_prompt: str
    provenance: str
    rotation_deg: float = 0.0
    text_guidance: str | None = None

    def __post_init__(self) -> None:
        if not self.pair_id:
            raise ValidationError("pair record: pair_id must be non-empty")
        if not math.isfinite(self.rotation_deg):
            raise ValidationError(f"pair {self.pair_id}: rotation_deg must be finite")
        if self.task is not Task.SHIFT and self.rotation_deg != 0.0:
            raise ValidationError(f"pair {self.pair_id}: rotation_deg must be 0 unless task is shift")
        if not self.task_prompt:
            raise ValidationError(f"pair {self.pair_id}: task_prompt must be non-empty")
        if not self.provenance:
            raise ValidationError(f"pair {self.pair_id}: provenance must be non-empty")

    def to_wire(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "pair_id": self.pair_id,
            "task": self.task.value,
            "poor": _side_to_wire(self.poor),
            "good": _side_to_wire(self.good),
            "rotation_deg": self.rotation_deg,
            "task_prompt": self.task_prompt,
        }
        if self.text_guidance is not None:
            out["text_guidance"] = self.text_guidance
        out["provenance"] = self.provenance
        return out

    @classmethod
    def from_wire(cls, obj: dict[str, Any]) -> "PairRecord":
        what = "pair record"
        _reject_unknown(obj, {"pair_id", "task", "poor", "good", "rotation_deg",
                              "task_prompt", "text_guidance", "provenance"}, what)
        return cls(
            pair_id=_as_str(_get(obj, "pair_id", what), "pair_id", what),
            task=_as_enum(_get(obj, "task", what), Task, "task", what),
            poor=_side_from_wire(_get(obj, "poor", what), what + " (poor)"),
            good=_side_from_wire(_get(obj, "good", what), what + " (good)"),
            rotation_deg=_as_float(_get(obj, "rotation_deg", what), "rotation_deg", what),
            task_prompt=_as_str(_get(obj, "task_prompt", what), "task_prompt", what),
            text_guidance=None if "text_guidance" not in obj
            else _as_str(obj["text_guidance"], "text_guidance", what),
            provenance=_as_str(_get(obj, "provenance", what), "provenance", what),
        )


Record = ImageRef | CropRecord | PairRecord

_STAGE_TYPES: dict[Stage, type] = {
    Stage.IMAGES: ImageRef,
    Stage.CROPS: CropRecord,
    Stage.PAIRS: PairRecord,
}


def record_id(record: Record) -> str:
    if isinstance(record, ImageRef):
        return record.image_id
    if isinstance(record, CropRecord):
        return record.crop_id
    return record.pair_id


@dataclass(frozen=True)
class Manifest:
    """An ordered, duplicate-free collection of records for one stage.

    Records are normalized to ascending id order on construction, so the
    same record set always serializes to the same bytes regardless of how
    it was assembled.
    """

    stage: Stage
    records: tuple[Record, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        want = _STAGE_TYPES[self.stage]
        for rec in self.records:
            if not isinstance(rec, want):
                raise ValidationError(
                    f"manifest stage {self.stage.value!r} cannot hold {type(rec).__name__} records")
        ordered = tuple(sorted(self.records, key=record_id))
        ids = [record_id(r) for r in ordered]
        for a, b in zip(ids, ids[1:]):
            if a == b:
                raise ValidationError(f"manifest: duplicate record id {a!r}")
        object.__setattr__(self, "records", ordered)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.records)

    def ids(self) -> list[str]:
        return [record_id(r) for r in self.records]


# ---------------------------------------------------------------------------
# JSONL I/O


def canonical_json(obj: Any) -> str:
    """Serialize one row compactly with insertion key order preserved."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def write_jsonl(path: str | Path, rows: Iterable[dict[str, Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(canonical_json(row))
            fh.write("\n")


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, Any]]:
    """Yield (1-based line number, parsed object); whitespace-only lines skipped."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"invalid JSON: {exc.msg}", path=str(path), line=lineno) from None


def read_jsonl(path: str | Path) -> list[tuple[int, dict[str, Any]]]:
    """Read all rows, requiring each to be a JSON object."""
    out: list[tuple[int, dict[str, Any]]] = []
    for lineno, obj in iter_jsonl(path):
        if not isinstance(obj, dict):
            raise ManifestError("row must be a JSON object", path=str(path), line=lineno)
        out.append((lineno, obj))
    return out


def write_manifest(manifest: Manifest, path: str | Path) -> None:
    write_jsonl(path, (rec.to_wire() for rec in manifest.records))


def read_manifest(path: str | Path, stage: Stage) -> Manifest:
    """Parse a manifest, validating every record against the expected stage."""
    want = _STAGE_TYPES[stage]
    records: list[Record] = []
    seen: dict[str, int] = {}
    for lineno, obj in read_jsonl(path):
        try:
            rec = want.from_wire(obj)
        except ValidationError as exc:
            raise ManifestError(str(exc), path=str(path), line=lineno) from None
        rid = record_id(rec)
        if rid in seen:
            raise ManifestError(
                f"duplicate record id {rid!r} (first seen on line {seen[rid]})",
                path=str(path), line=lineno)
        seen[rid] = lineno
        records.append(rec)
    return Manifest(stage=stage, records=tuple(records))
