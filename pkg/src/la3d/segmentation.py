"""Person detection bridge: providers, resize/restore, padding, sidecar files.

A mask provider turns an RGB frame into ``InstanceMask`` objects at the
resolution of the frame it was given. Two providers ship with the package:

* ``SidecarProvider`` reads precomputed masks from disk;
* ``ExternalProvider`` runs a segmentation program in a subprocess.

Sidecar layout, per frame ``<id>``::

    <id>.json       {"frame_id", "width", "height",
                     "instances": [{"id", "class_id", "score", "bbox": [x, y, w, h]}]}
    <id>.mask.png   8-bit grayscale, pixel value = instance id, 0 = background
"""
from __future__ import annotations

import json
import logging
import math
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from PIL import Image

from .image import BBox, InstanceMask, as_frame, tight_bbox

log = logging.getLogger(__name__)

PERSON_CLASS_IDS = frozenset({0})
# COCO ids: backpack, umbrella, handbag, suitcase, laptop, cell phone
PERSONAL_ITEM_CLASS_IDS = frozenset({24, 25, 26, 28, 63, 67})
MAX_INSTANCES = 255


class DetectorUnavailable(RuntimeError):
    """The provider failed; distinct from a frame with zero detections."""


class SidecarFormatError(ValueError):
    def __init__(self, message: str, path: str | Path | None = None, field: str | None = None):
        super().__init__(message)
        self.path = None if path is None else str(path)
        self.field = field

    def __str__(self) -> str:
        where = ":".join(p for p in (self.path, self.field) if p)
        return f"{where}: {self.args[0]}" if where else self.args[0]


class ProviderOutputError(DetectorUnavailable, SidecarFormatError):
    """An external provider wrote sidecars that fail validation."""

    def __init__(self, message: str, cause: SidecarFormatError):
        SidecarFormatError.__init__(self, message, cause.path, cause.field)


@dataclass(frozen=True)
class DetectorConfig:
    confidence_threshold: float = 0.25
    inference_size: tuple[int, int] = (320, 240)  # (width, height)
    pad_small_inputs: bool = False
    person_class_ids: frozenset[int] = PERSON_CLASS_IDS
    include_personal_items: bool = False
    item_class_ids: frozenset[int] = PERSONAL_ITEM_CLASS_IDS

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence_threshold <= 1.0:
            raise ValueError(f"confidence threshold must be in [0, 1], got {self.confidence_threshold}")
        if len(self.inference_size) != 2 or min(self.inference_size) < 1:
            raise ValueError(f"bad inference size {self.inference_size}")

    @property
    def class_ids(self) -> frozenset[int]:
        if self.include_personal_items:
            return self.person_class_ids | self.item_class_ids
        return self.person_class_ids


class MaskProvider(Protocol):
    # True when masks come back at the source frame size and no resize is wanted
    native_resolution: bool

    def infer(self, image: np.ndarray, frame_id: str) -> list[InstanceMask]: ...


# -- geometry ---------------------------------------------------------------


@dataclass(frozen=True)
class Padding:
    left: int = 0
    top: int = 0
    right: int = 0
    bottom: int = 0


def pad_to_aspect(frame: np.ndarray, aspect_wh: tuple[int, int]) -> tuple[np.ndarray, Padding]:
    """Edge-replicate ``frame`` until its aspect ratio matches ``aspect_wh``."""
    h, w = frame.shape[:2]
    aw, ah = aspect_wh
    if w * ah < h * aw:
        extra = math.ceil(h * aw / ah) - w
        pad = Padding(left=extra // 2, right=extra - extra // 2)
    elif w * ah > h * aw:
        extra = math.ceil(w * ah / aw) - h
        pad = Padding(top=extra // 2, bottom=extra - extra // 2)
    else:
        pad = Padding()
    widths = ((pad.top, pad.bottom), (pad.left, pad.right)) + ((0, 0),) * (frame.ndim - 2)
    return np.pad(frame, widths, mode="edge"), pad


def unpad(arr: np.ndarray, pad: Padding) -> np.ndarray:
    h, w = arr.shape[:2]
    return arr[pad.top : h - pad.bottom, pad.left : w - pad.right]


def resize_nearest(arr: np.ndarray, size_wh: tuple[int, int]) -> np.ndarray:
    """Nearest-pixel resize sampling source pixel centres."""
    h, w = arr.shape[:2]
    tw, th = size_wh
    rows = ((2 * np.arange(th) + 1) * h) // (2 * th)
    cols = ((2 * np.arange(tw) + 1) * w) // (2 * tw)
    return arr[rows[:, None], cols[None, :]]


def resize_frame(frame: np.ndarray, size_wh: tuple[int, int]) -> np.ndarray:
    if frame.shape[1] == size_wh[0] and frame.shape[0] == size_wh[1]:
        return frame
    return np.asarray(Image.fromarray(frame).resize(size_wh, Image.BILINEAR))


def rescale_box(box: BBox, src_wh: tuple[int, int], dst_wh: tuple[int, int]) -> BBox:
    """Map a box between resolutions, rounding outward so it never shrinks."""
    sw, sh = src_wh
    dw, dh = dst_wh
    x0 = (box.x * dw) // sw
    y0 = (box.y * dh) // sh
    x1 = -((-(box.x + box.w) * dw) // sw)
    y1 = -((-(box.y + box.h) * dh) // sh)
    x1, y1 = min(x1, dw), min(y1, dh)
    return BBox(x0, y0, max(x1 - x0, 1), max(y1 - y0, 1))


def _restore(inst: InstanceMask, work_wh: tuple[int, int], pad: Padding | None) -> InstanceMask | None:
    mask = resize_nearest(inst.mask, work_wh)
    if pad is not None:
        mask = unpad(mask, pad)
    mask = np.ascontiguousarray(mask)
    box = tight_bbox(mask)
    if box is None:
        return None
    return InstanceMask(mask, box, inst.class_id, inst.score)


def detect(
    frame: np.ndarray, config: DetectorConfig, provider: MaskProvider, frame_id: str = ""
) -> list[InstanceMask]:
    """Run ``provider`` at inference resolution and map results back to ``frame``."""
    h, w = frame.shape[:2]
    keep_ids = config.class_ids
    lam = config.confidence_threshold

    def wanted(inst: InstanceMask) -> bool:
        return inst.score >= lam and inst.class_id in keep_ids

    try:
        if getattr(provider, "native_resolution", False):
            found = provider.infer(frame, frame_id)
            return [i for i in found if wanted(i) and i.mask.shape == (h, w)]

        iw, ih = config.inference_size
        work, pad = frame, None
        if config.pad_small_inputs and (w < iw or h < ih):
            work, pad = pad_to_aspect(frame, (iw, ih))
        found = provider.infer(resize_frame(np.ascontiguousarray(work), (iw, ih)), frame_id)
    except DetectorUnavailable:
        raise
    except Exception as exc:  # noqa: BLE001 - any provider fault means no detections are known
        raise DetectorUnavailable(f"provider failed on frame {frame_id!r}: {exc}") from exc

    work_wh = (work.shape[1], work.shape[0])
    out = []
    for inst in found:
        if not wanted(inst):
            continue
        restored = _restore(inst, work_wh, pad)
        if restored is not None:
            out.append(restored)
    return out


# -- sidecar files ----------------------------------------------------------


def sidecar_paths(dir_path: str | Path, frame_id: str) -> tuple[Path, Path]:
    d = Path(dir_path)
    return d / f"{frame_id}.json", d / f"{frame_id}.mask.png"


def write_sidecar(
    dir_path: str | Path,
    frame_id: str,
    size_wh: tuple[int, int],
    instances: Sequence[InstanceMask],
) -> None:
    """Write instances as a label raster plus metadata; ids follow list order."""
    if len(instances) > MAX_INSTANCES:
        raise SidecarFormatError(f"{len(instances)} instances exceed the {MAX_INSTANCES} id range")
    w, h = size_wh
    raster = np.zeros((h, w), dtype=np.uint8)
    meta = []
    for i, inst in enumerate(instances, start=1):
        if inst.mask.shape != (h, w):
            raise SidecarFormatError(f"instance {i} mask {inst.mask.shape} does not match {w}x{h}")
        if np.any(raster[inst.mask]):
            raise SidecarFormatError(f"instance {i} overlaps an earlier instance")
        raster[inst.mask] = i
        meta.append(
            {"id": i, "class_id": int(inst.class_id), "score": float(inst.score), "bbox": list(map(int, inst.box))}
        )
    json_path, png_path = sidecar_paths(dir_path, frame_id)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"frame_id": frame_id, "width": w, "height": h, "instances": meta}
    json_path.write_text(json.dumps(doc, indent=1))
    Image.fromarray(raster, mode="L").save(png_path)


def _field_error(path: Path, field: str, msg: str) -> SidecarFormatError:
    return SidecarFormatError(msg, path, field)


def _parse_sidecar(dir_path: str | Path, frame_id: str) -> tuple[list[InstanceMask], list[SidecarFormatError]]:
    json_path, png_path = sidecar_paths(dir_path, frame_id)
    if not json_path.exists():
        raise FileNotFoundError(f"missing sidecar metadata {json_path}")
    if not png_path.exists():
        raise FileNotFoundError(f"missing sidecar raster {png_path}")

    text = json_path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        return [], [_field_error(json_path, f"byte {exc.pos}", f"invalid JSON: {exc.msg}")]

    errors: list[SidecarFormatError] = []
    if not isinstance(doc, dict):
        return [], [_field_error(json_path, "$", "top level must be an object")]
    for key, typ in (("frame_id", str), ("width", int), ("height", int), ("instances", list)):
        if not isinstance(doc.get(key), typ) or isinstance(doc.get(key), bool):
            errors.append(_field_error(json_path, key, f"missing or not {typ.__name__}"))
    if errors:
        return [], errors
    w, h = doc["width"], doc["height"]

    try:
        with Image.open(png_path) as img:
            raster = np.asarray(img)
    except Exception as exc:  # noqa: BLE001 - PIL raises a zoo of types
        return [], [_field_error(png_path, "raster", f"unreadable PNG: {exc}")]
    if raster.ndim != 2 or raster.dtype != np.uint8:
        return [], [_field_error(png_path, "raster", f"expected 8-bit single channel, got {raster.dtype} {raster.shape}")]
    if raster.shape != (h, w):
        return [], [_field_error(png_path, "raster", f"size {raster.shape[1]}x{raster.shape[0]} != {w}x{h}")]

    entries = {}
    for n, item in enumerate(doc["instances"]):
        where = f"instances[{n}]"
        if not isinstance(item, dict):
            errors.append(_field_error(json_path, where, "not an object"))
            continue
        iid = item.get("id")
        if not isinstance(iid, int) or isinstance(iid, bool) or not 1 <= iid <= MAX_INSTANCES:
            errors.append(_field_error(json_path, f"{where}.id", f"id {iid!r} outside 1..{MAX_INSTANCES}"))
            continue
        if iid in entries:
            errors.append(_field_error(json_path, f"{where}.id", f"duplicate id {iid}"))
            continue
        cid = item.get("class_id")
        score = item.get("score")
        bbox = item.get("bbox")
        if not isinstance(cid, int) or isinstance(cid, bool):
            errors.append(_field_error(json_path, f"{where}.class_id", "not an integer"))
            continue
        if not isinstance(score, (int, float)) or isinstance(score, bool) or not 0.0 <= score <= 1.0:
            errors.append(_field_error(json_path, f"{where}.score", f"score {score!r} not in [0, 1]"))
            continue
        if not (isinstance(bbox, list) and len(bbox) == 4 and all(isinstance(v, int) for v in bbox)):
            errors.append(_field_error(json_path, f"{where}.bbox", "expected [x, y, w, h] integers"))
            continue
        entries[iid] = (cid, float(score), BBox(*bbox), where)

    present = set(np.unique(raster).tolist()) - {0}
    for label in sorted(present - entries.keys()):
        errors.append(_field_error(png_path, f"label {label}", "raster label has no metadata entry"))

    instances = []
    for iid in sorted(entries):
        cid, score, bbox, where = entries[iid]
        if iid not in present:
            continue  # zero-area instance, legal and skipped
        mask = raster == iid
        tight = tight_bbox(mask)
        if tuple(bbox) != tuple(tight):
            errors.append(
                _field_error(json_path, f"{where}.bbox", f"instance {iid} bbox {list(bbox)} != raster extent {list(tight)}")
            )
            continue
        instances.append(InstanceMask(mask, tight, cid, score))
    return instances, errors


def load_sidecar(dir_path: str | Path, frame_id: str) -> list[InstanceMask]:
    """Load one frame's instances in ascending id order; raise on any violation."""
    instances, errors = _parse_sidecar(dir_path, frame_id)
    if errors:
        raise errors[0]
    return instances


def validate_sidecar(dir_path: str | Path, frame_id: str) -> list[SidecarFormatError]:
    try:
        return _parse_sidecar(dir_path, frame_id)[1]
    except FileNotFoundError as exc:
        return [SidecarFormatError(str(exc), Path(dir_path) / frame_id, "file")]


def sidecar_frame_ids(dir_path: str | Path) -> list[str]:
    return sorted(p.name[: -len(".json")] for p in Path(dir_path).glob("*.json"))


class SidecarProvider:
    """Masks precomputed on disk, keyed by frame id.

    With ``native_resolution`` (the default) sidecars are taken to be at the
    source frame size and no resize happens; otherwise masks are resampled to
    whatever image the detector hands over.
    """

    def __init__(self, dir_path: str | Path, native_resolution: bool = True):
        self.dir_path = Path(dir_path)
        self.native_resolution = native_resolution

    def infer(self, image: np.ndarray, frame_id: str) -> list[InstanceMask]:
        found = load_sidecar(self.dir_path, frame_id)
        h, w = image.shape[:2]
        out = []
        for inst in found:
            if inst.mask.shape != (h, w):
                inst = InstanceMask.from_mask(resize_nearest(inst.mask, (w, h)), inst.class_id, inst.score)
                if inst is None:
                    continue
            out.append(inst)
        return out


class ExternalProvider:
    """Run ``command MANIFEST OUTDIR`` once per batch of frames.

    The manifest is JSON ``{"frames": [{"frame_id", "path", "width",
    "height"}]}`` pointing at PNG files. The program must write one sidecar per
    frame into OUTDIR and exit 0.
    """

    native_resolution = False

    def __init__(self, command: str | Sequence[str], timeout_per_frame: float = 30.0):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ValueError("empty provider command")
        self.timeout_per_frame = timeout_per_frame
        self._lock = threading.Lock()

    def infer(self, image: np.ndarray, frame_id: str) -> list[InstanceMask]:
        return self.infer_batch([(frame_id, image)])[frame_id]

    def infer_batch(self, frames: Iterable[tuple[str, np.ndarray]]) -> dict[str, list[InstanceMask]]:
        frames = list(frames)
        with self._lock, tempfile.TemporaryDirectory(prefix="la3d-provider-") as tmp:
            tmp = Path(tmp)
            out_dir = tmp / "out"
            out_dir.mkdir()
            manifest = {"frames": []}
            for fid, img in frames:
                p = tmp / f"{fid}.png"
                Image.fromarray(as_frame(img)).save(p)
                manifest["frames"].append({"frame_id": fid, "path": str(p), "width": img.shape[1], "height": img.shape[0]})
            manifest_path = tmp / "manifest.json"
            manifest_path.write_text(json.dumps(manifest))

            timeout = self.timeout_per_frame * max(len(frames), 1)
            try:
                proc = subprocess.run(
                    [*self.command, str(manifest_path), str(out_dir)],
                    capture_output=True,
                    text=True,
                    timeout=timeout,
                )
            except subprocess.TimeoutExpired as exc:
                raise DetectorUnavailable(f"provider timed out after {timeout:.1f}s") from exc
            except OSError as exc:
                raise DetectorUnavailable(f"cannot start provider {self.command[0]!r}: {exc}") from exc
            if proc.returncode != 0:
                raise DetectorUnavailable(
                    f"provider exited with status {proc.returncode}: {proc.stderr.strip()[-500:]}"
                )

            results = {}
            for fid, img in frames:
                try:
                    found = load_sidecar(out_dir, fid)
                except FileNotFoundError as exc:
                    raise DetectorUnavailable(f"provider wrote no sidecar for {fid!r}") from exc
                except SidecarFormatError as exc:
                    raise ProviderOutputError(f"malformed provider output: {exc.args[0]}", exc) from exc
                h, w = img.shape[:2]
                for inst in found:
                    if inst.mask.shape != (h, w):
                        raise DetectorUnavailable(
                            f"provider mask {inst.mask.shape} does not match sent image {(h, w)}"
                        )
                results[fid] = found
            return results
