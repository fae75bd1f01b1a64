"""Command-line entry point.

Exit codes:
  0  success
  1  unexpected internal error
  2  invalid arguments or configuration
  3  input unreadable (missing directory, undecodable frame)
  4  output unwritable
  5  unknown preset
  6  detector unavailable (policy "abort")
  7  mask sidecar format error

Failures print one JSON object on stderr:
``{"error": ..., "exit_code": ..., "message": ..., ...}``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import bench as bench_mod
from .image import InstanceMask
from .io import comparison_grid, list_frames, read_frame, write_frame
from .methods import (
    AnonymizerSpec,
    UnknownPresetError,
    preset_names,
    register_preset,
    resolve_preset,
    spec_from_dict,
)
from .pipeline import FAILURE_POLICIES, process_frame, process_sequence
from .segmentation import (
    DetectorConfig,
    DetectorUnavailable,
    ExternalProvider,
    SidecarFormatError,
    SidecarProvider,
    detect,
    sidecar_frame_ids,
    validate_sidecar,
)

log = logging.getLogger("la3d")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_USAGE = 2
EXIT_INPUT = 3
EXIT_OUTPUT = 4
EXIT_PRESET = 5
EXIT_DETECTOR = 6
EXIT_MASKS = 7


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra: Any):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


@dataclass
class RunConfig:
    input: str | None = None
    masks: str | None = None
    provider_cmd: str | None = None
    output: str | None = None
    preset: str = "BLURRED_A"
    spec: dict | None = None
    presets: list[str] = field(default_factory=list)
    alpha_r: float | None = None
    alpha_b: float | None = None
    ismax: bool | None = None
    isfullblur: bool | None = None
    z_ref: str | None = None
    lambda_: float = 0.25
    include_items: bool = False
    pad_small_inputs: bool = False
    on_detector_failure: str = "abort"
    workers: int = 1
    repeats: int = 3
    report_dir: str | None = None
    user_presets: dict = field(default_factory=dict)

    @classmethod
    def from_sources(cls, config_path: str | None, overrides: dict) -> "RunConfig":
        data: dict = {}
        if config_path:
            try:
                data = json.loads(Path(config_path).read_text())
            except FileNotFoundError:
                raise CliError(EXIT_INPUT, "config_not_found", f"config file {config_path} not found", path=config_path)
            except json.JSONDecodeError as exc:
                raise CliError(EXIT_USAGE, "config_invalid", f"config is not valid JSON: {exc.msg}", path=config_path, offset=exc.pos)
            if not isinstance(data, dict):
                raise CliError(EXIT_USAGE, "config_invalid", "config must be a JSON object", path=config_path)
            if "lambda" in data:
                data["lambda_"] = data.pop("lambda")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise CliError(EXIT_USAGE, "config_invalid", f"unknown config keys: {unknown}")
        overrides = {k: v for k, v in overrides.items() if v is not None and k in known}
        if "preset" in overrides:
            data.pop("spec", None)
        data.update(overrides)
        cfg = cls(**data)
        cfg.check()
        return cfg

    def check(self) -> None:
        """Type-check everything that can be checked before reading frames."""
        try:
            if self.alpha_r is not None and not float(self.alpha_r) > 0:
                raise ValueError("alpha_r must be positive")
            if self.alpha_b is not None and not 0 < float(self.alpha_b) <= 1:
                raise ValueError("alpha_b must be in (0, 1]")
            if not 0 <= float(self.lambda_) <= 1:
                raise ValueError("lambda must be in [0, 1]")
            if self.on_detector_failure not in FAILURE_POLICIES:
                raise ValueError(f"on_detector_failure must be one of {FAILURE_POLICIES}")
            if int(self.workers) < 1:
                raise ValueError("workers must be >= 1")
            if self.z_ref is not None:
                self.z_ref_pair()
            if self.masks and self.provider_cmd:
                raise ValueError("give either --masks or --provider-cmd, not both")
            for name, spec in self.user_presets.items():
                register_preset(name, spec_from_dict(spec))
        except (TypeError, ValueError) as exc:
            raise CliError(EXIT_USAGE, "config_invalid", str(exc)) from exc

    def z_ref_pair(self) -> tuple[int, int] | None:
        if self.z_ref is None:
            return None
        if isinstance(self.z_ref, (list, tuple)):
            w, h = self.z_ref
        else:
            w, h = str(self.z_ref).lower().split("x")
        return int(w), int(h)

    def resolve_spec(self, name: str | None = None) -> AnonymizerSpec:
        try:
            if name is None and self.spec is not None:
                spec = spec_from_dict(self.spec)
            else:
                spec = resolve_preset(name or self.preset)
        except UnknownPresetError as exc:
            raise CliError(EXIT_PRESET, "unknown_preset", str(exc), available=exc.available) from exc
        except (TypeError, ValueError, KeyError) as exc:
            raise CliError(EXIT_USAGE, "spec_invalid", f"inline spec invalid: {exc}") from exc
        overrides = {
            k: v
            for k, v in (
                ("alpha_r", self.alpha_r),
                ("alpha_b", self.alpha_b),
                ("ismax", self.ismax),
                ("isfullblur", self.isfullblur),
                ("z_ref", self.z_ref_pair()),
            )
            if v is not None
        }
        try:
            return spec.with_adaptive(**overrides)
        except ValueError as exc:
            raise CliError(EXIT_USAGE, "config_invalid", str(exc)) from exc

    def detector_config(self) -> DetectorConfig:
        return DetectorConfig(
            confidence_threshold=float(self.lambda_),
            pad_small_inputs=bool(self.pad_small_inputs),
            include_personal_items=bool(self.include_items),
        )

    def provider(self):
        if self.masks:
            if not Path(self.masks).is_dir():
                raise CliError(EXIT_INPUT, "input_unreadable", f"mask directory {self.masks} does not exist", path=self.masks)
            return SidecarProvider(self.masks)
        if self.provider_cmd:
            return ExternalProvider(self.provider_cmd)
        raise CliError(EXIT_USAGE, "config_invalid", "a mask source is required: --masks or --provider-cmd")


# -- helpers ----------------------------------------------------------------


def _frame_paths(cfg: RunConfig) -> list[Path]:
    if not cfg.input:
        raise CliError(EXIT_USAGE, "config_invalid", "--input is required")
    try:
        return list_frames(cfg.input)
    except (FileNotFoundError, NotADirectoryError, PermissionError) as exc:
        raise CliError(EXIT_INPUT, "input_unreadable", str(exc), path=cfg.input) from exc


def _read(path: Path) -> np.ndarray:
    try:
        return read_frame(path)
    except Exception as exc:  # noqa: BLE001 - PIL and OS errors alike
        raise CliError(EXIT_INPUT, "input_unreadable", f"cannot read frame: {exc}", path=str(path)) from exc


def _out_dir(path: str | None, what: str) -> Path:
    if not path:
        raise CliError(EXIT_USAGE, "config_invalid", f"--{what} is required")
    p = Path(path)
    try:
        p.mkdir(parents=True, exist_ok=True)
        probe = p / ".la3d-write-probe"
        probe.write_bytes(b"")
        probe.unlink()
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, "output_unwritable", str(exc), path=str(p)) from exc
    return p


def _write(path: Path, write: Callable[[Path], None]) -> None:
    try:
        write(path)
    except OSError as exc:
        raise CliError(EXIT_OUTPUT, "output_unwritable", str(exc), path=str(path)) from exc


def _detector(cfg: RunConfig) -> Callable[[str, np.ndarray], list[InstanceMask]]:
    provider = cfg.provider()
    det_cfg = cfg.detector_config()

    def run(frame_id: str, frame: np.ndarray) -> list[InstanceMask]:
        return detect(frame, det_cfg, provider, frame_id)

    return run


def _detector_error(exc: DetectorUnavailable) -> CliError:
    cause = exc if isinstance(exc, SidecarFormatError) else exc.__cause__
    if isinstance(cause, SidecarFormatError):
        return CliError(EXIT_MASKS, "mask_format", str(cause), path=cause.path, field=cause.field)
    return CliError(EXIT_DETECTOR, "detector_unavailable", str(exc))


# -- commands ---------------------------------------------------------------


def cmd_anonymize(cfg: RunConfig) -> int:
    spec = cfg.resolve_spec()
    paths = _frame_paths(cfg)
    detector = _detector(cfg)
    out_dir = _out_dir(cfg.output, "output")
    report_dir = _out_dir(cfg.report_dir or cfg.output, "report-dir")
    quarantine_dir = out_dir / "quarantine"

    def source():
        for p in paths:
            yield p.stem, _read(p)

    def sink(fid: str, frame: np.ndarray, report) -> None:
        _write(out_dir / f"{fid}.png", lambda p: write_frame(p, frame))

    def quarantine(fid: str, frame: np.ndarray) -> None:
        quarantine_dir.mkdir(exist_ok=True)
        _write(quarantine_dir / f"{fid}.png", lambda p: write_frame(p, frame))

    try:
        summary = process_sequence(
            source(),
            detector,
            spec,
            sink,
            workers=int(cfg.workers),
            on_detector_failure=cfg.on_detector_failure,
            quarantine=quarantine,
        )
    except DetectorUnavailable as exc:
        raise _detector_error(exc) from exc
    _write(report_dir / "summary.json", summary.write_json)
    _write(report_dir / "per-frame.csv", summary.write_csv)
    log.info("%d frames, %d quarantined, %.1f fps", summary.frames, summary.quarantined, summary.throughput_fps)
    return EXIT_OK


def cmd_bench(cfg: RunConfig) -> int:
    presets = cfg.presets or [cfg.preset]
    for name in presets:
        cfg.resolve_spec(name)
    if int(cfg.repeats) < 3:
        raise CliError(EXIT_USAGE, "config_invalid", "--repeats must be >= 3")
    paths = _frame_paths(cfg)
    detector = _detector(cfg)
    report_dir = _out_dir(cfg.report_dir or cfg.output, "report-dir")
    corpus = [(p.stem, _read(p)) for p in paths]
    try:
        results = bench_mod.run_bench(corpus, detector, presets, repeats=int(cfg.repeats))
    except DetectorUnavailable as exc:
        raise _detector_error(exc) from exc
    rows = bench_mod.bench_rows(results)
    overhead = bench_mod.overhead_rows(results)
    _write(report_dir / "bench.csv", lambda p: bench_mod.write_rows(p, bench_mod.BENCH_COLUMNS, rows))
    _write(report_dir / "overhead.csv", lambda p: bench_mod.write_rows(p, bench_mod.OVERHEAD_COLUMNS, overhead))
    for row in overhead:
        print(f"{row['preset']:<18} total {row['total_median_us']:>10.1f} us  vs raw {row['overhead_vs_raw_pct']:>8.2f}%")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    presets = cfg.presets
    if len(presets) < 2:
        raise CliError(EXIT_USAGE, "config_invalid", "compare needs at least two presets")
    specs = [cfg.resolve_spec(name) for name in presets]
    paths = _frame_paths(cfg)
    detector = _detector(cfg)
    out_dir = _out_dir(cfg.output, "output")
    for p in paths:
        frame = _read(p)
        try:
            instances = detector(p.stem, frame)
        except DetectorUnavailable as exc:
            raise _detector_error(exc) from exc
        panels = [process_frame(frame, instances, s, p.stem, metrics=False)[0] for s in specs]
        grid = comparison_grid(panels, presets)
        _write(out_dir / f"{p.stem}.png", lambda q: write_frame(q, grid))
    return EXIT_OK


def cmd_validate_masks(cfg: RunConfig, strict: bool = False) -> int:
    mask_dir = cfg.masks
    if not mask_dir or not Path(mask_dir).is_dir():
        raise CliError(EXIT_INPUT, "input_unreadable", f"mask directory {mask_dir} does not exist", path=mask_dir)
    violations = []
    ids = sidecar_frame_ids(mask_dir)
    for fid in ids:
        for err in validate_sidecar(mask_dir, fid):
            violations.append({"frame_id": fid, "file": err.path, "field": err.field, "message": err.args[0]})
    print(json.dumps({"frames": len(ids), "violations": violations}, indent=2))
    return EXIT_MASKS if strict and violations else EXIT_OK


# -- argument parsing -------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--input", help="directory of frames (lexicographic order = time order)")
    p.add_argument("--masks", help="directory of sidecar masks")
    p.add_argument("--provider-cmd", dest="provider_cmd", help="external segmentation command")
    p.add_argument("--output", help="output directory")
    p.add_argument("--report-dir", dest="report_dir", help="where reports go (default: --output)")
    p.add_argument("--alpha-r", dest="alpha_r", type=float)
    p.add_argument("--alpha-b", dest="alpha_b", type=float)
    p.add_argument("--ismax", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--isfullblur", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--z-ref", dest="z_ref", metavar="WxH", help="reference size; sets alpha_r = Z / Z_ref")
    p.add_argument("--lambda", dest="lambda_", type=float, help="detection confidence threshold")
    p.add_argument("--include-items", dest="include_items", action="store_const", const=True, default=None,
                   help="also anonymize handbags, backpacks, umbrellas, suitcases, phones, laptops")
    p.add_argument("--pad-small", dest="pad_small_inputs", action="store_const", const=True, default=None,
                   help="reversibly pad frames smaller than the inference size")
    p.add_argument("--on-detector-failure", dest="on_detector_failure", choices=FAILURE_POLICIES)
    p.add_argument("--workers", type=int)


def _presets_arg(value: str) -> list[str]:
    return [v for v in value.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="la3d",
        description="Adaptive full-body anonymization of video frames.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__.split("\n", 2)[2],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anonymize", help="anonymize a frame directory")
    _add_common(p)
    p.add_argument("--preset")

    p = sub.add_parser("bench", help="latency benchmark of presets")
    _add_common(p)
    p.add_argument("--preset", dest="presets", action="append", help="repeatable, or comma separated")
    p.add_argument("--repeats", type=int)

    p = sub.add_parser("compare", help="side-by-side grid of presets per frame")
    _add_common(p)
    p.add_argument("--preset", dest="presets", action="append", help="repeatable, or comma separated")

    p = sub.add_parser("validate-masks", help="check sidecar files against the format")
    p.add_argument("masks", nargs="?")
    p.add_argument("--masks", dest="masks_flag")
    p.add_argument("--strict", action="store_true", help="exit 7 when violations are found")

    sub.add_parser("presets", help="list preset names")
    return parser


def _setup_logging() -> None:
    level = os.environ.get("LA3D_LOG_LEVEL", "warn").lower()
    levels = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
              "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def _report(err: CliError) -> None:
    payload = {"error": err.kind, "exit_code": err.code, "message": str(err), **err.extra}
    print(json.dumps(payload), file=sys.stderr)
    if err.kind == "unknown_preset":
        print("available presets: " + ", ".join(err.extra.get("available", [])), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        if args.command == "presets":
            for name in preset_names():
                print(name)
            return EXIT_OK
        if args.command == "validate-masks":
            cfg = RunConfig(masks=args.masks_flag or args.masks)
            return cmd_validate_masks(cfg, strict=args.strict)

        overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        if overrides.get("presets"):
            overrides["presets"] = [n for v in overrides["presets"] for n in _presets_arg(v)]
        cfg = RunConfig.from_sources(args.config, overrides)
        if args.command == "anonymize":
            return cmd_anonymize(cfg)
        if args.command == "bench":
            return cmd_bench(cfg)
        return cmd_compare(cfg)
    except CliError as err:
        _report(err)
        return err.code
    except Exception as exc:  # noqa: BLE001 - last-resort report, still machine-readable
        log.debug("internal error", exc_info=True)
        _report(CliError(EXIT_INTERNAL, "internal", f"{type(exc).__name__}: {exc}"))
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
