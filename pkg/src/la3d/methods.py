"""Anonymization method descriptions and the named preset registry."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

from .filters import CannyParams, ParameterError


class Kind(str, enum.Enum):
    RAW = "raw"
    BLACKENED = "blackened"
    BLACKENED_EDGED = "blackened_edged"
    BLURRED = "blurred"
    PIXELIZED = "pixelized"
    BLURRED_ADAPTIVE = "blurred_adaptive"
    PIXELIZED_ADAPTIVE = "pixelized_adaptive"

    @property
    def adaptive(self) -> bool:
        return self in (Kind.BLURRED_ADAPTIVE, Kind.PIXELIZED_ADAPTIVE)

    @property
    def blur(self) -> bool:
        return self in (Kind.BLURRED, Kind.BLURRED_ADAPTIVE)

    @property
    def pixel(self) -> bool:
        return self in (Kind.PIXELIZED, Kind.PIXELIZED_ADAPTIVE)


@dataclass(frozen=True)
class AdaptiveParams:
    """Knobs of the adaptive mechanism.

    ``alpha_r`` scales the log relative area, ``alpha_b`` caps growth at a
    fraction of the box size, ``ismax`` forces box-sized parameters and
    ``isfullblur`` lets r scale the blur sigma too. ``z_ref`` (width, height)
    replaces ``alpha_r`` with the area ratio of the frame to the reference.
    """

    alpha_r: float = 1.0
    alpha_b: float = 0.5
    ismax: bool = False
    isfullblur: bool = False
    z_ref: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.alpha_r > 0:
            raise ParameterError(f"alpha_r must be positive, got {self.alpha_r}")
        if not 0 < self.alpha_b <= 1:
            raise ParameterError(f"alpha_b must be in (0, 1], got {self.alpha_b}")
        if self.z_ref is not None and (len(self.z_ref) != 2 or min(self.z_ref) < 1):
            raise ParameterError(f"z_ref must be a positive (width, height) pair, got {self.z_ref}")

    def alpha_r_for(self, width: int, height: int) -> float:
        if self.z_ref is None:
            return self.alpha_r
        return (width * height) / (self.z_ref[0] * self.z_ref[1])


@dataclass(frozen=True)
class BlurBase:
    """Base Gaussian: kernel size as (height, width) and sigma."""

    k: tuple[int, int] = (13, 13)
    sigma: float = 10.0

    def __post_init__(self) -> None:
        if any(int(v) != v or v < 1 or v % 2 == 0 for v in self.k):
            raise ParameterError(f"kernel sizes must be odd and >= 1, got {self.k}")
        if not self.sigma > 0:
            raise ParameterError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class PixelizeBase:
    d: int = 4

    def __post_init__(self) -> None:
        if int(self.d) != self.d or self.d < 1:
            raise ParameterError(f"downsizing factor must be >= 1, got {self.d}")


@dataclass(frozen=True)
class AnonymizerSpec:
    kind: Kind
    blur: BlurBase | None = None
    pixel: PixelizeBase | None = None
    canny: CannyParams | None = None
    adaptive: AdaptiveParams | None = None
    preset_name: str = ""

    def __post_init__(self) -> None:
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind.blur and self.blur is None:
            raise ParameterError(f"{kind.value} needs blur parameters")
        if kind.pixel and self.pixel is None:
            raise ParameterError(f"{kind.value} needs a downsizing factor")
        if kind is Kind.BLACKENED_EDGED and self.canny is None:
            raise ParameterError("blackened_edged needs Canny thresholds")
        if kind.adaptive and self.adaptive is None:
            raise ParameterError(f"{kind.value} needs adaptive parameters")

    def with_adaptive(self, **overrides) -> "AnonymizerSpec":
        """Copy with adaptive fields replaced; no-op for fixed kinds."""
        if not self.kind.adaptive or not overrides:
            return self
        return replace(self, adaptive=replace(self.adaptive, **overrides))


class UnknownPresetError(KeyError):
    def __init__(self, name: str, available: list[str]):
        super().__init__(name)
        self.name = name
        self.available = available

    def __str__(self) -> str:
        return f"unknown preset {self.name!r}; available: {', '.join(self.available)}"


def _builtin_presets() -> dict[str, AnonymizerSpec]:
    canny = CannyParams(100, 200)
    blur = BlurBase((13, 13), 10.0)
    adaptive = AdaptiveParams(alpha_r=1.0, alpha_b=0.5)
    out = {
        "RAW_IMAGE": AnonymizerSpec(Kind.RAW),
        "BLACKENED": AnonymizerSpec(Kind.BLACKENED),
        "BLACKENED_EDGED": AnonymizerSpec(Kind.BLACKENED_EDGED, canny=canny),
        "BLURRED": AnonymizerSpec(Kind.BLURRED, blur=blur),
        "BLURRED_A": AnonymizerSpec(Kind.BLURRED_ADAPTIVE, blur=blur, adaptive=adaptive),
        "BLURRED_A_MAX": AnonymizerSpec(
            Kind.BLURRED_ADAPTIVE, blur=blur, adaptive=replace(adaptive, ismax=True)
        ),
        # ismax ignores the base factor; 4 only satisfies AnonymizerSpec validation
        "PIXELIZED_A_MAX": AnonymizerSpec(
            Kind.PIXELIZED_ADAPTIVE, pixel=PixelizeBase(4), adaptive=replace(adaptive, ismax=True)
        ),
    }
    for d in (2, 4, 8):
        out[f"PIXELIZED_D{d}"] = AnonymizerSpec(Kind.PIXELIZED, pixel=PixelizeBase(d))
        out[f"PIXELIZED_D{d}_A"] = AnonymizerSpec(
            Kind.PIXELIZED_ADAPTIVE, pixel=PixelizeBase(d), adaptive=adaptive
        )
    return {name: replace(spec, preset_name=name) for name, spec in out.items()}


PRESETS: dict[str, AnonymizerSpec] = _builtin_presets()
_user_presets: dict[str, AnonymizerSpec] = {}


def preset_names() -> list[str]:
    return list(PRESETS) + [n for n in _user_presets if n not in PRESETS]


def register_preset(name: str, spec: AnonymizerSpec) -> None:
    if name in PRESETS:
        raise ParameterError(f"preset {name!r} is built in and cannot be redefined")
    _user_presets[name] = replace(spec, preset_name=name)


def resolve_preset(name: str) -> AnonymizerSpec:
    if name in PRESETS:
        return PRESETS[name]
    if name in _user_presets:
        return _user_presets[name]
    raise UnknownPresetError(name, preset_names())


def spec_from_dict(d: dict) -> AnonymizerSpec:
    """Build a spec from its JSON form (as found in config files)."""
    d = dict(d)
    kind = Kind(d.pop("kind"))
    blur = d.pop("blur", None)
    pixel = d.pop("pixel", None)
    canny = d.pop("canny", None)
    adaptive = d.pop("adaptive", None)
    name = d.pop("preset_name", d.pop("name", ""))
    if d:
        raise ParameterError(f"unknown spec fields: {sorted(d)}")
    if blur is not None:
        blur = BlurBase(k=tuple(blur.get("k", (13, 13))), sigma=float(blur.get("sigma", 10.0)))
    if pixel is not None:
        pixel = PixelizeBase(int(pixel["d"]))
    if canny is not None:
        canny = CannyParams(float(canny["low"]), float(canny["high"]))
    if adaptive is not None:
        adaptive = dict(adaptive)
        if adaptive.get("z_ref") is not None:
            adaptive["z_ref"] = tuple(adaptive["z_ref"])
        adaptive = AdaptiveParams(**adaptive)
    return AnonymizerSpec(kind, blur, pixel, canny, adaptive, name)


def spec_to_dict(spec: AnonymizerSpec) -> dict:
    out: dict = {"kind": spec.kind.value, "preset_name": spec.preset_name}
    if spec.blur:
        out["blur"] = {"k": list(spec.blur.k), "sigma": spec.blur.sigma}
    if spec.pixel:
        out["pixel"] = {"d": spec.pixel.d}
    if spec.canny:
        out["canny"] = {"low": spec.canny.low_threshold, "high": spec.canny.high_threshold}
    if spec.adaptive:
        a = spec.adaptive
        out["adaptive"] = {
            "alpha_r": a.alpha_r,
            "alpha_b": a.alpha_b,
            "ismax": a.ismax,
            "isfullblur": a.isfullblur,
            "z_ref": list(a.z_ref) if a.z_ref else None,
        }
    return out
