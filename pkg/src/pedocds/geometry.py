"""Numeric design geometry behind the coded prescription.

Rocker profile, heel heights, fit allowances, insole layer stacks,
metatarsal additions, arch support and cut-outs.  Every band lives in
:class:`DesignConstants` (shipped as an editable JSON config); operations
emit values at band midpoints, and validators re-derive band membership so
``validate(spec(x))`` never errors for anatomically sensible inputs.

Units: lengths mm, angles degrees, hardness Shore A.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Optional

from .validation import ValidationReport


class GeometryError(ValueError):
    """Precondition violation or unknown code in a geometry operation."""


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; lo <= hi enforced at construction."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise GeometryError(f"interval lower bound {self.lo} exceeds upper {self.hi}")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def shift(self, delta: float) -> "Interval":
        return Interval(self.lo + delta, self.hi + delta)

    def scale(self, factor: float) -> "Interval":
        return Interval(self.lo * factor, self.hi * factor)

    @property
    def midpoint(self) -> float:
        return (self.lo + self.hi) / 2.0

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def as_list(self) -> list[float]:
        return [self.lo, self.hi]


def _covered_by(value: Interval, a: Interval, b: Interval) -> bool:
    """True when every point of ``value`` lies in a ∪ b."""
    def point_in(x: float) -> bool:
        return a.contains(x) or b.contains(x)

    if not (point_in(value.lo) and point_in(value.hi)):
        return False
    # Disjoint bands leave a gap; value must not straddle it.
    gap_lo, gap_hi = min(a.hi, b.hi), max(a.lo, b.lo)
    if gap_lo < gap_hi and value.lo < gap_lo and value.hi > gap_hi:
        return False
    return True


def _iv(raw) -> Interval:
    return Interval(float(raw[0]), float(raw[1]))


@dataclass(frozen=True)
class DesignConstants:
    """Evidence bands for every numeric design parameter (all editable)."""

    apex_fraction: Interval = Interval(0.60, 0.65)
    apex_behind_mth_mm: Interval = Interval(10.0, 15.0)
    rocker_angle_default_deg: Interval = Interval(15.0, 20.0)
    rocker_bands_deg: dict = field(default_factory=lambda: {
        "FWRANG1": Interval(12.0, 15.0),
        "FWRANG2": Interval(20.0, 45.0),
        "FWRANG3": Interval(30.0, 45.0),
    })
    apex_angle_default_deg: float = 95.0
    apex_rotation_deg: float = 5.0
    apex_position_shift_mm: float = 5.0
    met_position_shift_mm: float = 5.0
    toe_allowance_min_mm: float = 10.0
    heel_height_male_mm: Interval = Interval(15.0, 20.0)
    heel_height_female_mm: Interval = Interval(25.0, 30.0)
    heel_height_lowered_mm: Interval = Interval(10.0, 15.0)
    prefab_heel_lift_max_mm: float = 10.0
    met_addition_thickness_mm: Interval = Interval(5.0, 11.0)
    met_addition_hardness_shore_a: Interval = Interval(30.0, 35.0)
    met_addition_proximal_mm: Interval = Interval(6.0, 11.0)
    mla_addition_mm: Interval = Interval(3.0, 5.0)
    cutout_depth_mm: float = 5.0
    cutout_pad_thickness_mm: float = 3.0
    cutout_pad_hardness_max_shore_a: float = 30.0
    oedema_volume_layer_mm: float = 1.5
    top_cover_replace_months: Interval = Interval(3.0, 6.0)
    # Layer stack bands (base class depends on footwear type / process)
    custom_base_hardness_shore_a: Interval = Interval(55.0, 65.0)
    printed_base_hardness_shore_a: Interval = Interval(45.0, 55.0)
    prefab_base_hardness_shore_a: Interval = Interval(35.0, 40.0)
    base_upper_hardness_shore_a: Interval = Interval(35.0, 40.0)
    mid_hardness_shore_a: Interval = Interval(30.0, 35.0)
    top_cover_hardness_shore_a: Interval = Interval(10.0, 25.0)
    custom_base_thickness_mm: float = 5.0
    base_upper_thickness_mm: float = 5.0
    prefab_base_thickness_mm: float = 6.0
    mid_thickness_mm: Interval = Interval(3.0, 6.0)
    top_thickness_mm: Interval = Interval(3.0, 5.0)
    # Sanity spans used by validators
    apex_span_sanity_fraction: Interval = Interval(0.55, 0.70)
    apex_angle_sanity_deg: Interval = Interval(80.0, 110.0)
    rocker_angle_sanity_deg: Interval = Interval(5.0, 45.0)
    axis_offset_mth1_mm: Interval = Interval(10.0, 15.0)
    axis_offset_mth2_mm: Interval = Interval(20.0, 30.0)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "DesignConstants":
        kwargs = {}
        for key, raw in doc.items():
            if key == "rocker_bands_deg":
                kwargs[key] = {code: _iv(band) for code, band in raw.items()}
            elif isinstance(raw, (list, tuple)):
                kwargs[key] = _iv(raw)
            else:
                kwargs[key] = float(raw)
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        out: dict = {}
        for name, value in self.__dict__.items():
            if isinstance(value, Interval):
                out[name] = value.as_list()
            elif isinstance(value, dict):
                out[name] = {code: band.as_list() for code, band in value.items()}
            else:
                out[name] = value
        return out

    def with_overrides(self, **kwargs) -> "DesignConstants":
        return replace(self, **kwargs)


@lru_cache(maxsize=1)
def design_defaults() -> DesignConstants:
    text = resources.files("pedocds.data").joinpath("design_constants.json").read_text("utf-8")
    return DesignConstants.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class FootMeasurements:
    foot_length_mm: float
    foot_width_mm: float
    mth1_from_heel_mm: Optional[float] = None
    mth2_from_heel_mm: Optional[float] = None
    mth_line_from_heel_mm: Optional[float] = None
    sex: str = "unspecified"
    body_weight_kg: Optional[float] = None

    def __post_init__(self) -> None:
        if self.foot_length_mm <= 0 or self.foot_width_mm <= 0:
            raise GeometryError("foot dimensions must be positive")
        if self.sex not in ("male", "female", "unspecified"):
            raise GeometryError(f"unknown sex {self.sex!r}")
        for name in ("mth1_from_heel_mm", "mth2_from_heel_mm", "mth_line_from_heel_mm"):
            v = getattr(self, name)
            if v is not None and not (0 < v < self.foot_length_mm):
                raise GeometryError(f"{name}={v} must lie within the foot length")
        if self.body_weight_kg is not None and self.body_weight_kg <= 0:
            raise GeometryError("body weight must be positive")


# ---------------------------------------------------------------------------
# Rocker profile
# ---------------------------------------------------------------------------

_FWT_CODES = ("FWT1", "FWT2", "FWT3")
_FWRAP_CODES = ("FWRAP1", "FWRAP2", "FWRAP3")
_FWRAA_CODES = ("FWRAA1", "FWRAA2", "FWRAA3")
_FWHH_CODES = ("FWHH1", "FWHH2", "FWHH3")


def _check_code(code: str, allowed: tuple[str, ...], what: str) -> str:
    if code not in allowed:
        raise GeometryError(f"unknown {what} code {code!r}")
    return code


@dataclass(frozen=True)
class RockerSpec:
    """Rocker design sheet: apex interval, angles, placement and codes.

    Out-of-band angles are reported by :func:`validate_rocker` rather than
    rejected at construction, so drafts can be checked.
    """

    apex_from_heel_mm: Interval
    rocker_angle_deg: Interval
    apex_angle_deg: float
    apex_direction: str  # none | medial | lateral
    apex_rotation_deg: float
    placement: str  # insole | outsole
    severity_code: str
    apex_position_code: str
    apex_direction_code: str
    shoe_interior_length_mm: float

    def __post_init__(self) -> None:
        if self.shoe_interior_length_mm <= 0:
            raise GeometryError("shoe interior length must be positive")
        if self.placement not in ("insole", "outsole"):
            raise GeometryError(f"unknown placement {self.placement!r}")

    def to_json_dict(self) -> dict:
        return {
            "apex_from_heel_mm": self.apex_from_heel_mm.as_list(),
            "rocker_angle_deg": self.rocker_angle_deg.as_list(),
            "apex_angle_deg": self.apex_angle_deg,
            "apex_direction": self.apex_direction,
            "apex_rotation_deg": self.apex_rotation_deg,
            "placement": self.placement,
            "severity_code": self.severity_code,
            "apex_position_code": self.apex_position_code,
            "apex_direction_code": self.apex_direction_code,
            "shoe_interior_length_mm": self.shoe_interior_length_mm,
        }


def rocker_spec(m: FootMeasurements, shoe_interior_length_mm: float, *,
                fwt_code: str, fwrap_code: str = "FWRAP1",
                fwraa_code: str = "FWRAA1", fwrang_code: str = "FWRANG1",
                k: DesignConstants | None = None) -> RockerSpec:
    """Derive the rocker design sheet from measurements and coded choices.

    Apex placement uses the metatarsal line when measured (10-15 mm
    proximal), otherwise the proportional 60-65% of interior length.
    """
    k = k or design_defaults()
    _check_code(fwt_code, _FWT_CODES, "footwear type")
    _check_code(fwrap_code, _FWRAP_CODES, "apex position")
    _check_code(fwraa_code, _FWRAA_CODES, "apex direction")
    if fwrang_code not in k.rocker_bands_deg:
        raise GeometryError(f"unknown rocker severity code {fwrang_code!r}")

    allowance = shoe_interior_length_mm - m.foot_length_mm
    if allowance < k.toe_allowance_min_mm:
        raise GeometryError(
            f"insufficient interior length: toe allowance {allowance:g}mm "
            f"< {k.toe_allowance_min_mm:g}mm"
        )

    if m.mth_line_from_heel_mm is not None:
        apex = Interval(
            m.mth_line_from_heel_mm - k.apex_behind_mth_mm.hi,
            m.mth_line_from_heel_mm - k.apex_behind_mth_mm.lo,
        )
    else:
        apex = k.apex_fraction.scale(shoe_interior_length_mm)

    if fwrap_code == "FWRAP2":  # early / posterior
        apex = apex.shift(-k.apex_position_shift_mm)
    elif fwrap_code == "FWRAP3":  # delayed / anterior
        apex = apex.shift(k.apex_position_shift_mm)

    if fwraa_code == "FWRAA1":
        direction, rotation = "none", 0.0
    elif fwraa_code == "FWRAA2":
        direction, rotation = "medial", k.apex_rotation_deg
    else:
        direction, rotation = "lateral", -k.apex_rotation_deg

    return RockerSpec(
        apex_from_heel_mm=apex,
        rocker_angle_deg=k.rocker_bands_deg[fwrang_code],
        apex_angle_deg=k.apex_angle_default_deg + rotation,
        apex_direction=direction,
        apex_rotation_deg=abs(rotation),
        placement="insole" if fwt_code == "FWT1" else "outsole",
        severity_code=fwrang_code,
        apex_position_code=fwrap_code,
        apex_direction_code=fwraa_code,
        shoe_interior_length_mm=shoe_interior_length_mm,
    )


def validate_rocker(spec: RockerSpec, k: DesignConstants | None = None,
                    axis_offsets_mm: tuple[float, float] | None = None) -> ValidationReport:
    """Re-derive band membership for a rocker sheet.

    The rocker-angle evidence genuinely conflicts between the coded severity
    bands and the general 15-20 recommendation; an angle sanctioned by only
    one source is surfaced as a warning naming both, never silently passed.
    """
    k = k or design_defaults()
    report = ValidationReport()
    length = spec.shoe_interior_length_mm

    span = k.apex_span_sanity_fraction.scale(length)
    if spec.apex_from_heel_mm.lo < span.lo or spec.apex_from_heel_mm.hi > span.hi:
        report.error(
            "apex-out-of-span",
            f"apex interval [{spec.apex_from_heel_mm.lo:g}, {spec.apex_from_heel_mm.hi:g}]mm "
            f"outside {k.apex_span_sanity_fraction.lo:.0%}-{k.apex_span_sanity_fraction.hi:.0%} "
            f"of the {length:g}mm interior length",
        )

    if not k.apex_angle_sanity_deg.contains(spec.apex_angle_deg):
        report.error(
            "apex-angle-out-of-band",
            f"apex angle {spec.apex_angle_deg:g} outside "
            f"[{k.apex_angle_sanity_deg.lo:g}, {k.apex_angle_sanity_deg.hi:g}] degrees",
        )

    code_band = k.rocker_bands_deg.get(spec.severity_code)
    if code_band is None:
        report.error("unknown-code", f"unknown rocker severity code {spec.severity_code!r}")
    else:
        default = k.rocker_angle_default_deg
        angle = spec.rocker_angle_deg
        if default.contains_interval(angle):
            pass
        elif _covered_by(angle, code_band, default):
            report.warning(
                "source-conflict",
                f"rocker angle [{angle.lo:g}, {angle.hi:g}] degrees sits outside the general "
                f"[{default.lo:g}, {default.hi:g}] recommendation but inside the "
                f"{spec.severity_code} band [{code_band.lo:g}, {code_band.hi:g}]; "
                "the two evidence sources conflict",
            )
        else:
            report.error(
                "rocker-angle-out-of-band",
                f"rocker angle [{angle.lo:g}, {angle.hi:g}] degrees outside both the "
                f"{spec.severity_code} band and the general recommendation",
            )

    if axis_offsets_mm is not None:
        off1, off2 = axis_offsets_mm
        if not k.axis_offset_mth1_mm.contains(off1):
            report.warning("axis-offset-mth1",
                           f"axis sits {off1:g}mm proximal to MTH1, outside "
                           f"[{k.axis_offset_mth1_mm.lo:g}, {k.axis_offset_mth1_mm.hi:g}]mm")
        if not k.axis_offset_mth2_mm.contains(off2):
            report.warning("axis-offset-mth2",
                           f"axis sits {off2:g}mm proximal to MTH2, outside "
                           f"[{k.axis_offset_mth2_mm.lo:g}, {k.axis_offset_mth2_mm.hi:g}]mm")
        if off2 < off1:
            report.warning("axis-orientation",
                           "axis should sit further proximal at MTH2 than MTH1 "
                           "(medially more distal)")
    return report


# ---------------------------------------------------------------------------
# Fit and heel height
# ---------------------------------------------------------------------------

def fit_check(m: FootMeasurements, shoe_interior_length_mm: float,
              oedema_present: bool = False,
              k: DesignConstants | None = None) -> ValidationReport:
    """Toe allowance and oedema accommodation checks."""
    k = k or design_defaults()
    report = ValidationReport()
    allowance = shoe_interior_length_mm - m.foot_length_mm
    if allowance < k.toe_allowance_min_mm:
        report.error(
            "toe-allowance",
            f"toe allowance {allowance:g}mm < {k.toe_allowance_min_mm:g}mm",
        )
    if oedema_present:
        report.advisory(
            "oedema-volume-layer",
            f"add {k.oedema_volume_layer_mm:g}mm flat volume layer below the insole "
            "to moderate interior volume with changing oedema",
        )
        report.advisory(
            "oedema-upper",
            "low-cut upper preferred with oedema or vulnerable skin; pad the inner "
            "and keep the top edge above the vulnerable area if high-cut is indicated",
        )
    return report


@dataclass(frozen=True)
class HeelHeightSpec:
    band_mm: Interval
    heel_code: str
    footwear_code: str
    sex: str
    lift_mm: float
    report: ValidationReport

    def to_json_dict(self) -> dict:
        return {
            "band_mm": self.band_mm.as_list(),
            "heel_code": self.heel_code,
            "footwear_code": self.footwear_code,
            "sex": self.sex,
            "lift_mm": self.lift_mm,
            "findings": self.report.to_json_dict()["findings"],
        }


def heel_height_spec(sex: str, fwhh_code: str, fwt_code: str,
                     k: DesignConstants | None = None,
                     lift_mm: float | None = None) -> HeelHeightSpec:
    """Heel height band for the coded choice.

    Increased heights (FWHH3) go through a heel lift; in prefabricated
    footwear the lift lives in the insole and may not exceed the configured
    maximum.
    """
    k = k or design_defaults()
    _check_code(fwhh_code, _FWHH_CODES, "heel height")
    _check_code(fwt_code, _FWT_CODES, "footwear type")
    report = ValidationReport()

    if sex == "male":
        base = k.heel_height_male_mm
    elif sex == "female":
        base = k.heel_height_female_mm
    elif sex == "unspecified":
        base = k.heel_height_male_mm.hull(k.heel_height_female_mm)
        report.warning(
            "sex-unspecified",
            f"sex unspecified: using the union [{base.lo:g}, {base.hi:g}]mm of the male "
            f"[{k.heel_height_male_mm.lo:g}, {k.heel_height_male_mm.hi:g}] and female "
            f"[{k.heel_height_female_mm.lo:g}, {k.heel_height_female_mm.hi:g}] bands",
        )
    else:
        raise GeometryError(f"unknown sex {sex!r}")

    lift = 0.0
    if fwhh_code == "FWHH1":
        band = base
    elif fwhh_code == "FWHH2":
        band = k.heel_height_lowered_mm
        report.warning(
            "source-conflict",
            f"lowered band [{band.lo:g}, {band.hi:g}]mm follows the offloading trial "
            f"finding and departs from the standard band [{base.lo:g}, {base.hi:g}]mm; "
            "the two evidence sources conflict",
        )
    else:  # FWHH3
        lift = k.prefab_heel_lift_max_mm if lift_mm is None else float(lift_mm)
        if lift <= 0:
            raise GeometryError("increased heel height requires a positive lift")
        if fwt_code in ("FWT2", "FWT3") and lift > k.prefab_heel_lift_max_mm:
            raise GeometryError(
                f"prefab insole lift exceeds {k.prefab_heel_lift_max_mm:g}mm"
            )
        band = base.shift(lift)

    return HeelHeightSpec(band_mm=band, heel_code=fwhh_code, footwear_code=fwt_code,
                          sex=sex, lift_mm=lift, report=report)


# ---------------------------------------------------------------------------
# Insole layer stack
# ---------------------------------------------------------------------------

_LAYER_ROLES = ("base", "base_upper", "mid", "top", "metatarsal_addition", "cutout_pad")
_STACK_ORDER = ("base", "base_upper", "mid", "top")


@dataclass(frozen=True)
class LayerSpec:
    role: str
    thickness_mm: float
    hardness_shore_a: float
    material_note: str = ""

    def __post_init__(self) -> None:
        if self.role not in _LAYER_ROLES:
            raise GeometryError(f"unknown layer role {self.role!r}")
        if self.thickness_mm <= 0:
            raise GeometryError("layer thickness must be positive")
        if not (5.0 <= self.hardness_shore_a <= 90.0):
            raise GeometryError(
                f"hardness {self.hardness_shore_a:g} Shore A outside the [5, 90] sanity band"
            )

    def to_json_dict(self) -> dict:
        return {
            "role": self.role,
            "thickness_mm": self.thickness_mm,
            "hardness_shore_a": self.hardness_shore_a,
            "material_note": self.material_note,
        }


@dataclass(frozen=True)
class InsoleStack:
    layers: tuple[LayerSpec, ...]
    footwear_type_code: str

    def __post_init__(self) -> None:
        roles = [l.role for l in self.layers if l.role in _STACK_ORDER]
        if roles.count("base") != 1:
            raise GeometryError("stack must contain exactly one base layer")
        order = [_STACK_ORDER.index(r) for r in roles]
        if order != sorted(order) or len(set(roles)) != len(roles):
            raise GeometryError("stack layers must run base, base_upper?, mid, top")

    def layer(self, role: str) -> LayerSpec:
        for l in self.layers:
            if l.role == role:
                return l
        raise KeyError(role)

    def to_json_dict(self) -> dict:
        return {
            "footwear_type_code": self.footwear_type_code,
            "layers": [l.to_json_dict() for l in self.layers],
        }


def _band_point(band: Interval, position: str) -> float:
    if position == "top":
        return band.hi
    if position == "bottom":
        return band.lo
    return band.midpoint


def insole_stack_spec(fwt_code: str, insblm_code: str, insmlm_code: str,
                      instlm_code: str, k: DesignConstants | None = None,
                      printed_base: bool = False,
                      dual_density: bool = False) -> InsoleStack:
    """Build the layer stack with hardness/thickness at band midpoints.

    The base-layer code picks the material class (custom footwear only; a
    prefabricated base comes with the shoe).  Mid and top codes pick the
    softer or firmer end of their class band.
    """
    k = k or design_defaults()
    _check_code(fwt_code, _FWT_CODES, "footwear type")
    _check_code(insblm_code, ("INSBLM1", "INSBLM2", "INSBLM3"), "base layer material")
    _check_code(insmlm_code, ("INSMLM1", "INSMLM2"), "mid layer material")
    _check_code(instlm_code, ("INSTLM1", "INSTLM2", "INSTLM3"), "top layer material")

    layers = []
    if fwt_code == "FWT1":
        if printed_base:
            base_band, base_note = k.printed_base_hardness_shore_a, "3D-printed TPU base"
        elif insblm_code == "INSBLM1":
            base_band, base_note = k.custom_base_hardness_shore_a, "firm micro-cork base"
        elif insblm_code == "INSBLM2":
            base_band, base_note = k.printed_base_hardness_shore_a, "medium-hard base"
        else:
            base_band, base_note = k.base_upper_hardness_shore_a, "soft EVA-class base"
        layers.append(LayerSpec("base", k.custom_base_thickness_mm,
                                base_band.midpoint, base_note))
        if dual_density:
            layers.append(LayerSpec("base_upper", k.base_upper_thickness_mm,
                                    k.base_upper_hardness_shore_a.midpoint,
                                    "dual-density EVA upper base"))
    else:
        # Prefabricated footwear: EVA base as supplied, code recorded only.
        layers.append(LayerSpec("base", k.prefab_base_thickness_mm,
                                k.prefab_base_hardness_shore_a.midpoint,
                                f"prefabricated EVA base ({insblm_code})"))

    mid_hard = _band_point(k.mid_hardness_shore_a,
                           "top" if insmlm_code == "INSMLM1" else "bottom")
    layers.append(LayerSpec("mid", k.mid_thickness_mm.midpoint, mid_hard,
                            "Poron/PPT shock-absorbing mid-layer"))

    top_position = {"INSTLM2": "top", "INSTLM1": "mid", "INSTLM3": "bottom"}[instlm_code]
    top_note = {"INSTLM1": "Soft", "INSTLM2": "Medium soft", "INSTLM3": "Very soft"}[instlm_code]
    layers.append(LayerSpec("top", k.top_thickness_mm.midpoint,
                            _band_point(k.top_cover_hardness_shore_a, top_position),
                            f"{top_note} top cover (Plastazote-class)"))

    return InsoleStack(layers=tuple(layers), footwear_type_code=fwt_code)


def validate_stack(stack: InsoleStack, k: DesignConstants | None = None) -> ValidationReport:
    """Check every layer against the band for its role and footwear type."""
    k = k or design_defaults()
    report = ValidationReport()
    custom_hull = (k.base_upper_hardness_shore_a
                   .hull(k.printed_base_hardness_shore_a)
                   .hull(k.custom_base_hardness_shore_a))
    for layer in stack.layers:
        if layer.role == "base":
            band = custom_hull if stack.footwear_type_code == "FWT1" \
                else k.prefab_base_hardness_shore_a
            if not band.contains(layer.hardness_shore_a):
                report.error("base-hardness",
                             f"base layer {layer.hardness_shore_a:g} Shore A outside "
                             f"{band.lo:g}-{band.hi:g} Shore A")
        elif layer.role == "base_upper":
            band = k.base_upper_hardness_shore_a
            if not band.contains(layer.hardness_shore_a):
                report.error("base-upper-hardness",
                             f"upper base layer outside {band.lo:g}-{band.hi:g} Shore A")
        elif layer.role == "mid":
            band = k.mid_hardness_shore_a
            if not band.contains(layer.hardness_shore_a):
                report.error("mid-hardness",
                             f"mid layer outside {band.lo:g}-{band.hi:g} Shore A")
            if not k.mid_thickness_mm.contains(layer.thickness_mm):
                report.error("mid-thickness",
                             f"mid layer {layer.thickness_mm:g}mm outside "
                             f"{k.mid_thickness_mm.lo:g}-{k.mid_thickness_mm.hi:g}mm")
        elif layer.role == "top":
            if not k.top_thickness_mm.contains(layer.thickness_mm):
                report.error("top-thickness",
                             f"top cover {layer.thickness_mm:g}mm outside "
                             f"{k.top_thickness_mm.lo:g}-{k.top_thickness_mm.hi:g}mm")
            if not k.top_cover_hardness_shore_a.contains(layer.hardness_shore_a):
                report.warning("top-hardness",
                               f"top cover {layer.hardness_shore_a:g} Shore A outside the "
                               "soft-cover convention band")
        elif layer.role == "metatarsal_addition":
            if not k.met_addition_hardness_shore_a.contains(layer.hardness_shore_a):
                report.error("met-hardness",
                             f"metatarsal addition outside "
                             f"{k.met_addition_hardness_shore_a.lo:g}-"
                             f"{k.met_addition_hardness_shore_a.hi:g} Shore A")
            if not k.met_addition_thickness_mm.contains(layer.thickness_mm):
                report.error("met-thickness",
                             f"metatarsal addition {layer.thickness_mm:g}mm outside "
                             f"{k.met_addition_thickness_mm.lo:g}-"
                             f"{k.met_addition_thickness_mm.hi:g}mm")
        elif layer.role == "cutout_pad":
            if layer.hardness_shore_a > k.cutout_pad_hardness_max_shore_a:
                report.error("pad-hardness",
                             f"cut-out pad exceeds {k.cutout_pad_hardness_max_shore_a:g} "
                             "Shore A")
    return report


# ---------------------------------------------------------------------------
# Metatarsal additions, arch support, cut-outs
# ---------------------------------------------------------------------------

_EXTENSION_PLACEMENT = {"INSMA5": "INSMAP3", "INSMA6": "INSMAP4"}


@dataclass(frozen=True)
class MetAdditionSpec:
    center_from_heel_mm: Optional[Interval]
    thickness_mm: Interval
    hardness_shore_a: Interval
    addition_code: str
    placement_code: str
    report: ValidationReport

    def to_json_dict(self) -> dict:
        return {
            "center_from_heel_mm": (
                self.center_from_heel_mm.as_list() if self.center_from_heel_mm else None
            ),
            "thickness_mm": self.thickness_mm.as_list(),
            "hardness_shore_a": self.hardness_shore_a.as_list(),
            "addition_code": self.addition_code,
            "placement_code": self.placement_code,
            "findings": self.report.to_json_dict()["findings"],
        }


def met_addition_placement(mth_line_from_heel_mm: float, addition_code: str,
                           position_code: str, top_cover_thickness_mm: float,
                           k: DesignConstants | None = None,
                           shift_factor: float = 1.0,
                           requested_thickness_mm: float | None = None,
                           requested_hardness_shore_a: float | None = None) -> MetAdditionSpec:
    """Place a bar, pad or dome proximal to the metatarsal heads.

    A soft top cover lets the addition migrate distally under load, so the
    physical placement is shifted proximal by ``shift_factor`` times the top
    cover thickness.  Morton's and reverse Morton's extensions bypass the
    proximal rule entirely.
    """
    k = k or design_defaults()
    _check_code(addition_code,
                ("INSMA1", "INSMA2", "INSMA3", "INSMA4", "INSMA5", "INSMA6"),
                "metatarsal addition")
    _check_code(position_code, ("INSMAP1", "INSMAP2", "INSMAP3", "INSMAP4"),
                "addition position")
    if addition_code == "INSMA1":
        raise GeometryError("INSMA1 prescribes no metatarsal addition")
    if mth_line_from_heel_mm <= 0:
        raise GeometryError("metatarsal line must be positive")
    if top_cover_thickness_mm < 0:
        raise GeometryError("top cover thickness cannot be negative")

    report = ValidationReport()
    if requested_thickness_mm is not None and \
            not k.met_addition_thickness_mm.contains(requested_thickness_mm):
        report.error("met-thickness",
                     f"requested thickness {requested_thickness_mm:g}mm outside "
                     f"{k.met_addition_thickness_mm.lo:g}-"
                     f"{k.met_addition_thickness_mm.hi:g}mm")
    if requested_hardness_shore_a is not None and \
            not k.met_addition_hardness_shore_a.contains(requested_hardness_shore_a):
        report.error("met-hardness",
                     f"requested hardness {requested_hardness_shore_a:g} Shore A outside "
                     f"{k.met_addition_hardness_shore_a.lo:g}-"
                     f"{k.met_addition_hardness_shore_a.hi:g} Shore A")

    if addition_code in _EXTENSION_PLACEMENT:
        expected = _EXTENSION_PLACEMENT[addition_code]
        if position_code not in (expected, "INSMAP1"):
            report.warning("extension-placement",
                           f"{addition_code} uses the standard extension placement "
                           f"{expected}; ignoring {position_code}")
        return MetAdditionSpec(
            center_from_heel_mm=None,
            thickness_mm=k.met_addition_thickness_mm,
            hardness_shore_a=k.met_addition_hardness_shore_a,
            addition_code=addition_code,
            placement_code=expected,
            report=report,
        )

    if position_code in ("INSMAP3", "INSMAP4"):
        raise GeometryError(f"{position_code} applies to Morton's extensions only")

    center = Interval(
        mth_line_from_heel_mm - k.met_addition_proximal_mm.hi,
        mth_line_from_heel_mm - k.met_addition_proximal_mm.lo,
    )
    center = center.shift(-shift_factor * top_cover_thickness_mm)
    if position_code == "INSMAP2":
        center = center.shift(-k.met_position_shift_mm)
    if center.lo <= 0:
        raise GeometryError(
            f"placement {center.lo:g}mm from heel is not physical; check inputs"
        )
    return MetAdditionSpec(
        center_from_heel_mm=center,
        thickness_mm=k.met_addition_thickness_mm,
        hardness_shore_a=k.met_addition_hardness_shore_a,
        addition_code=addition_code,
        placement_code=position_code,
        report=report,
    )


def mla_spec(cast_height_mm: float, insmlah_code: str,
             k: DesignConstants | None = None,
             addition_mm: float | None = None) -> float:
    """Medial longitudinal arch height: as cast, or raised within the band."""
    k = k or design_defaults()
    if cast_height_mm <= 0:
        raise GeometryError("cast height must be positive")
    _check_code(insmlah_code, ("INSMLAH1", "INSMLAH2"), "MLA height")
    if insmlah_code == "INSMLAH1":
        return cast_height_mm
    add = k.mla_addition_mm.midpoint if addition_mm is None else float(addition_mm)
    if not k.mla_addition_mm.contains(add):
        raise GeometryError(
            f"MLA addition {add:g}mm outside "
            f"{k.mla_addition_mm.lo:g}-{k.mla_addition_mm.hi:g}mm"
        )
    return cast_height_mm + add


@dataclass(frozen=True)
class CutoutSpec:
    shape: str
    center_mm: tuple[float, float]
    boundary_radius_mm: float
    depth_mm: float
    pad: LayerSpec
    report: ValidationReport

    def to_json_dict(self) -> dict:
        return {
            "shape": self.shape,
            "center_mm": list(self.center_mm),
            "boundary_radius_mm": self.boundary_radius_mm,
            "depth_mm": self.depth_mm,
            "pad": self.pad.to_json_dict(),
            "findings": self.report.to_json_dict()["findings"],
        }


def cutout_spec(center_mm: tuple[float, float], radius_mm: float,
                k: DesignConstants | None = None, margin_mm: float = 2.0,
                requested_pad_hardness_shore_a: float | None = None) -> CutoutSpec:
    """Oval cut-out minimally larger than the ROI, padded with soft material."""
    k = k or design_defaults()
    if radius_mm <= 0:
        raise GeometryError("ROI radius must be positive")
    if margin_mm < 0:
        raise GeometryError("margin cannot be negative")
    report = ValidationReport()
    if margin_mm == 0:
        report.advisory("degenerate-margin",
                        "cut-out boundary equals the ROI; it should be minimally larger")

    pad_hardness = k.cutout_pad_hardness_max_shore_a
    if requested_pad_hardness_shore_a is not None:
        if requested_pad_hardness_shore_a > k.cutout_pad_hardness_max_shore_a:
            report.error("pad-hardness",
                         f"requested pad {requested_pad_hardness_shore_a:g} Shore A exceeds "
                         f"{k.cutout_pad_hardness_max_shore_a:g} Shore A; capped")
        else:
            pad_hardness = requested_pad_hardness_shore_a

    pad = LayerSpec("cutout_pad", k.cutout_pad_thickness_mm, pad_hardness,
                    "durable cut-out padding")
    return CutoutSpec(
        shape="oval",
        center_mm=(float(center_mm[0]), float(center_mm[1])),
        boundary_radius_mm=radius_mm + margin_mm,
        depth_mm=k.cutout_depth_mm,
        pad=pad,
        report=report,
    )
