"""Pipeline configuration: defaults, config-file parsing, overrides."""

import dataclasses
from dataclasses import dataclass
from typing import Dict, Optional

from .errors import ParseError
from .verify import VARIANTS

# fields allowed to be zero or negative
_UNSIGNED = ("scoring_max_points", "min_confidence")


@dataclass
class PipelineConfig:
    """Every tunable of the registration pipeline, with defaults."""

    # submap accumulation
    r_v: float = 0.8
    d_s: float = 15.0
    # plane segmentation
    s_v: float = 2.0
    sigma_lambda: float = 10.0
    normal_tol_deg: float = 10.0
    dist_tol_m: float = 0.1
    gravity_tol_deg: float = 15.0
    # wall raster and line detection
    s_i: float = 60.0
    l_min_px: int = 30
    gap_px: float = 5.0
    band_px: float = 5.0
    theta_bins: int = 180
    endpoint_tol_m: float = 0.3
    angle_tol_deg: float = 5.0
    extend_m: float = 1.0
    nms_radius_m: float = 0.5
    min_angle_deg: float = 10.0
    # triangle descriptors
    r_s: float = 0.5
    r_a: float = 3.0
    l_max: float = 30.0
    # pose voting
    r_xy: float = 0.15
    r_yaw_deg: float = 1.0
    residual_max_m: float = 0.3
    l_cells: int = 10000
    k_cells: int = 5000
    j_candidates: int = 1500
    # verification
    s_r: float = 0.2
    k_d: int = 5
    lam: float = 0.5
    variant: str = "osc"
    scoring_max_points: int = 5000  # 0 disables subsampling
    min_confidence: float = 0.8
    threads: int = 1

    def validate(self) -> None:
        """Raise ValueError on any out-of-range parameter."""
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if f.name in _UNSIGNED or not isinstance(v, (int, float)):
                continue
            if v <= 0:
                raise ValueError("%s must be positive, got %r" % (f.name, v))
        if self.scoring_max_points < 0:
            raise ValueError("scoring_max_points must be >= 0")
        if not self.l_cells >= self.k_cells >= self.j_candidates:
            raise ValueError(
                "need l_cells >= k_cells >= j_candidates, got %d/%d/%d"
                % (self.l_cells, self.k_cells, self.j_candidates)
            )
        if self.variant not in VARIANTS:
            raise ValueError("unknown variant %r" % (self.variant,))


def parse_config_file(path) -> Dict[str, str]:
    """Read flat `key = value` lines; '#' starts a comment."""
    out: Dict[str, str] = {}
    with open(path, "r") as fh:
        for ln, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError("%s:%d: expected key = value" % (path, ln))
            key, value = (part.strip() for part in line.split("=", 1))
            if not key or not value:
                raise ParseError("%s:%d: expected key = value" % (path, ln))
            out[key] = value
    return out


def _coerce(key: str, text: str, kind: type):
    try:
        return kind(text)
    except ValueError:
        raise ParseError("bad value for %s: %r" % (key, text))


def make_config(
    file_path=None, overrides: Optional[Dict[str, str]] = None
) -> PipelineConfig:
    """Defaults, then config file, then explicit overrides; validated.

    Bad file content raises ParseError; bad override keys or values are
    caller mistakes and raise ValueError.
    """
    cfg = PipelineConfig()
    kinds = {f.name: type(f.default) for f in dataclasses.fields(PipelineConfig)}
    merged: Dict[str, str] = {}
    from_file = set()
    if file_path is not None:
        merged.update(parse_config_file(file_path))
        from_file.update(merged)
    if overrides:
        for k, v in overrides.items():
            merged[k] = str(v)
            from_file.discard(k)
    for key, text in merged.items():
        if key not in kinds:
            msg = "unknown config key %r" % (key,)
            raise ParseError(msg) if key in from_file else ValueError(msg)
        try:
            setattr(cfg, key, _coerce(key, text, kinds[key]))
        except ParseError:
            if key in from_file:
                raise
            raise ValueError("bad value for %s: %r" % (key, text))
    cfg.validate()
    return cfg


def echo_config(cfg: PipelineConfig) -> str:
    """One `key = value` line per field, declaration order, reparseable."""
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        lines.append("%s = %s" % (f.name, repr(v) if isinstance(v, float) else v))
    return "\n".join(lines)
