"""Run configuration: one YAML file drives every CLI command.

The file is a nested key/value document; unknown keys are rejected so a
config cannot silently misspell a parameter.  Parsing normalizes the
document, validates every parameter against its module's constructor, and
the canonical re-serialization round-trips.  A short hash of the canonical
form stamps every output file for provenance.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass

import yaml

from .constitutive import IsotropicModel, ThetaModel
from .errors import ConfigError, InvalidModelError
from .geometry import make_surface
from .maps import make_initial_map
from .mesh import build_mesh
from .minimizer import MinimizeOptions

__all__ = ["RunConfig", "parse_config", "parse_config_file", "DEFAULT_CONFIG"]

DEFAULT_CONFIG = {
    "surface": {"kind": "plane"},
    "model": {
        "ogden_terms": [{"b": 1.0, "gamma": 3.0}],
        "b": 1.0,
        "theta": {"c": 1.5, "q": 2.0, "r": 4.0},
        "label": "default",
    },
    "domain": {"kind": "unit_square", "resolution": 0.125},
    "initial_map": {"kind": "identity"},
    "minimize": {
        "max_iter": 5000,
        "grad_tol": None,
        "armijo_c": 1e-4,
        "backtrack_ratio": 0.5,
        "initial_step": 1.0,
        "j_floor": 1e-8,
    },
    "verify": {
        "rotation_samples": 1000,
        "convexity_samples": 100_000,
        "stress_growth_samples": 100_000,
        "perturbation_samples": 10_000,
        "perturbation_delta": 0.01,
        "growth_samples": 100_000,
    },
    "diagnostics": {
        "injectivity": True,
        "degree_points": 100,
        "residual_fields": 12,
    },
    "output_dir": "runs/out",
    "seed": 42,
}

_SURFACE_KEYS = {
    "plane": {"normal_dir", "offset", "orientation_sign"},
    "sphere": {"radius", "orientation_sign"},
    "torus": {"major_radius", "minor_radius", "orientation_sign"},
    "ellipsoid": {"semi_axes", "orientation_sign"},
    "graph": {"coeffs", "orientation_sign", "extent"},
}

_DOMAIN_KEYS = {
    "unit_square": set(),
    "disk": {"radius"},
    "annulus": {"inner_radius", "outer_radius"},
}

_MAP_KEYS = {
    "identity": set(),
    "affine": {"matrix"},
    "stereographic_cap": {"latitude"},
    "torus_band": {"theta_range", "psi_range"},
}


def _merge_defaults(data, defaults, path=""):
    """Fill missing keys from defaults; reject unknown keys in known blocks."""
    out = {}
    for key, dval in defaults.items():
        if key in data:
            val = data[key]
            if isinstance(dval, dict) and isinstance(val, dict) and key not in (
                "surface",
                "domain",
                "initial_map",
            ):
                out[key] = _merge_defaults(val, dval, f"{path}{key}.")
            else:
                out[key] = val
        else:
            out[key] = dval
    for key in data:
        if key not in defaults:
            raise ConfigError(f"unknown configuration key {path}{key!r}")
    return out


def _require_keys(block, kind, allowed, label):
    for key in block:
        if key == "kind":
            continue
        if key not in allowed:
            raise ConfigError(f"unknown {label} parameter {key!r} for kind {kind!r}")


@dataclass
class RunConfig:
    """Validated run configuration with constructors for every module."""

    data: dict

    @property
    def seed(self):
        return int(self.data["seed"])

    @property
    def output_dir(self):
        return str(self.data["output_dir"])

    def surface(self):
        block = dict(self.data["surface"])
        kind = block.pop("kind", None)
        if kind not in _SURFACE_KEYS:
            raise ConfigError(f"surface.kind must be one of {sorted(_SURFACE_KEYS)}")
        _require_keys(block, kind, _SURFACE_KEYS[kind], "surface")
        try:
            return make_surface(kind, **block)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"surface: {exc}") from exc

    def model(self):
        block = self.data["model"]
        try:
            terms = tuple((t["b"], t["gamma"]) for t in block["ogden_terms"])
            theta = block.get("theta", {})
            return IsotropicModel(
                ogden_terms=terms,
                b=float(block.get("b", 0.0)),
                theta=ThetaModel(
                    c=float(theta.get("c", 1.5)),
                    q=float(theta.get("q", 2.0)),
                    r=float(theta.get("r", 4.0)),
                ),
                label=str(block.get("label", "")),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"model: malformed block ({exc})") from exc
        except InvalidModelError as exc:
            raise ConfigError(f"model: {exc}") from exc

    def mesh(self):
        block = dict(self.data["domain"])
        kind = block.pop("kind", None)
        resolution = block.pop("resolution", None)
        if kind not in _DOMAIN_KEYS:
            raise ConfigError(f"domain.kind must be one of {sorted(_DOMAIN_KEYS)}")
        if not isinstance(resolution, (int, float)) or resolution <= 0:
            raise ConfigError("domain.resolution must be a positive number")
        _require_keys(block, kind, _DOMAIN_KEYS[kind], "domain")
        return build_mesh(kind, float(resolution), **block)

    def initial_map(self, surface):
        block = dict(self.data["initial_map"])
        kind = block.pop("kind", None)
        if kind not in _MAP_KEYS:
            raise ConfigError(f"initial_map.kind must be one of {sorted(_MAP_KEYS)}")
        _require_keys(block, kind, _MAP_KEYS[kind], "initial_map")
        return make_initial_map(surface, kind, **block)

    def minimize_options(self):
        block = self.data["minimize"]
        try:
            return MinimizeOptions(
                max_iter=int(block["max_iter"]),
                grad_tol=None if block["grad_tol"] is None else float(block["grad_tol"]),
                armijo_c=float(block["armijo_c"]),
                backtrack_ratio=float(block["backtrack_ratio"]),
                initial_step=float(block["initial_step"]),
                j_floor=float(block["j_floor"]),
                seed=self.seed,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"minimize: {exc}") from exc

    def verify_params(self):
        return dict(self.data["verify"])

    def diagnostics_params(self):
        return dict(self.data["diagnostics"])

    def to_dict(self):
        return self.data

    def serialize(self):
        return yaml.safe_dump(self.data, sort_keys=True, default_flow_style=False)

    @property
    def config_hash(self):
        return hashlib.sha256(self.serialize().encode()).hexdigest()[:16]

    def validate(self):
        """Construct every parameterized object once, before any computation."""
        surface = self.surface()
        self.model()
        self.minimize_options()
        block = dict(self.data["domain"])
        kind = block.pop("kind", None)
        resolution = block.pop("resolution", None)
        if kind not in _DOMAIN_KEYS:
            raise ConfigError(f"domain.kind must be one of {sorted(_DOMAIN_KEYS)}")
        if not isinstance(resolution, (int, float)) or resolution <= 0:
            raise ConfigError("domain.resolution must be a positive number")
        _require_keys(block, kind, _DOMAIN_KEYS[kind], "domain")
        map_block = dict(self.data["initial_map"])
        map_kind = map_block.pop("kind", None)
        if map_kind not in _MAP_KEYS:
            raise ConfigError(f"initial_map.kind must be one of {sorted(_MAP_KEYS)}")
        _require_keys(map_block, map_kind, _MAP_KEYS[map_kind], "initial_map")
        self.initial_map(surface)
        verify = self.data["verify"]
        for key, val in verify.items():
            if key == "perturbation_delta":
                if not (isinstance(val, (int, float)) and 0 < val < 1):
                    raise ConfigError("verify.perturbation_delta must lie in (0, 1)")
            elif not (isinstance(val, int) and val > 0):
                raise ConfigError(f"verify.{key} must be a positive integer")
        diag = self.data["diagnostics"]
        if not isinstance(diag["injectivity"], bool):
            raise ConfigError("diagnostics.injectivity must be boolean")
        for key in ("degree_points", "residual_fields"):
            if not (isinstance(diag[key], int) and diag[key] >= 0):
                raise ConfigError(f"diagnostics.{key} must be a nonnegative integer")
        if not isinstance(self.data["seed"], int):
            raise ConfigError("seed must be an integer")
        return self


def parse_config(text):
    """Parse and validate a YAML configuration document."""
    try:
        raw = yaml.safe_load(io.StringIO(text))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}: " if mark else ""
        raise ConfigError(f"{where}{getattr(exc, 'problem', exc)}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    merged = _merge_defaults(raw, DEFAULT_CONFIG)
    return RunConfig(merged).validate()


def parse_config_file(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
