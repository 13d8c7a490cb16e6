"""JSON file formats and the run configuration.

Every file is UTF-8 JSON with dense row-major arrays.  Reports are written
with sorted keys and a fixed float format so that a fixed seed gives
byte-identical output.
"""

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import InputError, ReflexiaError
from .lie import DEFAULT_TOL, LieAlgebraSpec, validate
from .symmetric import Involution


def read_json(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from exc


def _array(obj, name, ndim=None):
    try:
        arr = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{name} is not a dense numeric array") from exc
    if ndim is not None and arr.ndim != ndim and arr.size:
        raise InputError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} contains non-finite entries")
    return arr


def _require(d, key, where):
    if not isinstance(d, dict) or key not in d:
        raise InputError(f"{where}: missing field {key!r}")
    return d[key]


# -- algebra, involution, subalgebra -------------------------------------------

def algebra_to_dict(spec):
    d = {"dim": spec.dim, "structure_constants": spec.structure_constants.tolist()}
    if spec.matrix_basis is not None:
        d["matrix_basis"] = spec.matrix_basis.tolist()
    if spec.labels is not None:
        d["labels"] = list(spec.labels)
    return d


def algebra_from_dict(d, where="algebra", tol=DEFAULT_TOL):
    """Parse and validate an algebra spec; invalid algebras are input errors."""
    dim = _require(d, "dim", where)
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise InputError(f"{where}: dim must be a positive integer")
    c = _array(_require(d, "structure_constants", where), f"{where}.structure_constants", 3)
    mb = d.get("matrix_basis")
    mb = None if mb is None else _array(mb, f"{where}.matrix_basis", 3)
    try:
        spec = LieAlgebraSpec(dim, c, mb, d.get("labels"))
    except (ReflexiaError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from exc
    rep = validate(spec, tol)
    if not rep.passed:
        raise InputError(f"{where}: not a valid Lie algebra {rep.as_dict()}")
    return spec


def load_algebra(path, tol=DEFAULT_TOL):
    return algebra_from_dict(read_json(path), str(path), tol)


def involution_from_dict(d, spec, where="involution", tol=DEFAULT_TOL):
    """Either ``sigma`` (dim x dim) or ``h_matrix`` (sigma = Ad(h))."""
    if not isinstance(d, dict) or ("sigma" in d) == ("h_matrix" in d):
        raise InputError(f"{where}: give exactly one of 'sigma' or 'h_matrix'")
    try:
        if "sigma" in d:
            sigma = _array(d["sigma"], f"{where}.sigma", 2)
            if sigma.shape != (spec.dim, spec.dim):
                raise InputError(f"{where}: sigma must be {spec.dim}x{spec.dim}")
            return Involution(sigma, "abstract")
        h = _array(d["h_matrix"], f"{where}.h_matrix", 2)
        return Involution.from_group_element(spec, h, tol)
    except InputError:
        raise
    except (ReflexiaError, ValueError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def load_involution(path, spec, tol=DEFAULT_TOL):
    return involution_from_dict(read_json(path), spec, str(path), tol)


def load_matrix(path, key="h_matrix"):
    d = read_json(path)
    return _array(_require(d, key, str(path)), f"{path}.{key}", 2)


def subalgebra_from_obj(obj, dim, where="k_basis"):
    """A list of coordinate vectors, or ``{"k_basis": [...]}``."""
    if isinstance(obj, dict):
        obj = _require(obj, "k_basis", where)
    if not isinstance(obj, list):
        raise InputError(f"{where}: expected a list of coordinate vectors")
    if not obj:
        return np.zeros((0, dim))
    arr = _array(obj, where, 2)
    if arr.shape[1] != dim:
        raise InputError(f"{where}: vectors must have length {dim}")
    return arr


def load_subalgebra(path, dim):
    return subalgebra_from_obj(read_json(path), dim, str(path))


# -- reports ------------------------------------------------------------------

def to_jsonable(obj):
    """Plain-Python copy of ``obj``; NaN and infinities become ``None``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if obj is None or isinstance(obj, str):
        return obj
    if dataclasses.is_dataclass(obj):
        return to_jsonable(dataclasses.asdict(obj))
    return str(obj)


def dumps_report(report):
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_report(report, path=None):
    """Write to ``path`` (parents created) and return the text."""
    text = dumps_report(report)
    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    return text


# -- run configuration --------------------------------------------------------

@dataclass
class RunConfig:
    """Everything a CLI command needs.  Paths are relative to the config file.

    ``h_matrix`` optionally overrides the group element that drives the
    reflexion (negative controls pass a corrupted h while the involution
    file keeps the nominal sigma).
    """

    algebra: str
    involution: str
    k_basis: str
    h_matrix: Optional[str] = None
    name: str = ""
    seed: int = 42
    tolerance: float = DEFAULT_TOL
    trust_radius: float = 0.3
    chart_radius: float = 1.0
    newton_fd_step: float = 1e-6
    newton_tol: float = 1e-12
    n_samples: int = 1000
    max_skip_rate: float = 0.5
    flat_dims: int = 0
    fd_step: float = 1e-5
    jacobian_step: float = 1e-4
    outer_step: float = 1e-2
    rank_rtol: float = 1e-6
    fingerprint_rtol: float = 1e-4
    samples_per_dim: int = 50
    flows_trust_radius: float = 0.6
    flow_times: list = field(default_factory=lambda: [0.05, 0.1, 0.15])
    flow_step: float = 1e-3
    flow_tol: float = 1e-5
    parity_tol: float = 1e-4
    n_probes: int = 20
    probe_radius: float = 0.1
    automorphism_time: float = 0.1
    inject_even_field: bool = False
    out: Optional[str] = None
    base_dir: str = field(default=".", repr=False, compare=False)

    _POSITIVE = ("tolerance", "trust_radius", "chart_radius", "newton_fd_step", "newton_tol",
                 "fd_step", "jacobian_step", "outer_step", "rank_rtol", "fingerprint_rtol",
                 "flows_trust_radius", "flow_step", "flow_tol", "parity_tol", "probe_radius",
                 "automorphism_time", "max_skip_rate")
    _COUNTS = ("n_samples", "samples_per_dim", "n_probes")

    def __post_init__(self):
        for name in self._POSITIVE:
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
                raise InputError(f"config: {name} must be a positive number, got {v!r}")
            setattr(self, name, float(v))
        for name in self._COUNTS + ("seed", "flat_dims"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, int):
                raise InputError(f"config: {name} must be an integer, got {v!r}")
        if any(getattr(self, n) < 1 for n in self._COUNTS) or self.flat_dims < 0:
            raise InputError("config: sample counts must be >= 1 and flat_dims >= 0")
        if not isinstance(self.flow_times, list) or not self.flow_times or not all(
                isinstance(t, (int, float)) and not isinstance(t, bool) and t > 0
                for t in self.flow_times):
            raise InputError("config: flow_times must be a non-empty list of positive times")
        self.flow_times = [float(t) for t in self.flow_times]

    @classmethod
    def from_dict(cls, d, base_dir="."):
        if not isinstance(d, dict):
            raise InputError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)} - {"base_dir"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise InputError(f"config: unknown fields {unknown}")
        try:
            return cls(**d, base_dir=str(base_dir))
        except TypeError as exc:
            raise InputError(f"config: {exc}") from exc

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_dict(read_json(path), path.parent)

    def resolve(self, rel):
        p = Path(rel)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def as_dict(self):
        """Effective configuration as embedded in every report."""
        d = dataclasses.asdict(self)
        d.pop("base_dir")
        return d
