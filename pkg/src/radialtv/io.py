"""JSON instance and result files, CSV tables and run manifests.

Complex numbers are stored as ``[re, im]`` pairs.  Floats go through
``json`` (shortest round-trip repr), so a load/dump cycle is exact.

Instance file (flat)::

    {"schema": "radialtv.instance", "version": 1, "d": 2,
     "directions": [[...]], "freqs": [...], "bandwidth": N,
     "positions": [[...]], "amplitudes": [[re, im], ...],     # optional
     "values": [[[re, im], ...], ...],                         # optional, (T, L)
     "noise_level": 0.15,                                      # optional
     "manifest": {...}}

``values`` is row-major: rows follow ``freqs``, columns ``directions``.
A measurements file is an instance without ``positions``/``amplitudes``;
at least one of the two parts must be present.  Result files carry
``schema = "radialtv.result"``.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidParams, RadialTVError, ShapeError
from .model import DiscreteMeasure, SamplingScheme

__all__ = [
    "SCHEMA_VERSION",
    "InputError",
    "Instance",
    "RunManifest",
    "content_hash",
    "to_jsonable",
    "encode_complex",
    "decode_complex",
    "measure_to_dict",
    "measure_from_dict",
    "scheme_to_dict",
    "scheme_from_dict",
    "write_json",
    "read_json",
    "load_instance",
    "save_instance",
    "write_csv",
]

SCHEMA_VERSION = 1
INSTANCE_SCHEMA = "radialtv.instance"
RESULT_SCHEMA = "radialtv.result"


class InputError(RadialTVError, OSError):
    """Unreadable, unwritable or malformed file."""


def to_jsonable(obj):
    """Recursively convert numpy values, tuples and complex numbers for ``json``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return encode_complex(obj)
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v) or np.isinf(v):
            return str(v)
        return v
    return obj


def encode_complex(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def decode_complex(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.shape[-1] != 2:
        raise ShapeError("complex arrays are stored as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def content_hash(obj) -> str:
    """SHA-256 of the canonical JSON encoding."""
    blob = json.dumps(to_jsonable(obj), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


@dataclass
class RunManifest:
    """Provenance of an output file.

    Wall-clock ``timings`` are only kept when requested, so that reruns
    write byte-identical files.
    """

    command: str
    config: dict
    seed: int | None = None
    input_hash: str | None = None
    schema_version: int = SCHEMA_VERSION
    package_version: str = ""
    timings: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.package_version:
            from . import __version__

            self.package_version = __version__

    def to_dict(self) -> dict:
        d = asdict(self)
        if not d["timings"]:
            d.pop("timings")
        return to_jsonable(d)


def measure_to_dict(m: DiscreteMeasure) -> dict:
    return {"positions": m.positions.tolist(), "amplitudes": encode_complex(m.amplitudes)}


def measure_from_dict(d: dict) -> DiscreteMeasure:
    return DiscreteMeasure(np.asarray(d["positions"], dtype=float), decode_complex(d["amplitudes"]))


def scheme_to_dict(s: SamplingScheme) -> dict:
    return {"directions": s.directions.tolist(), "freqs": s.freqs.tolist(), "bandwidth": int(s.bandwidth)}


def scheme_from_dict(d: dict) -> SamplingScheme:
    return SamplingScheme(np.asarray(d["directions"], dtype=float), np.asarray(d["freqs"], dtype=int),
                          int(d["bandwidth"]))


@dataclass(frozen=True)
class Instance:
    scheme: SamplingScheme
    measure: DiscreteMeasure | None = None
    measurements: np.ndarray | None = None
    noise_level: float | None = None
    extra: dict = field(default_factory=dict, compare=False)

    def data(self) -> np.ndarray:
        """Stored measurements, or noiseless samples of the stored measure."""
        if self.measurements is not None:
            return self.measurements
        from .model import forward_sample

        return forward_sample(self.measure, self.scheme)

    def to_dict(self, manifest: RunManifest | None = None) -> dict:
        d = {"schema": INSTANCE_SCHEMA, "version": SCHEMA_VERSION, "d": int(self.scheme.d)}
        d.update(scheme_to_dict(self.scheme))
        if self.measure is not None:
            d.update(measure_to_dict(self.measure))
        if self.measurements is not None:
            d["values"] = encode_complex(self.measurements)
        if self.noise_level is not None:
            d["noise_level"] = float(self.noise_level)
        d.update(to_jsonable(self.extra))
        if manifest is not None:
            d["manifest"] = manifest.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Instance":
        if d.get("schema", INSTANCE_SCHEMA) != INSTANCE_SCHEMA:
            raise InvalidParams(f"not an instance file (schema {d.get('schema')!r})")
        missing = [k for k in ("directions", "freqs", "bandwidth") if k not in d]
        if missing:
            raise InvalidParams(f"instance file lacks {', '.join(missing)}")
        scheme = scheme_from_dict(d)
        if "d" in d and int(d["d"]) != scheme.d:
            raise ShapeError(f"d = {d['d']} but directions live in R^{scheme.d}")
        measure = measure_from_dict(d) if "positions" in d else None
        y = decode_complex(d["values"]) if "values" in d else None
        if measure is None and y is None:
            raise InvalidParams("instance file needs positions/amplitudes or values")
        if y is not None and y.shape != scheme.shape:
            raise ShapeError(f"values have shape {y.shape}, scheme expects {scheme.shape}")
        known = {"schema", "version", "d", "directions", "freqs", "bandwidth", "positions", "amplitudes",
                 "values", "noise_level", "manifest"}
        extra = {k: v for k, v in d.items() if k not in known}
        return cls(scheme, measure, y, d.get("noise_level"), extra)


def write_json(path, obj) -> None:
    text = json.dumps(to_jsonable(obj), indent=1, sort_keys=True) + "\n"
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def read_json(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def load_instance(path) -> Instance:
    d = read_json(path)
    try:
        return Instance.from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, RadialTVError):
            raise
        raise InputError(f"{path}: malformed instance ({type(exc).__name__}: {exc})") from exc


def save_instance(path, inst: Instance, manifest: RunManifest | None = None) -> None:
    write_json(path, inst.to_dict(manifest))


def write_csv(path, rows: list[dict], columns: list[str], manifest: RunManifest | None = None) -> str:
    """CSV with ``# key: value`` header lines; returns the text and writes it when ``path`` is given."""
    buf = _io.StringIO()
    buf.write(f"# schema_version: {SCHEMA_VERSION}\n")
    if manifest is not None:
        buf.write("# manifest: " + json.dumps(manifest.to_dict(), sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _csv_value(r.get(k)) for k in columns})
    text = buf.getvalue()
    if path is not None:
        try:
            Path(path).write_text(text)
        except OSError as exc:
            raise InputError(f"cannot write {path}: {exc}") from exc
    return text


def _csv_value(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v
