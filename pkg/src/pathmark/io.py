"""File formats: JSON summaries, CSV intensity profiles and event streams, run manifests."""
from __future__ import annotations

import hashlib
import json
import math
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .optics import PolarizedField

PROFILE_COLUMNS = ("x_m", "I_H", "I_V", "I_total")
MAX_PROFILE_ROWS = 4096


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=True) + "\n"


def digest(obj) -> str:
    """Short stable hash of a JSON-serializable object."""
    raw = json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=True)
    return hashlib.sha256(raw.encode()).hexdigest()[:16]


def config_hash(cfg) -> str:
    return digest(cfg.to_dict())


def profile_text(fld: PolarizedField, *, meta: dict, projection: str = "total",
                 extent: float | None = None, stride: int | None = None) -> str:
    """CSV profile with a ``# key = value`` metadata header.

    Columns are x_m, I_H, I_V, I_total; an L or R projection adds I_L / I_R.
    ``extent`` restricts to |x| <= extent, ``stride`` decimates; by default
    the stride keeps at most MAX_PROFILE_ROWS rows.
    """
    x = fld.x
    sel = np.ones(len(x), dtype=bool) if extent is None else np.abs(x) <= extent
    idx = np.flatnonzero(sel)
    if stride is None:
        stride = max(1, math.ceil(len(idx) / MAX_PROFILE_ROWS))
    idx = idx[::stride]
    cols = [x, fld.intensity("H"), fld.intensity("V"), fld.intensity("total")]
    names = list(PROFILE_COLUMNS)
    if projection in ("L", "R"):
        cols.append(fld.intensity(projection))
        names.append(f"I_{projection}")
    header = {"format": "pathmark-profile/1", "plane": fld.plane, "projection": projection,
              "wavelength_m": repr(fld.wavelength), "dx_m": repr(fld.dx * stride),
              "stride": stride, **meta}
    lines = [f"# {k} = {v}" for k, v in header.items()]
    lines.append(",".join(names))
    data = np.column_stack([c[idx] for c in cols])
    lines.extend(",".join(f"{v:.9e}" for v in row) for row in data)
    return "\n".join(lines) + "\n"


def read_profile(text: str) -> tuple[dict, list[str], np.ndarray]:
    """Parse :func:`profile_text` output into (header, column names, data)."""
    meta, rows, names = {}, [], None
    for line in text.splitlines():
        if line.startswith("#"):
            k, _, v = line[1:].partition("=")
            meta[k.strip()] = v.strip()
        elif names is None:
            names = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    return meta, names, np.array(rows)


@dataclass
class RunManifest:
    tool_version: str
    config_hash: str
    scenarios: list[str]
    outputs: list[str]
    seed: int
    overrides: dict = field(default_factory=dict)
    catalog: str = ""
    timestamp: str = ""

    @property
    def hash(self) -> str:
        # the timestamp is informational; the hash covers everything that
        # determines the outputs
        d = asdict(self)
        d.pop("timestamp")
        return digest(d)

    def to_json(self) -> str:
        d = asdict(self)
        d["manifest_hash"] = self.hash
        return canonical_json(d)


def new_manifest(config_hash: str, scenarios, outputs, seed, overrides, catalog) -> RunManifest:
    # SOURCE_DATE_EPOCH pins the timestamp for reproducible manifests
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = time.gmtime(int(epoch)) if epoch else time.gmtime()
    return RunManifest(__version__, config_hash, list(scenarios), list(outputs), int(seed),
                       dict(overrides), catalog, time.strftime("%Y-%m-%dT%H:%M:%SZ", t))
