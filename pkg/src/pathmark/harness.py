"""Named scenarios, bound checking, exact-vs-wave cross validation and photon sampling."""
from __future__ import annotations

import dataclasses
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterator

import numpy as np
from scipy import stats

from . import algebra, kernels
from .optics import (ANALYZER_OUTCOMES, DETECTORS, DetectionSummary, ExperimentConfig,
                     Simulation, WireSpec, dark_fringe_wires, simulate)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "Bound",
    "BoundResult",
    "Scenario",
    "ScenarioResult",
    "Catalog",
    "CatalogError",
    "ScenarioError",
    "PhotonEvent",
    "PhotonSample",
    "load_catalog",
    "parse_catalog",
    "default_catalog_path",
    "resolve_config",
    "exact_summary",
    "run_scenario",
    "cross_validate",
    "convergence_sweep",
    "sample_photons",
    "quantity_value",
]

RELATIONS = ("eq", "le", "ge")
PROVENANCE = ("PAPER", "TRIVIAL", "DERIVED")
MODELS = ("wave", "exact")
CATALOG_ENV = "PATHMARK_CATALOG"


class CatalogError(ValueError):
    def __init__(self, message, line=None, column=None):
        self.line, self.column = line, column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class ScenarioError(RuntimeError):
    pass


@dataclass(frozen=True)
class Bound:
    quantity: str
    relation: str
    value: float
    tolerance: float
    provenance: str
    note: str = ""

    def check(self, measured: float) -> bool:
        if not math.isfinite(measured):
            return False
        if self.relation == "eq":
            return abs(measured - self.value) <= self.tolerance
        if self.relation == "le":
            return measured <= self.value + self.tolerance
        return measured >= self.value - self.tolerance

    def describe(self) -> str:
        op = {"eq": "==", "le": "<=", "ge": ">="}[self.relation]
        tol = f" +/- {self.tolerance:g}" if self.tolerance else ""
        return f"{self.quantity} {op} {self.value:g}{tol} [{self.provenance}]"


@dataclass(frozen=True)
class BoundResult:
    bound: Bound
    measured: float
    passed: bool

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.bound.describe()}: measured {self.measured:.6g}"


@dataclass(frozen=True)
class Scenario:
    name: str
    config: ExperimentConfig
    expected: tuple[Bound, ...] = ()
    model: str = "wave"
    description: str = ""
    version: int = 1
    # (count, width as a fraction of the fringe period) for dark-fringe wires
    wire_rule: tuple[int, float] | None = None
    baseline: bool = False
    metadata: dict = field(default_factory=dict, hash=False, compare=False)


@dataclass(frozen=True)
class ScenarioResult:
    scenario: Scenario
    config: ExperimentConfig
    summary: DetectionSummary
    checks: tuple[BoundResult, ...]
    baseline: DetectionSummary | None = None
    simulation: Simulation | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[BoundResult]:
        return [c for c in self.checks if not c.passed]


@dataclass
class Catalog:
    version: int
    scenarios: list[Scenario]
    source: str = ""
    path: str | None = None

    def __getitem__(self, name: str) -> Scenario:
        for s in self.scenarios:
            if s.name == name:
                return s
        raise KeyError(f"no scenario named {name!r}; have {[s.name for s in self.scenarios]}")

    def names(self) -> list[str]:
        return [s.name for s in self.scenarios]


# --- catalog parsing -------------------------------------------------------

_CONFIG_KEYS = {f.name for f in dataclasses.fields(ExperimentConfig)} - {"wires"}


def default_catalog_path() -> Path:
    env = os.environ.get(CATALOG_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("pathmark").joinpath("catalogs/default.toml")))


def _line_of(source: str, needle: str) -> int | None:
    for i, line in enumerate(source.splitlines(), 1):
        if needle in line:
            return i
    return None


def _decode_position(err) -> tuple[int | None, int | None]:
    line, col = getattr(err, "lineno", None), getattr(err, "colno", None)
    if line is None:
        m = re.search(r"line (\d+), column (\d+)", str(err))
        if m:
            line, col = int(m.group(1)), int(m.group(2))
    return line, col


def parse_catalog(source: str, path: str | None = None,
                  overrides: dict | None = None) -> Catalog:
    try:
        doc = tomllib.loads(source)
    except tomllib.TOMLDecodeError as err:
        line, col = _decode_position(err)
        msg = str(err).split(" (at line")[0]
        raise CatalogError(f"{path or '<catalog>'}: {msg}", line, col) from None
    defaults = dict(doc.get("defaults", {}))
    raw = doc.get("scenario", [])
    if not isinstance(raw, list) or not raw:
        raise CatalogError(f"{path or '<catalog>'}: catalog defines no [[scenario]] tables", 1, 1)
    scenarios, seen = [], set()
    for entry in raw:
        name = entry.get("name")
        line = _line_of(source, f'"{name}"') if name else None
        try:
            sc = _parse_scenario(entry, defaults, overrides or {})
        except (KeyError, TypeError, ValueError) as err:
            label = name or "<unnamed>"
            raise CatalogError(f"{path or '<catalog>'}: scenario {label}: {err}", line, 1) from None
        if sc.name in seen:
            raise CatalogError(f"duplicate scenario name {sc.name!r}", line, 1)
        seen.add(sc.name)
        scenarios.append(sc)
    return Catalog(int(doc.get("version", 1)), scenarios, source, path)


def _parse_scenario(entry: dict, defaults: dict, overrides: dict) -> Scenario:
    if "name" not in entry:
        raise ValueError("missing 'name'")
    model = entry.get("model", "wave")
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    cfg_items = {**defaults, **entry.get("config", {}), **overrides}
    unknown = set(cfg_items) - _CONFIG_KEYS
    if unknown:
        raise ValueError(f"unknown config keys {sorted(unknown)}")
    wires, wire_rule = None, None
    w = entry.get("wires")
    if w is not None:
        mode = w.get("mode", "explicit")
        if mode == "dark-fringes":
            wire_rule = (int(w.get("count", 6)), float(w.get("width_fraction", 1 / 12)))
        elif mode == "explicit":
            wires = WireSpec(tuple(w["centers"]), float(w["width"]))
        else:
            raise ValueError(f"wires.mode must be 'dark-fringes' or 'explicit', got {mode!r}")
    config = ExperimentConfig(wires=wires, **cfg_items)
    bounds = []
    for b in entry.get("expect", []):
        rel = b.get("relation", "eq")
        prov = b.get("provenance")
        if rel not in RELATIONS:
            raise ValueError(f"relation must be one of {RELATIONS}, got {rel!r}")
        if prov not in PROVENANCE:
            raise ValueError(f"bound on {b.get('quantity')!r} needs provenance in {PROVENANCE}")
        if "tolerance" not in b:
            raise ValueError(f"bound on {b.get('quantity')!r} needs a tolerance")
        bounds.append(Bound(b["quantity"], rel, float(b["value"]), float(b["tolerance"]), prov,
                            b.get("note", "")))
    meta = {k: v for k, v in entry.items()
            if k not in ("name", "model", "config", "wires", "expect", "description", "version", "baseline")}
    return Scenario(entry["name"], config, tuple(bounds), model, entry.get("description", ""),
                    int(entry.get("version", 1)), wire_rule, bool(entry.get("baseline", False)), meta)


def load_catalog(path=None, overrides: dict | None = None) -> Catalog:
    path = Path(path) if path is not None else default_catalog_path()
    try:
        source = path.read_text()
    except OSError as err:
        raise CatalogError(f"cannot read catalog {path}: {err.strerror or err}") from None
    return parse_catalog(source, str(path), overrides)


# --- running ---------------------------------------------------------------

def resolve_config(s: Scenario) -> ExperimentConfig:
    """Scenario config with dark-fringe wires placed, if the scenario asks for them."""
    if s.wire_rule is None:
        return s.config
    count, frac = s.wire_rule
    return s.config.replace(wires=dark_fringe_wires(s.config.replace(wires=None), count, frac))


def exact_summary(cfg: ExperimentConfig) -> DetectionSummary:
    """Detection table predicted by the exact state algebra for ``cfg``."""
    if cfg.wires is not None:
        raise ScenarioError("the exact model has no wires")
    state = algebra.make_initial_state(cfg.markers, cfg.open_slits)
    vis = {"total": algebra.duality_report(state).visibility}
    for axis in ("H", "V", "L", "R"):
        p, branch = algebra.project_polarization(state, axis)
        vis[axis] = 0.0 if branch.null else algebra.duality_report(branch).visibility
    final = algebra.apply_lens(state)
    outcomes = ANALYZER_OUTCOMES[cfg.analyzer]
    probs = {}
    if cfg.analyzer == "none":
        table = algebra.detector_statistics(final)
        for det in DETECTORS:
            probs[(det, "any")] = sum(v for (d, _), v in table.items() if d == det)
    else:
        table = algebra.detector_statistics(final, algebra.AXES[cfg.analyzer][0])
        for det in DETECTORS:
            for o in outcomes:
                probs[(det, o)] = table[(det, o)]
    return DetectionSummary(cfg.analyzer, outcomes, probs, 0.0, 0.0, fringe_visibility=vis)


def _run_model(s: Scenario, cfg: ExperimentConfig) -> tuple[DetectionSummary, Simulation | None]:
    if s.model == "exact":
        return exact_summary(cfg), None
    sim = simulate(cfg)
    return sim.summary, sim


def quantity_value(summary: DetectionSummary, name: str, baseline: DetectionSummary | None = None) -> float:
    """Evaluate a bound quantity such as ``p.D_A``, ``share.D_A.L`` or ``delta.p.detected``."""
    if name.startswith("delta."):
        if baseline is None:
            raise ScenarioError(f"quantity {name!r} needs a baseline run (set baseline = true)")
        inner = name[len("delta."):]
        return quantity_value(summary, inner) - quantity_value(baseline, inner)
    parts = name.split(".")
    head = parts[0]
    try:
        if head == "p":
            if parts[1] == "detected":
                return summary.detected
            return summary.p(parts[1], parts[2] if len(parts) > 2 else None)
        if head == "share":
            return summary.share(parts[1], parts[2])
        if head == "visibility":
            return summary.fringe_visibility[parts[1]]
        scalars = {
            "absorbed": summary.absorbed_fraction,
            "spill": summary.spill_fraction,
            "escaped": summary.escaped_fraction,
            "fill_factor": summary.fill_factor,
            "closure": summary.closure,
        }
        if name == "absorbed_over_fill":
            return summary.absorbed_fraction / summary.fill_factor if summary.fill_factor else float("nan")
        return scalars[name]
    except (KeyError, IndexError):
        raise ScenarioError(f"unknown quantity {name!r}") from None


def run_scenario(s: Scenario) -> ScenarioResult:
    try:
        cfg = resolve_config(s)
        summary, sim = _run_model(s, cfg)
        base = _run_model(s, cfg.replace(wires=None))[0] if s.baseline else None
        checks = tuple(BoundResult(b, m, b.check(m))
                       for b in s.expected
                       for m in [quantity_value(summary, b.quantity, base)])
    except ScenarioError as err:
        raise ScenarioError(f"scenario {s.name}: {err}") from err
    except ValueError as err:
        raise ScenarioError(f"scenario {s.name}: {err}") from err
    return ScenarioResult(s, cfg, summary, checks, base, sim)


@dataclass(frozen=True)
class CrossRow:
    quantity: str
    exact: float
    wave: float

    @property
    def delta(self) -> float:
        return abs(self.exact - self.wave)


def cross_validate(s: Scenario, **grid) -> list[CrossRow]:
    """Exact-algebra vs wave-optics detector probabilities, cell by cell.

    Wires are not part of the exact model and are left out of both runs.
    ``grid`` may override ``grid_points`` / ``grid_halfwidth``.
    """
    cfg = s.config.replace(wires=None, **grid)
    if cfg.open_slits != "both":
        raise ScenarioError(f"scenario {s.name}: cross validation needs both slits open")
    exact = exact_summary(cfg)
    wave = simulate(cfg).summary
    return [CrossRow(f"P({det},{o})", exact.probabilities[(det, o)], wave.probabilities[(det, o)])
            for det in DETECTORS for o in exact.outcomes]


def convergence_sweep(s: Scenario, levels: int = 3) -> list[tuple[int, float, float]]:
    """Largest cross-validation discrepancy as the grid doubles.

    Each level doubles ``grid_points`` and widens the window by sqrt(2), so
    the sampling margin dx * halfwidth stays fixed while both the lens
    aperture and the resolution improve.
    """
    out = []
    n0, l0 = s.config.grid_points, s.config.grid_halfwidth
    for k in range(levels):
        n, half = n0 * 2 ** k, l0 * 2 ** (k / 2)
        rows = cross_validate(s, grid_points=n, grid_halfwidth=half)
        out.append((n, half, max(r.delta for r in rows)))
    return out


# --- photon sampling -------------------------------------------------------

@dataclass(frozen=True)
class PhotonEvent:
    detector: str
    pol_outcome: str | None
    sequence_index: int


@dataclass(frozen=True, eq=False)
class PhotonSample:
    """A reproducible photon stream drawn from a scenario's outcome table."""

    seed: int
    labels: tuple[tuple[str, str | None], ...]
    probabilities: np.ndarray
    codes: np.ndarray

    @property
    def n(self) -> int:
        return len(self.codes)

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.codes, minlength=len(self.labels))

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / self.n

    def count(self, detector: str, pol: str | None = None) -> int:
        return int(self.counts[self.labels.index((detector, pol))])

    @property
    def zero_probability_hits(self) -> int:
        return int(self.counts[self.probabilities == 0].sum())

    def chi_square(self) -> tuple[float, float]:
        """Statistic and p-value over the outcomes with nonzero probability."""
        nz = self.probabilities > 0
        if self.zero_probability_hits:
            return math.inf, 0.0
        if nz.sum() < 2:
            return 0.0, 1.0
        res = stats.chisquare(self.counts[nz], self.n * self.probabilities[nz])
        return float(res.statistic), float(res.pvalue)

    def max_sigma(self) -> float:
        """Largest |frequency - p| in binomial standard deviations."""
        p = self.probabilities
        sigma = np.sqrt(p * (1 - p) / self.n)
        dev = np.abs(self.frequencies - p)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(sigma > 0, dev / sigma, np.where(dev > 0, np.inf, 0.0))
        return float(z.max())

    def events(self, start: int = 0, stop: int | None = None) -> Iterator[PhotonEvent]:
        stop = self.n if stop is None else min(stop, self.n)
        for i in range(start, stop):
            det, pol = self.labels[self.codes[i]]
            yield PhotonEvent(det, pol, i)

    def write_csv(self, fh) -> None:
        tails = [f"{det},{pol or 'none'}\n" for det, pol in self.labels]
        fh.write("sequence_index,detector,pol_outcome\n")
        fh.writelines(f"{i},{tails[c]}" for i, c in enumerate(self.codes.tolist()))

    def table(self) -> list[dict]:
        return [{"detector": det, "pol_outcome": pol, "probability": float(p), "count": int(c)}
                for (det, pol), p, c in zip(self.labels, self.probabilities, self.counts)]


def outcome_table(summary: DetectionSummary) -> tuple[tuple, np.ndarray]:
    labels, probs = [], []
    for det in DETECTORS:
        for o in summary.outcomes:
            labels.append((det, None if o == "any" else o))
            probs.append(summary.probabilities[(det, o)])
    labels += [("absorbed", None), ("spilled", None)]
    probs += [summary.absorbed_fraction, summary.spill_fraction]
    p = np.clip(np.array(probs, dtype=float), 0.0, None)
    # roundoff-sized entries (e.g. -1e-14 spill) carry no physics
    p[p < 1e-15] = 0.0
    return tuple(labels), p / p.sum()


def _cdf(p: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(p)
    last = np.flatnonzero(p)[-1]
    cdf[last:] = 1.0
    return cdf


def sample_photons(s: Scenario | DetectionSummary, n: int, seed: int, *, workers: int = 1,
                   chunk: int = 1 << 16, backend: str | None = None) -> PhotonSample:
    """Draw ``n`` i.i.d. photon outcomes; event i depends only on (seed, i)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    summary = s if isinstance(s, DetectionSummary) else run_scenario(s).summary
    labels, p = outcome_table(summary)
    cdf = _cdf(p)
    kern = kernels.get_backend(backend)
    starts = range(0, n, chunk)

    def draw(start):
        return kern.categorical(seed, start, min(chunk, n - start), cdf)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(draw, starts))
    else:
        parts = [draw(st) for st in starts]
    return PhotonSample(int(seed), labels, p, np.concatenate(parts))
