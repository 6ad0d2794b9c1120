"""Polarized scalar Fresnel model of the two-slit apparatus.

One transverse dimension.  Slit A sits at -d/2 and slit B at +d/2; the lens
forms inverted images, so the detector window D_A is centred on +M d/2 and
D_B on -M d/2 with M = z_image / z_lens.

Power bookkeeping: every field starts with unit power.  Light removed by
the wires is accumulated in ``PolarizedField.absorbed``; light that leaves
the computational window (band limit of the propagator, lens aperture) is
accumulated in ``PolarizedField.escaped``.  ``power + absorbed + escaped``
stays equal to one.
"""
from __future__ import annotations

import dataclasses
import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels

__all__ = [
    "ConfigError",
    "GeometryError",
    "SamplingError",
    "NoFringesError",
    "JONES",
    "ANALYZER_OUTCOMES",
    "WireSpec",
    "ExperimentConfig",
    "PolarizedField",
    "DetectionSummary",
    "Simulation",
    "make_grid",
    "make_aperture_field",
    "propagate",
    "apply_thin_lens",
    "apply_wire_mask",
    "find_dark_fringes",
    "find_extrema",
    "fringe_visibility",
    "dark_fringe_wires",
    "detect",
    "simulate",
]

_S = 1.0 / math.sqrt(2.0)

JONES = {
    "H": (1.0 + 0j, 0j),
    "V": (0j, 1.0 + 0j),
    "L": (_S + 0j, -1j * _S),
    "R": (_S + 0j, 1j * _S),
}
# analyzer setting -> resolved outcomes (pass axis first, then its partner)
ANALYZER_OUTCOMES = {
    "none": ("any",),
    "H": ("H", "V"),
    "V": ("V", "H"),
    "L": ("L", "R"),
    "R": ("R", "L"),
}
PROJECTIONS = ("H", "V", "L", "R", "total")
DETECTORS = ("D_A", "D_B")

# fraction of the band limit over which the transfer function is tapered
DEFAULT_TAPER = 0.05


class ConfigError(ValueError):
    pass


class GeometryError(ConfigError):
    pass


class SamplingError(ConfigError):
    pass


class NoFringesError(ValueError):
    pass


@dataclass(frozen=True)
class WireSpec:
    """Ideal absorbing wires: centre positions and a common width (m)."""

    centers: tuple[float, ...]
    width: float

    def __post_init__(self):
        centers = tuple(sorted(float(c) for c in self.centers))
        object.__setattr__(self, "centers", centers)
        if self.width <= 0:
            raise GeometryError(f"wire width must be positive, got {self.width}")
        gaps = np.diff(centers)
        if len(gaps) and gaps.min() <= self.width:
            raise GeometryError("wires overlap: centre spacing must exceed the wire width")

    def __len__(self):
        return len(self.centers)

    def fill_factor(self, envelope_width: float) -> float:
        return len(self.centers) * self.width / envelope_width

    def check_inside(self, halfwidth: float):
        for c in self.centers:
            if abs(c) + self.width / 2 > halfwidth:
                raise GeometryError(f"wire at {c:.6g} m extends past the grid edge {halfwidth:.6g} m")


def _is_pow2(n: int) -> bool:
    return n > 0 and n & (n - 1) == 0


@dataclass(frozen=True)
class ExperimentConfig:
    """Geometry, polarization settings and grid of one apparatus run.  SI units."""

    slit_width: float = 30e-6
    slit_separation: float = 250e-6
    z_lens: float = 1.0
    focal_length: float = 0.25
    z_image: float | None = None
    wavelength: float = 650e-9
    grid_halfwidth: float = 0.08
    grid_points: int = 2 ** 18
    markers: bool = False
    analyzer: str = "none"
    wires: WireSpec | None = None
    open_slits: str = "both"
    enforce_imaging: bool = True

    def __post_init__(self):
        if self.z_image is None:
            if self.z_lens <= self.focal_length:
                raise GeometryError("z_lens must exceed the focal length to form a real image")
            zi = 1.0 / (1.0 / self.focal_length - 1.0 / self.z_lens)
            object.__setattr__(self, "z_image", zi)
        self.validate()

    def validate(self):
        a, d = self.slit_width, self.slit_separation
        if min(a, d, self.z_lens, self.focal_length, self.z_image, self.wavelength,
               self.grid_halfwidth) <= 0:
            raise GeometryError("lengths must be positive")
        if d < a:
            raise GeometryError(f"slits overlap: separation {d:.6g} m < width {a:.6g} m")
        if self.open_slits not in ("A", "B", "both"):
            raise ConfigError(f"open_slits must be 'A', 'B' or 'both', got {self.open_slits!r}")
        if self.analyzer not in ANALYZER_OUTCOMES:
            raise ConfigError(f"analyzer must be one of {sorted(ANALYZER_OUTCOMES)}, got {self.analyzer!r}")
        if self.enforce_imaging:
            lhs = 1.0 / self.z_lens + 1.0 / self.z_image
            if abs(lhs * self.focal_length - 1.0) > 1e-9:
                raise GeometryError("imaging condition 1/z_lens + 1/z_image = 1/f violated")
        if not _is_pow2(self.grid_points) or self.grid_points < 2048:
            raise ConfigError(f"grid_points must be a power of two >= 2048, got {self.grid_points}")
        if self.grid_halfwidth < 4 * (d + a):
            raise GeometryError("grid_halfwidth must be at least 4 * (slit_separation + slit_width)")
        limit = self.wavelength * self.z_lens / (4 * self.grid_halfwidth)
        if self.dx > limit:
            raise SamplingError(
                f"sampling criterion dx <= wavelength*z_lens/(4*grid_halfwidth) violated: "
                f"dx = {self.dx:.4g} m > {limit:.4g} m")
        if self.wires is not None:
            self.wires.check_inside(self.grid_halfwidth)

    @property
    def dx(self) -> float:
        return 2 * self.grid_halfwidth / self.grid_points

    @property
    def magnification(self) -> float:
        return self.z_image / self.z_lens

    @property
    def fringe_period(self) -> float:
        """Two-slit fringe spacing at the lens plane."""
        return self.wavelength * self.z_lens / self.slit_separation

    @property
    def envelope_width(self) -> float:
        """Equivalent width of the single-slit diffraction envelope at the lens plane."""
        return self.wavelength * self.z_lens / self.slit_width

    @property
    def slit_centers(self) -> dict[str, float]:
        return {"A": -self.slit_separation / 2, "B": self.slit_separation / 2}

    @property
    def detector_centers(self) -> dict[str, float]:
        m = self.magnification
        return {"D_A": -m * self.slit_centers["A"], "D_B": -m * self.slit_centers["B"]}

    @property
    def window_width(self) -> float:
        return 3 * self.magnification * self.slit_width

    def replace(self, **changes) -> ExperimentConfig:
        if "focal_length" in changes or "z_lens" in changes:
            changes.setdefault("z_image", None)
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        if self.wires is not None:
            out["wires"] = {"centers": list(self.wires.centers), "width": self.wires.width}
        return out


@dataclass(frozen=True, eq=False)
class PolarizedField:
    """H and V complex amplitudes on a uniform transverse grid."""

    x: np.ndarray
    e_h: np.ndarray
    e_v: np.ndarray
    wavelength: float
    plane: str = ""
    absorbed: float = 0.0
    escaped: float = 0.0

    def __post_init__(self):
        n = len(self.x)
        if n < 2 or len(self.e_h) != n or len(self.e_v) != n:
            raise ValueError("x, e_h and e_v must share a length of at least 2")
        for name in ("e_h", "e_v"):
            arr = np.asarray(getattr(self, name), dtype=complex)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def halfwidth(self) -> float:
        return len(self.x) * self.dx / 2

    @property
    def power(self) -> float:
        return float((np.vdot(self.e_h, self.e_h).real + np.vdot(self.e_v, self.e_v).real) * self.dx)

    def intensity(self, projection: str = "total") -> np.ndarray:
        if projection == "total":
            return (self.e_h.real ** 2 + self.e_h.imag ** 2 + self.e_v.real ** 2 + self.e_v.imag ** 2)
        try:
            a, b = JONES[projection]
        except KeyError:
            raise ValueError(f"projection must be one of {PROJECTIONS}, got {projection!r}") from None
        return kernels.projected_intensity(self.e_h, self.e_v, a, b)

    def evolve(self, e_h, e_v, **changes) -> PolarizedField:
        return dataclasses.replace(self, e_h=e_h, e_v=e_v, **changes)


@dataclass(frozen=True)
class DetectionSummary:
    """Detector x analyzer-outcome probabilities plus the loss channels."""

    analyzer: str
    outcomes: tuple[str, ...]
    probabilities: dict
    absorbed_fraction: float
    spill_fraction: float
    escaped_fraction: float = 0.0
    fill_factor: float = 0.0
    fringe_visibility: dict = field(default_factory=dict)

    def p(self, detector: str, outcome: str | None = None) -> float:
        if outcome is None:
            return sum(self.probabilities[(detector, o)] for o in self.outcomes)
        return self.probabilities[(detector, outcome)]

    @property
    def detected(self) -> float:
        return sum(self.probabilities.values())

    def share(self, detector: str, outcome: str) -> float:
        """Fraction of the ``outcome`` photons that land at ``detector``."""
        tot = sum(self.probabilities[(d, outcome)] for d in DETECTORS)
        return self.probabilities[(detector, outcome)] / tot if tot > 0 else float("nan")

    @property
    def closure(self) -> float:
        return self.detected + self.absorbed_fraction + self.spill_fraction

    def to_dict(self) -> dict:
        return {
            "analyzer": self.analyzer,
            "outcomes": list(self.outcomes),
            "probabilities": {d: {o: self.probabilities[(d, o)] for o in self.outcomes} for d in DETECTORS},
            "absorbed_fraction": self.absorbed_fraction,
            "spill_fraction": self.spill_fraction,
            "escaped_fraction": self.escaped_fraction,
            "fill_factor": self.fill_factor,
            "fringe_visibility": dict(self.fringe_visibility),
        }


def make_grid(halfwidth: float, points: int) -> np.ndarray:
    dx = 2 * halfwidth / points
    return (np.arange(points) - points // 2) * dx


def _coverage(x, dx, lo, hi):
    """Fraction of each grid cell [x - dx/2, x + dx/2] inside [lo, hi]."""
    left = np.maximum(x - dx / 2, lo)
    right = np.minimum(x + dx / 2, hi)
    return np.clip(right - left, 0.0, None) / dx


def make_aperture_field(cfg: ExperimentConfig) -> PolarizedField:
    """Unit-power field just behind the slits and quarter-wave plates.

    Slit edges falling inside a cell get fractional amplitude so the slit
    centre and width are not snapped to the grid.
    """
    a, d = cfg.slit_width, cfg.slit_separation
    if d < a:
        raise GeometryError(f"slits overlap: separation {d:.6g} m < width {a:.6g} m")
    x = make_grid(cfg.grid_halfwidth, cfg.grid_points)
    dx = cfg.dx
    e_h = np.zeros(len(x), dtype=complex)
    e_v = np.zeros(len(x), dtype=complex)
    for slit, c in cfg.slit_centers.items():
        if cfg.open_slits not in ("both", slit):
            continue
        t = _coverage(x, dx, c - a / 2, c + a / 2)
        jh, jv = JONES[("L" if slit == "A" else "R") if cfg.markers else "H"]
        e_h += jh * t
        e_v += jv * t
    f = PolarizedField(x, e_h, e_v, cfg.wavelength, "aperture")
    norm = math.sqrt(f.power)
    return f.evolve(e_h / norm, e_v / norm)


def _transfer(n: int, dx: float, wavelength: float, distance: float, taper: float) -> np.ndarray:
    """Band-limited Fresnel transfer function in numpy FFT order.

    Spatial frequencies that would carry light further than half the grid
    width are removed, with a raised-cosine roll-off over the last ``taper``
    fraction of the band to avoid edge ringing.
    """
    fx = np.fft.fftfreq(n, dx)
    z = abs(distance)
    k = 2 * math.pi / wavelength
    h = np.exp(1j * (k * distance - math.pi * wavelength * distance * fx * fx))
    f_lim = n * dx / (2 * wavelength * z)
    r = np.abs(fx) / f_lim
    if taper > 0:
        w = np.clip((1.0 - r) / taper, 0.0, 1.0)
        h *= np.sin(0.5 * math.pi * w) ** 2
    else:
        h[r > 1.0] = 0.0
    return h


def check_sampling(dx: float, halfwidth: float, wavelength: float, distance: float):
    limit = wavelength * abs(distance) / (4 * halfwidth)
    if dx > limit:
        raise SamplingError(
            f"sampling criterion dx <= wavelength*distance/(4*grid_halfwidth) violated for "
            f"distance {distance:.6g} m: dx = {dx:.4g} m > {limit:.4g} m")


def propagate(fld: PolarizedField, distance: float, *, taper: float = DEFAULT_TAPER,
              plane: str | None = None) -> PolarizedField:
    """Free-space propagation of both components by the same linear kernel."""
    if distance == 0:
        return fld
    n, dx = len(fld.x), fld.dx
    check_sampling(dx, fld.halfwidth, fld.wavelength, distance)
    h = _transfer(n, dx, fld.wavelength, distance, taper)
    loss = 1.0 - (h.real ** 2 + h.imag ** 2)
    out, lost = [], 0.0
    for comp in (fld.e_h, fld.e_v):
        spec = np.fft.fft(comp)
        lost += float(np.dot(loss, spec.real ** 2 + spec.imag ** 2)) * dx / n
        out.append(np.fft.ifft(spec * h))
    return fld.evolve(out[0], out[1], escaped=fld.escaped + lost,
                      plane=fld.plane if plane is None else plane)


def apply_thin_lens(fld: PolarizedField, f: float, *, aperture: float | None = None) -> PolarizedField:
    """Quadratic phase exp(-i pi x^2 / (lambda f)); optional aperture half-width."""
    e_h, e_v, escaped = fld.e_h, fld.e_v, fld.escaped
    if aperture is not None:
        keep = np.abs(fld.x) <= aperture
        before = fld.power
        e_h, e_v = e_h * keep, e_v * keep
        escaped += before - dataclasses.replace(fld, e_h=e_h, e_v=e_v).power
    if math.isfinite(f):
        phase = np.exp(-1j * math.pi * fld.x ** 2 / (fld.wavelength * f))
        e_h, e_v = e_h * phase, e_v * phase
    return fld.evolve(e_h, e_v, escaped=escaped, plane="lens-exit")


def apply_wire_mask(fld: PolarizedField, wires: WireSpec | None) -> tuple[PolarizedField, float]:
    """Zero both components on the wire supports; return the absorbed fraction."""
    if wires is None or len(wires) == 0:
        return fld, 0.0
    wires.check_inside(fld.halfwidth)
    keep = np.ones(len(fld.x), dtype=bool)
    for c in wires.centers:
        keep &= np.abs(fld.x - c) > wires.width / 2
    incident = fld.power
    out = fld.evolve(fld.e_h * keep, fld.e_v * keep)
    removed = incident - out.power
    out = dataclasses.replace(out, absorbed=fld.absorbed + removed)
    return out, (removed / incident if incident > 0 else 0.0)


def fringe_visibility(x: np.ndarray, intensity: np.ndarray, period: float, center: float = 0.0) -> float:
    """(I_max - I_min) / (I_max + I_min) over one fringe period around ``center``."""
    win = np.abs(x - center) <= period / 2
    seg = intensity[win]
    hi, lo = float(seg.max()), float(seg.min())
    return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0


def find_extrema(x: np.ndarray, values: np.ndarray, count: int, period: float,
                 kind: str = "min") -> np.ndarray:
    """Positions of the ``count`` extrema nearest the axis.

    A sample counts as an extremum when it is the lowest (or highest) value
    within a quarter period on either side, which ignores ripple much finer
    than the fringes.  Positions are refined by a parabola through the three
    samples around each extremum.
    """
    if kind not in ("min", "max"):
        raise ValueError("kind must be 'min' or 'max'")
    v = np.asarray(values, dtype=float)
    if kind == "max":
        v = -v
    dx = float(x[1] - x[0])
    half = max(1, int(period / (4 * dx)))
    floor = ndimage.minimum_filter1d(v, size=2 * half + 1, mode="nearest")
    idx = np.flatnonzero(v == floor)
    idx = idx[(idx > 0) & (idx < len(v) - 1)]
    if len(idx):
        # a flat run yields one candidate
        idx = idx[np.concatenate(([True], np.diff(idx) > 1))]
    idx = idx[np.argsort(np.abs(x[idx]), kind="stable")][:count]
    if len(idx) < count:
        raise NoFringesError(f"found only {len(idx)} {kind}ima, wanted {count}")
    y0, y1, y2 = v[idx - 1], v[idx], v[idx + 1]
    denom = y0 - 2 * y1 + y2
    with np.errstate(divide="ignore", invalid="ignore"):
        offset = np.where(denom > 0, 0.5 * (y0 - y2) / denom, 0.0)
    return np.sort(x[idx] + offset * dx)


def find_dark_fringes(fld: PolarizedField, count: int, period: float, *,
                      min_visibility: float = 0.05) -> np.ndarray:
    """Dark-fringe positions of the total intensity nearest the axis."""
    total = fld.intensity("total")
    vis = fringe_visibility(fld.x, total, period)
    if vis < min_visibility:
        raise NoFringesError(f"total-intensity visibility {vis:.4g} below {min_visibility}; no dark fringes")
    return find_extrema(fld.x, total, count, period, kind="min")


def detect(image: PolarizedField, cfg: ExperimentConfig, *, visibility: dict | None = None) -> DetectionSummary:
    """Integrate analyzer-resolved power over the two detector windows."""
    centers = cfg.detector_centers
    w = cfg.window_width
    if abs(centers["D_A"] - centers["D_B"]) < w:
        raise GeometryError("detector windows overlap")
    outcomes = ANALYZER_OUTCOMES[cfg.analyzer]
    dx = image.dx
    windows = {det: _coverage(image.x, dx, c - w / 2, c + w / 2) for det, c in centers.items()}
    probs = {}
    for o in outcomes:
        inten = image.intensity("total" if o == "any" else o)
        for det in DETECTORS:
            probs[(det, o)] = float(np.dot(windows[det], inten) * dx)
    in_windows = sum(probs.values())
    spill = image.escaped + (image.power - in_windows)
    fill = cfg.wires.fill_factor(cfg.envelope_width) if cfg.wires is not None else 0.0
    return DetectionSummary(cfg.analyzer, outcomes, probs, image.absorbed, spill,
                            escaped_fraction=image.escaped, fill_factor=fill,
                            fringe_visibility=dict(visibility or {}))


@dataclass(frozen=True, eq=False)
class Simulation:
    config: ExperimentConfig
    aperture: PolarizedField
    lens_entry: PolarizedField
    image: PolarizedField
    summary: DetectionSummary
    wire_absorbed_fraction: float

    def plane(self, name: str) -> PolarizedField:
        planes = {"aperture": self.aperture, "lens-entry": self.lens_entry, "image": self.image}
        try:
            return planes[name]
        except KeyError:
            raise ValueError(f"plane must be one of {sorted(planes)}, got {name!r}") from None


def simulate(cfg: ExperimentConfig) -> Simulation:
    """Slits -> free space -> wires -> lens -> free space -> detectors."""
    aperture = make_aperture_field(cfg)
    lens_entry = propagate(aperture, cfg.z_lens, plane="lens-entry")
    vis = {p: fringe_visibility(lens_entry.x, lens_entry.intensity(p), cfg.fringe_period)
           for p in PROJECTIONS}
    masked, absorbed = apply_wire_mask(lens_entry, cfg.wires)
    image = propagate(apply_thin_lens(masked, cfg.focal_length), cfg.z_image, plane="image")
    return Simulation(cfg, aperture, lens_entry, image, detect(image, cfg, visibility=vis), absorbed)


@functools.lru_cache(maxsize=16)
def dark_fringe_wires(cfg: ExperimentConfig, count: int = 6, width_fraction: float = 1 / 12) -> WireSpec:
    """Wires on the dark fringes of the unmarked two-slit pattern.

    The fringes are located on a reference run with both slits open and no
    markers, as when the pattern is first observed on a screen; wire width
    is ``width_fraction`` of the fringe period.
    """
    ref = cfg.replace(markers=False, open_slits="both", wires=None, analyzer="none")
    lens_entry = propagate(make_aperture_field(ref), ref.z_lens)
    centers = find_dark_fringes(lens_entry, count, ref.fringe_period)
    return WireSpec(tuple(centers), width_fraction * ref.fringe_period)
