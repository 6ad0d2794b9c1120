"""Exact path x polarization state algebra for the marked two-slit setup.

A photon state lives in a 4-dimensional space: two path states times two
polarization states.  Amplitudes are stored as a 2x2 complex matrix with
rows indexing the path axis and columns the polarization axis.  Each axis
carries a basis tag so every basis change is explicit.

Path bases:

* ``SLIT_AB``    rows are (|psi_A>, |psi_B>), the states coming from each slit
* ``PLUS_MINUS`` rows are (|phi+>, |phi->), the bright / dark fringe parts
* ``DETECTOR``   rows are (|D_A>, |D_B>), reachable only through the lens

Polarization bases:

* ``CIRCULAR`` columns are (|L>, |R>)
* ``LINEAR``   columns are (|H>, |V>)

Phases follow the literal convention |R> = (|H> + i|V>)/sqrt2 and
|L> = (|H> - i|V>)/sqrt2.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PathBasis",
    "PolBasis",
    "PathPolState",
    "DualityReport",
    "InvalidTargetError",
    "InvalidStateError",
    "make_initial_state",
    "make_state",
    "path_basis_change",
    "pol_basis_change",
    "apply_lens",
    "project_polarization",
    "detector_statistics",
    "duality_report",
    "equal_up_to_phase",
    "AXES",
]

_S = 1.0 / math.sqrt(2.0)
NULL_PROBABILITY = 1e-15


class InvalidTargetError(ValueError):
    """Requested basis cannot be reached by this operation."""


class InvalidStateError(ValueError):
    """Operation not defined for the state's current basis or history."""


class PathBasis(enum.Enum):
    SLIT_AB = "slit"
    PLUS_MINUS = "plusminus"
    DETECTOR = "detector"

    @property
    def labels(self) -> tuple[str, str]:
        return _PATH_LABELS[self]


class PolBasis(enum.Enum):
    CIRCULAR = "circular"
    LINEAR = "linear"

    @property
    def labels(self) -> tuple[str, str]:
        return _POL_LABELS[self]


_PATH_LABELS = {
    PathBasis.SLIT_AB: ("A", "B"),
    PathBasis.PLUS_MINUS: ("phi+", "phi-"),
    PathBasis.DETECTOR: ("D_A", "D_B"),
}
_POL_LABELS = {PolBasis.CIRCULAR: ("L", "R"), PolBasis.LINEAR: ("H", "V")}

# polarization axis -> (basis, column)
AXES = {"L": (PolBasis.CIRCULAR, 0), "R": (PolBasis.CIRCULAR, 1),
        "H": (PolBasis.LINEAR, 0), "V": (PolBasis.LINEAR, 1)}

# (slit A, slit B) -> (phi+, phi-); its own inverse
_HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) * _S
# column amplitudes (c_L, c_R) -> (c_H, c_V)
_CIRC_TO_LIN = np.array([[1.0, 1.0], [-1j, 1j]], dtype=complex) * _S
_LIN_TO_CIRC = _CIRC_TO_LIN.conj().T


@dataclass(frozen=True, eq=False)
class PathPolState:
    """Pure state on path (x) polarization.

    ``norm2`` is 1 for prepared states.  States returned by
    :func:`project_polarization` are renormalized and keep the squared norm
    of the projected branch in ``norm2``; a branch with numerically zero
    weight is flagged through ``null`` and keeps zero amplitudes.
    """

    amplitudes: np.ndarray
    path_basis: PathBasis = PathBasis.SLIT_AB
    pol_basis: PolBasis = PolBasis.CIRCULAR
    norm2: float = 1.0
    null: bool = False

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2, 2):
            raise ValueError(f"amplitudes must be 2x2, got shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def vector(self) -> np.ndarray:
        """Amplitudes flattened path-major: (p0 q0, p0 q1, p1 q0, p1 q1)."""
        return self.amplitudes.reshape(4)

    @property
    def total_probability(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    def amplitude(self, path: str, pol: str) -> complex:
        i = self.path_basis.labels.index(path)
        j = self.pol_basis.labels.index(pol)
        return complex(self.amplitudes[i, j])

    def table(self) -> list[tuple[str, str, complex]]:
        return [(p, q, complex(self.amplitudes[i, j]))
                for i, p in enumerate(self.path_basis.labels)
                for j, q in enumerate(self.pol_basis.labels)]

    def _replace(self, amplitudes, path_basis=None, pol_basis=None) -> PathPolState:
        return PathPolState(amplitudes,
                            path_basis or self.path_basis,
                            pol_basis or self.pol_basis,
                            norm2=self.norm2, null=self.null)


@dataclass(frozen=True)
class DualityReport:
    """Path distinguishability and fringe visibility of a lens-plane state.

    ``visibility`` is twice the off-diagonal magnitude of the path-reduced
    density matrix; ``distinguishability`` is sqrt(1 - |<m_A|m_B>|^2) for the
    normalized polarization markers attached to the two paths.
    """

    distinguishability: float
    visibility: float
    path_reduced_matrix: np.ndarray = field(repr=False)

    @property
    def bound(self) -> float:
        return self.distinguishability ** 2 + self.visibility ** 2


def make_state(amplitudes, path_basis=PathBasis.SLIT_AB, pol_basis=PolBasis.CIRCULAR,
               normalize=True) -> PathPolState:
    amps = np.array(amplitudes, dtype=complex)
    if normalize:
        n = np.linalg.norm(amps)
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        amps = amps / n
    return PathPolState(amps, path_basis, pol_basis)


def make_initial_state(markers: bool, open_slits: str = "both") -> PathPolState:
    """State leaving the slits.

    With markers the quarter-wave plates tag slit A with |L> and slit B with
    |R>.  Without markers both slits carry the source polarization |H>.
    ``open_slits`` may restrict the preparation to a single slit.
    """
    weights = {"both": (_S, _S), "A": (1.0, 0.0), "B": (0.0, 1.0)}
    try:
        wa, wb = weights[open_slits]
    except KeyError:
        raise ValueError(f"open_slits must be 'A', 'B' or 'both', got {open_slits!r}") from None
    if markers:
        amps = [[wa, 0.0], [0.0, wb]]
        return PathPolState(amps, PathBasis.SLIT_AB, PolBasis.CIRCULAR)
    amps = [[wa, 0.0], [wb, 0.0]]
    return PathPolState(amps, PathBasis.SLIT_AB, PolBasis.LINEAR)


def path_basis_change(s: PathPolState, target: PathBasis) -> PathPolState:
    if target is PathBasis.DETECTOR:
        raise InvalidTargetError("the detector basis is reached only through apply_lens")
    if s.path_basis is PathBasis.DETECTOR:
        raise InvalidStateError("state is already at the detectors")
    if target is s.path_basis:
        return s
    return s._replace(_HADAMARD @ s.amplitudes, path_basis=target)


def pol_basis_change(s: PathPolState, target: PolBasis) -> PathPolState:
    if target is s.pol_basis:
        return s
    m = _CIRC_TO_LIN if target is PolBasis.LINEAR else _LIN_TO_CIRC
    return s._replace(s.amplitudes @ m.T, pol_basis=target)


def apply_lens(s: PathPolState) -> PathPolState:
    """Lens unitary: slit A -> D_A, slit B -> D_B, polarization untouched."""
    if s.path_basis is PathBasis.DETECTOR:
        raise InvalidStateError("lens already applied")
    amps = s.amplitudes
    if s.path_basis is PathBasis.PLUS_MINUS:
        # U|phi+> = (D_A + D_B)/sqrt2, U|phi-> = (D_A - D_B)/sqrt2
        amps = _HADAMARD @ amps
    return s._replace(amps, path_basis=PathBasis.DETECTOR)


def project_polarization(s: PathPolState, outcome: str) -> tuple[float, PathPolState]:
    """Project onto one polarization axis and renormalize.

    The collapsed state keeps the path basis of ``s`` and is expressed in the
    polarization basis containing ``outcome``.
    """
    try:
        basis, col = AXES[outcome]
    except KeyError:
        raise ValueError(f"unknown polarization outcome {outcome!r}") from None
    t = pol_basis_change(s, basis)
    branch = np.zeros((2, 2), dtype=complex)
    branch[:, col] = t.amplitudes[:, col]
    p = float(np.sum(np.abs(branch) ** 2))
    if p < NULL_PROBABILITY:
        return 0.0, PathPolState(np.zeros((2, 2)), t.path_basis, basis, norm2=0.0, null=True)
    return p, PathPolState(branch / math.sqrt(p), t.path_basis, basis, norm2=p)


def detector_statistics(s: PathPolState, basis: PolBasis | None = None) -> dict[tuple[str, str], float]:
    """Joint probabilities over detector x polarization outcome.

    ``basis`` selects the polarization analysis; by default the state's own
    basis is used.
    """
    if s.path_basis is not PathBasis.DETECTOR:
        raise InvalidStateError(f"detector statistics need the detector basis, state is in {s.path_basis.value}")
    if basis is not None:
        s = pol_basis_change(s, basis)
    probs = np.abs(s.amplitudes) ** 2
    return {(p, q): float(probs[i, j])
            for i, p in enumerate(s.path_basis.labels)
            for j, q in enumerate(s.pol_basis.labels)}


def duality_report(s: PathPolState) -> DualityReport:
    if s.path_basis is not PathBasis.SLIT_AB:
        raise InvalidStateError("duality report needs the slit basis")
    amps = s.amplitudes
    rho = amps @ amps.conj().T
    rho = rho / np.trace(rho).real
    visibility = min(1.0, 2.0 * abs(rho[0, 1]))
    na, nb = np.linalg.norm(amps[0]), np.linalg.norm(amps[1])
    if na == 0 or nb == 0:
        # one path only: the path is known with certainty
        overlap = 0.0
    else:
        overlap = abs(np.vdot(amps[0] / na, amps[1] / nb))
    distinguishability = math.sqrt(max(0.0, 1.0 - min(1.0, overlap) ** 2))
    return DualityReport(distinguishability, visibility, rho)


def equal_up_to_phase(a: PathPolState, b: PathPolState, tol: float = 1e-12) -> bool:
    """True when both states share bases and |<a|b>| = |a||b| within ``tol``."""
    if a.path_basis is not b.path_basis or a.pol_basis is not b.pol_basis:
        return False
    va, vb = a.vector, b.vector
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        return na == nb
    return abs(abs(np.vdot(va, vb)) / (na * nb) - 1.0) <= tol and abs(na - nb) <= tol
