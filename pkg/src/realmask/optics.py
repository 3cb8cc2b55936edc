"""Jones-calculus model of the path/polarization setup.

The photon state lives on a handful of parallel spatial rails, each carrying a
polarization qubit (H, V).  Waveplates act on the polarization of selected
rails; beam displacers shift one polarization component sideways by a fixed
number of rail units, which is how the walk's conditional translation is
implemented in glass.

Conventions (pinned so the closed-form preparation pipeline holds verbatim):

  HWP(theta) = [[cos 2t,  sin 2t],
                [sin 2t, -cos 2t]]            (theta in degrees, t in radians)

  QWP(theta) = 1/sqrt(2) [[1 - i cos 2t, -i sin 2t],
                          [-i sin 2t,    1 + i cos 2t]]

With these, HWP(45) = X, HWP(0) = Z, and a QWP at 45 degrees after an HWP at
phi/4 + 22.5 degrees turns |H> into (|H> + e^{i phi}|V>)/sqrt(2) up to a
global phase, which is the convention self-test run by the test-suite.

Beam-displacer routing is per-instance data (h_shift, v_shift) because the
three modules use different orientations: the preparation module displaces H
by -4 then V by +2 (matching the -3,-1,1,3 rail labels), while the masking
module uses the symmetric (-1, +1) form so that rail labels coincide with
walker positions at every step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
from scipy.optimize import minimize

from .qcore import EPS_EXACT, StateVector
from .walk import COIN_C1, COIN_C2

H, V = 0, 1
POL_LABELS = ("H", "V")


class SolverError(RuntimeError):
    """Numeric angle solve did not reach the required residual."""


def hwp_jones(theta_deg: float) -> np.ndarray:
    """Half-wave plate at `theta_deg` from horizontal, in the (H, V) basis."""
    t = math.radians(theta_deg)
    c, s = math.cos(2 * t), math.sin(2 * t)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp_jones(theta_deg: float) -> np.ndarray:
    """Quarter-wave plate at `theta_deg`; see the module docstring for the sign convention."""
    t = math.radians(theta_deg)
    c, s = math.cos(2 * t), math.sin(2 * t)
    return np.array([[1 - 1j * c, -1j * s], [-1j * s, 1 + 1j * c]], dtype=complex) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class PathPolState:
    """Sparse rail/polarization amplitudes: {(rail, H|V): amplitude}."""

    amplitudes: Mapping[tuple[int, int], complex]

    def __init__(self, amplitudes: Mapping[tuple[int, int], complex], *, _skip_check: bool = False):
        amps = {}
        for (x, p), a in amplitudes.items():
            if p not in (H, V):
                raise ValueError(f"polarization must be {H} (H) or {V} (V), got {p}")
            if a != 0:
                amps[(int(x), int(p))] = complex(a)
        if not _skip_check:
            norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
            if abs(norm - 1.0) > EPS_EXACT:
                raise ValueError(f"state norm {norm} deviates from 1 by more than {EPS_EXACT}")
        object.__setattr__(self, "amplitudes", amps)

    def amplitude(self, rail: int, pol: int) -> complex:
        return self.amplitudes.get((rail, pol), 0j)

    def rails(self) -> set[int]:
        return {x for (x, _p) in self.amplitudes}


@dataclass(frozen=True)
class Waveplate:
    """HWP/QWP/XPLATE acting on the polarization of the listed rails (None = all)."""

    kind: str  # "HWP" | "QWP" | "XPLATE"
    angle_deg: float
    paths: frozenset[int] | None = None

    def __post_init__(self):
        if self.kind not in ("HWP", "QWP", "XPLATE"):
            raise ValueError(f"unknown waveplate kind {self.kind!r}")
        if self.kind == "XPLATE" and self.angle_deg != 45.0:
            raise ValueError("XPLATE is a fixed 45-degree half-wave plate")
        if self.paths is not None:
            object.__setattr__(self, "paths", frozenset(int(p) for p in self.paths))

    def jones(self) -> np.ndarray:
        if self.kind == "QWP":
            return qwp_jones(self.angle_deg)
        return hwp_jones(self.angle_deg)


def xplate(paths: Iterable[int] | None = None) -> Waveplate:
    """45-degree HWP (the X / NOT gate on polarization)."""
    return Waveplate("XPLATE", 45.0, frozenset(paths) if paths is not None else None)


@dataclass(frozen=True)
class BeamDisplacer:
    """Shift H-amplitude by h_shift rails and V-amplitude by v_shift rails."""

    h_shift: int
    v_shift: int


@dataclass(frozen=True)
class PolarizingBS:
    """Ideal polarizing beam splitter; modeled as the identity on amplitudes
    (perfect H/V separation happens at the detector mapping)."""

    paths: frozenset[int] | None = None


Element = Union[Waveplate, BeamDisplacer, PolarizingBS]


def apply_element(state: PathPolState, element: Element) -> PathPolState:
    if isinstance(element, PolarizingBS):
        return state
    out: dict[tuple[int, int], complex] = {}
    if isinstance(element, BeamDisplacer):
        for (x, p), a in state.amplitudes.items():
            key = (x + (element.h_shift if p == H else element.v_shift), p)
            if key in out:
                raise ValueError(f"beam displacer routed two amplitudes onto {key}")
            out[key] = a
        return PathPolState(out, _skip_check=True)
    mat = element.jones()
    for (x, p), a in state.amplitudes.items():
        if element.paths is not None and x not in element.paths:
            out[(x, p)] = out.get((x, p), 0j) + a
            continue
        for p2 in (H, V):
            amp = mat[p2, p] * a
            if amp != 0:
                out[(x, p2)] = out.get((x, p2), 0j) + amp
    return PathPolState(out, _skip_check=True)


def run_layout(state: PathPolState, layout: Sequence[Element]) -> PathPolState:
    for element in layout:
        state = apply_element(state, element)
    return state


# ---------------------------------------------------------------------------
# Preparation module: PBS -> H1 -> BD -> {H2 @ -3, H3 @ 1} [-> Q1 @ -3] -> BD
#                      -> X-plates @ {-3, 1}

@dataclass(frozen=True)
class PrepAngles:
    """Half-wave-plate angles (degrees) that set the four real amplitudes."""

    h1: float
    h2: float
    h3: float


def solve_prep_angles(a) -> PrepAngles:
    """Invert the preparation pipeline for a real normalized target.

    Branch choice: h1 in [0, 45] so cos(2 h1), sin(2 h1) >= 0; then
    2 h2 = atan2(a1, a0) and 2 h3 = atan2(a2, -a3), each angle folded into
    [0, 180).  Degenerate branches (a0=a1=0 or a2=a3=0) leave the
    unconstrained angle at 0.
    """
    vec = np.asarray(a, dtype=float)
    if vec.shape != (4,):
        raise ValueError("target must be a real 4-vector")
    if abs(np.linalg.norm(vec) - 1.0) > EPS_EXACT:
        raise ValueError("target must be normalized")
    r01 = math.hypot(vec[0], vec[1])
    r23 = math.hypot(vec[2], vec[3])
    h1 = math.degrees(math.atan2(r23, r01)) / 2.0
    h2 = math.degrees(math.atan2(vec[1], vec[0])) / 2.0 if r01 > EPS_EXACT else 0.0
    h3 = math.degrees(math.atan2(vec[2], -vec[3])) / 2.0 if r23 > EPS_EXACT else 0.0
    return PrepAngles(h1 % 180.0, h2 % 180.0, h3 % 180.0)


def phase_prep_angles(phi_deg: float) -> PrepAngles:
    """Angles for the complex probe (|0> + e^{i phi}|1>)/sqrt(2); use with q1_deg=45."""
    return PrepAngles(h1=0.0, h2=phi_deg / 4.0 + 22.5, h3=0.0)


PREP_INPUT_RAIL = 1  # rail carrying the |H>-polarized photon out of the PBS


def preparation_layout(angles: PrepAngles, q1_deg: float | None = None) -> tuple[Element, ...]:
    elems: list[Element] = [
        PolarizingBS(),
        Waveplate("HWP", angles.h1, frozenset({PREP_INPUT_RAIL})),
        BeamDisplacer(h_shift=-4, v_shift=0),
        Waveplate("HWP", angles.h2, frozenset({-3})),
        Waveplate("HWP", angles.h3, frozenset({1})),
    ]
    if q1_deg is not None:
        elems.append(Waveplate("QWP", q1_deg, frozenset({-3})))
    elems += [BeamDisplacer(h_shift=0, v_shift=2), xplate({-3, 1})]
    return tuple(elems)


def simulate_preparation(angles: PrepAngles, q1_deg: float | None = None) -> PathPolState:
    """Run the preparation module on the fixed |rail 1, H> input."""
    start = PathPolState({(PREP_INPUT_RAIL, H): 1.0 + 0j})
    return run_layout(start, preparation_layout(angles, q1_deg))


def prepared_amplitudes(state: PathPolState) -> np.ndarray:
    """Collapse a prepared all-V state on rails -3,-1,1,3 to its 4 amplitudes."""
    vec = np.zeros(4, dtype=complex)
    rail_index = {-3: 0, -1: 1, 1: 2, 3: 3}
    for (x, p), a in state.amplitudes.items():
        if abs(a) <= EPS_EXACT:
            continue
        if p != V or x not in rail_index:
            raise ValueError(f"unexpected amplitude at rail {x} pol {POL_LABELS[p]}")
        vec[rail_index[x]] = a
    return vec


# ---------------------------------------------------------------------------
# Masking module: the walk schedule in glass.  Coins C1/C2 are realized as
# QWP-HWP-QWP triples; the two triples share one global phase e^{i pi/4}, so
# the module output equals the walk output up to a single overall phase.

_COIN_TRIPLES = {
    "C1": (135.0, 45.0, 90.0),  # QWP, HWP, QWP angles, in beam order
    "C2": (135.0, 0.0, 90.0),
}


def _coin_triple_matrix(q_in: float, h_mid: float, q_out: float) -> np.ndarray:
    return qwp_jones(q_out) @ hwp_jones(h_mid) @ qwp_jones(q_in)


@lru_cache(maxsize=None)
def _verified_coin_triples() -> dict[str, tuple[float, float, float]]:
    for name, target in (("C1", COIN_C1), ("C2", COIN_C2)):
        got = _coin_triple_matrix(*_COIN_TRIPLES[name])
        overlap = abs(np.trace(target.conj().T @ got)) ** 2 / 4.0
        if 1.0 - overlap > EPS_EXACT:
            raise AssertionError(f"waveplate triple for {name} drifted: infidelity {1 - overlap:.3e}")
    return dict(_COIN_TRIPLES)


def _coin_triple_elements(name: str, rail: int) -> list[Element]:
    q_in, h_mid, q_out = _verified_coin_triples()[name]
    scope = frozenset({rail})
    return [
        Waveplate("QWP", q_in, scope),
        Waveplate("HWP", h_mid, scope),
        Waveplate("QWP", q_out, scope),
    ]


def masking_layout() -> tuple[Element, ...]:
    """Optical layout of the masker; rail labels track walker positions."""
    step = BeamDisplacer(h_shift=-1, v_shift=+1)
    elems: list[Element] = [
        xplate({-1, 3}),
        step,
        *_coin_triple_elements("C2", -2),
        *_coin_triple_elements("C1", 2),
        step,
        xplate({-3, 3}),
        step,
        step,
        Waveplate("HWP", 0.0, frozenset({-1})),
        # XZ at rail +1 as two stacked plates (Z first, then X).
        Waveplate("HWP", 0.0, frozenset({1})),
        xplate({1}),
    ]
    return tuple(elems)


def extract_two_qubit(state: PathPolState, *, tol: float = EPS_EXACT) -> StateVector:
    """Rails +1/-1 as qubit A (+1 -> |0>), polarization as qubit B (H -> |0>)."""
    stray = max(
        (abs(a) for (x, _p), a in state.amplitudes.items() if x not in (1, -1)),
        default=0.0,
    )
    if stray > tol:
        raise ValueError(f"support outside rails +/-1 with amplitude {stray:.3e}")
    vec = np.zeros(4, dtype=complex)
    for (x, p), a in state.amplitudes.items():
        if x in (1, -1):
            qa = 0 if x == 1 else 1
            vec[2 * qa + p] = a
    return StateVector.normalized(vec)


def embed_two_qubit(psi: StateVector) -> PathPolState:
    """Inverse of extract_two_qubit: put a two-qubit state onto rails +/-1."""
    if psi.dim != 4:
        raise ValueError("expected a two-qubit state")
    amps = {}
    for qa in (0, 1):
        for p in (H, V):
            a = psi.amplitudes[2 * qa + p]
            if a != 0:
                amps[(1 if qa == 0 else -1, p)] = a
    return PathPolState(amps)


def simulate_masking(a=None, *, q1_deg: float | None = None, angles: PrepAngles | None = None) -> StateVector:
    """Full table: preparation (solved from real `a` unless `angles` given) + masking module."""
    if angles is None:
        angles = solve_prep_angles(a)
    state = simulate_preparation(angles, q1_deg)
    state = run_layout(state, masking_layout())
    return extract_two_qubit(state)


# ---------------------------------------------------------------------------
# Measurement module (local projective measurement onto a product basis).

@dataclass(frozen=True)
class MeasSetting:
    """Product-basis parameters, radians.

    Path qubit basis:  |f0> = cos(gamma)|0> + e^{i zeta} sin(gamma)|1>,
                       |f1> = sin(gamma)|0> - e^{i zeta} cos(gamma)|1>.
    Polarization basis: same form with (alpha, beta).
    """

    gamma: float
    zeta: float
    alpha: float
    beta: float

    def path_basis(self) -> tuple[np.ndarray, np.ndarray]:
        return _basis_pair(self.gamma, self.zeta)

    def pol_basis(self) -> tuple[np.ndarray, np.ndarray]:
        return _basis_pair(self.alpha, self.beta)

    def product_basis(self) -> list[np.ndarray]:
        f0, f1 = self.path_basis()
        p0, p1 = self.pol_basis()
        basis = [np.kron(f0, p0), np.kron(f0, p1), np.kron(f1, p0), np.kron(f1, p1)]
        gram = np.array([[np.vdot(u, w) for w in basis] for u in basis])
        if np.abs(gram - np.eye(4)).max() > EPS_EXACT:
            raise AssertionError("product basis lost orthonormality")
        return basis


def _basis_pair(theta: float, phase: float) -> tuple[np.ndarray, np.ndarray]:
    e = np.exp(1j * phase)
    v0 = np.array([math.cos(theta), e * math.sin(theta)], dtype=complex)
    v1 = np.array([math.sin(theta), -e * math.cos(theta)], dtype=complex)
    return v0, v1


_PAULI_EIGENBASIS = {"X": (math.pi / 4, 0.0), "Y": (math.pi / 4, math.pi / 2), "Z": (0.0, 0.0)}


def pauli_meas_setting(first: str, second: str) -> MeasSetting:
    """Product setting whose +1/-1 basis states are the Pauli eigenvectors."""
    g, z = _PAULI_EIGENBASIS[first]
    a, b = _PAULI_EIGENBASIS[second]
    return MeasSetting(gamma=g, zeta=z, alpha=a, beta=b)


@dataclass(frozen=True)
class MeasAngles:
    """Compiled waveplate angles (degrees) for the measurement module."""

    q2: float
    h4: float
    q3: float
    h5: float

    residual: float = 0.0


def _horizontal_seed(target: np.ndarray) -> np.ndarray:
    """Closed-form starting point for the angle solve.

    Writing the target as (cos a, e^{ib} sin a) up to a global phase, the pair
    S = asin(-sin 2a sin b), D = atan2(sin 2a cos b, cos 2a) gives exact angles
    q = D/2, h = (S + D)/4 in this Jones convention.
    """
    t0, t1 = target
    a = math.atan2(abs(t1), abs(t0))
    b = (np.angle(t1) - np.angle(t0)) if (t0 != 0 and t1 != 0) else 0.0
    big_s = math.asin(max(-1.0, min(1.0, -math.sin(2 * a) * math.sin(b))))
    big_d = math.atan2(math.sin(2 * a) * math.cos(b), math.cos(2 * a))
    return np.array([math.degrees(big_d / 2.0), math.degrees((big_s + big_d) / 4.0)])


def _solve_to_horizontal(target: np.ndarray, seed: int, *, tol: float, restarts: int) -> tuple[float, float, float]:
    """Find QWP/HWP angles with HWP(h) QWP(q) |target> proportional to |H>.

    Nelder-Mead on the infidelity 1 - |<H|achieved>|^2, started from the
    closed-form seed and falling back to seeded random restarts; the final
    residual is always re-checked against `tol`.
    """

    def residual(x):
        v = hwp_jones(x[1]) @ qwp_jones(x[0]) @ target
        return 1.0 - abs(v[0]) ** 2

    opts = dict(fatol=1e-18, xatol=1e-13, maxiter=4000)
    best_x = _horizontal_seed(target)
    best_f = residual(best_x)
    if best_f >= tol / 100.0:
        rng = np.random.default_rng(seed)
        starts = [best_x] + [rng.uniform(0.0, 180.0, size=2) for _ in range(restarts)]
        for x0 in starts:
            res = minimize(residual, x0, method="Nelder-Mead", options=opts)
            if res.fun < best_f:
                best_x, best_f = res.x, res.fun
            if best_f < 1e-14:
                break
        # Restarting from the incumbent rebuilds the simplex and polishes the tail.
        res = minimize(residual, best_x, method="Nelder-Mead", options=opts)
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    if best_f > tol:
        raise SolverError(f"angle solve stalled at residual {best_f:.3e} (tolerance {tol:.1e})")
    return float(best_x[0] % 180.0), float(best_x[1] % 180.0), float(best_f)


def compile_measurement(setting: MeasSetting, *, seed: int = 0, tol: float = 1e-10, restarts: int = 20) -> MeasAngles:
    """Waveplate angles sending the setting's basis onto the four detectors.

    Q2/H4 rotate the polarization basis onto (H, V); Q3/H5 do the same for the
    path basis after the displacer pair has moved it onto polarization.
    """
    psi0 = setting.pol_basis()[0]
    phi0 = setting.path_basis()[0]
    q2, h4, r1 = _solve_to_horizontal(psi0, seed, tol=tol, restarts=restarts)
    q3, h5, r2 = _solve_to_horizontal(phi0, seed + 1, tol=tol, restarts=restarts)
    return MeasAngles(q2=q2, h4=h4, q3=q3, h5=h5, residual=max(r1, r2))


def measurement_layout(angles: MeasAngles) -> tuple[Element, ...]:
    """Q2-H4 on both rails, the displacer pair with X-plates, then Q3-H5."""
    return (
        Waveplate("QWP", angles.q2),
        Waveplate("HWP", angles.h4),
        BeamDisplacer(h_shift=0, v_shift=2),
        xplate({-1, 3}),
        BeamDisplacer(h_shift=0, v_shift=2),
        Waveplate("QWP", angles.q3),
        Waveplate("HWP", angles.h5),
        PolarizingBS(),
    )


# Detector rails after the displacer pair: rail +3 hosts SPCM 0 (H) and 1 (V),
# rail +1 hosts SPCM 2 (H) and 3 (V).
_SPCM_PORTS = ((3, H), (3, V), (1, H), (1, V))


def detector_distribution(state: PathPolState) -> np.ndarray:
    """Click probabilities at SPCM 0..3 for a measurement-module output."""
    probs = np.array([abs(state.amplitude(x, p)) ** 2 for x, p in _SPCM_PORTS])
    leak = 1.0 - probs.sum()
    if leak > 1e-9:
        raise ValueError(f"probability {leak:.3e} outside the four detector ports")
    return probs


def simulate_measurement(psi: StateVector, setting: MeasSetting, *, seed: int = 0) -> np.ndarray:
    """End-to-end module simulation; returns SPCM 0..3 probabilities.

    SPCM (0, 1, 2, 3) see |a1|^2, |a3|^2, |a0|^2, |a2|^2 where a_j are the
    coefficients of the state in the setting's product basis.
    """
    angles = compile_measurement(setting, seed=seed)
    state = embed_two_qubit(psi)
    state = run_layout(state, measurement_layout(angles))
    return detector_distribution(state)


def spcm_to_outcome_order(spcm_probs: np.ndarray) -> np.ndarray:
    """Reorder detector probabilities to the (++, +-, -+, --) outcome order."""
    p = np.asarray(spcm_probs, dtype=float)
    return np.array([p[2], p[0], p[3], p[1]])


def born_product_probs(psi: StateVector, setting: MeasSetting) -> np.ndarray:
    """Abstract Born probabilities in (++, +-, -+, --) order (oracle path)."""
    basis = setting.product_basis()
    return np.array([abs(np.vdot(b, psi.amplitudes)) ** 2 for b in basis])


# ---------------------------------------------------------------------------
# Layout file: one element per line, `kind,angle,paths,extra`, angles with six
# decimal places, paths semicolon-separated (empty = all rails).

def _paths_str(paths: frozenset[int] | None) -> str:
    if paths is None:
        return ""
    return ";".join(str(p) for p in sorted(paths))


def layout_to_text(layout: Sequence[Element]) -> str:
    lines = ["kind,angle,paths,extra"]
    for el in layout:
        if isinstance(el, Waveplate):
            lines.append(f"{el.kind},{el.angle_deg:.6f},{_paths_str(el.paths)},")
        elif isinstance(el, BeamDisplacer):
            lines.append(f"BD,,,h={el.h_shift};v={el.v_shift}")
        elif isinstance(el, PolarizingBS):
            lines.append(f"PBS,,{_paths_str(el.paths)},")
        else:
            raise TypeError(f"unknown element {el!r}")
    return "\n".join(lines) + "\n"


def layout_from_text(text: str) -> tuple[Element, ...]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "kind,angle,paths,extra":
        raise ValueError("layout file must start with the header 'kind,angle,paths,extra'")
    elems: list[Element] = []
    for ln in lines[1:]:
        kind, angle, paths, extra = ln.split(",", 3)
        scope = frozenset(int(p) for p in paths.split(";")) if paths else None
        if kind in ("HWP", "QWP", "XPLATE"):
            elems.append(Waveplate(kind, float(angle), scope))
        elif kind == "BD":
            shifts = dict(part.split("=") for part in extra.split(";"))
            elems.append(BeamDisplacer(h_shift=int(shifts["h"]), v_shift=int(shifts["v"])))
        elif kind == "PBS":
            elems.append(PolarizingBS(scope))
        else:
            raise ValueError(f"unknown element kind {kind!r}")
    return tuple(elems)
