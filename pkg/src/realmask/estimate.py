"""Estimators for the masking experiments.

Three pipelines:

* verification-based fidelity: random local projective tests whose average
  pass rate maps linearly onto the infidelity, eps = (3/2)(1 - p_succ), with
  an Agresti-Coull confidence interval transported through the same linear
  map;
* single-qubit tomography: iterative R rho R maximum likelihood over X/Y/Z
  counts, cross-checked against linear inversion, with Poisson-resampling
  bootstrap error bars;
* correlation decoding: the nine Pauli-pair correlators of the masked state
  determine the real input density matrix entry by entry; the reconstruction
  is real symmetric by construction and is projected onto the nearest density
  matrix when shot noise pushes it slightly outside the cone.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Callable, Sequence, Union

import numpy as np

from .masker import build_hr_d4, u_of_c
from .measure import CountsTable, correlator_estimate, derive_seed, generator, poisson_resample
from .qcore import (
    EPS_EXACT,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    DensityMatrix,
    StateVector,
    fidelity_with_pure,
    kron,
    purity,
    require_unitary,
    trace_distance,
)


class ConvergenceError(RuntimeError):
    """Iterative estimator hit its iteration cap before the tolerance."""


# ---------------------------------------------------------------------------
# Verification-based fidelity estimation.

def test_projectors(u: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three local tests for the target (U ⊗ 1)|Phi>:
    (1 + X'⊗X)/2, (1 - Y'⊗Y)/2, (1 + Z'⊗Z)/2 with O' = U O U†."""
    u = require_unitary(u, what="target rotation")
    eye = np.eye(4)
    xp = u @ PAULI_X @ u.conj().T
    yp = u @ PAULI_Y @ u.conj().T
    zp = u @ PAULI_Z @ u.conj().T
    return (
        (eye + kron(xp, PAULI_X)) / 2,
        (eye - kron(yp, PAULI_Y)) / 2,
        (eye + kron(zp, PAULI_Z)) / 2,
    )


def verification_operator(u: np.ndarray) -> np.ndarray:
    """Average test operator; equals P_target + (1 - P_target)/3."""
    p1, p2, p3 = test_projectors(u)
    return (p1 + p2 + p3) / 3.0


def _resolve_target_unitary(target) -> np.ndarray:
    if isinstance(target, (int, np.integer)):
        if not 0 <= int(target) <= 3:
            raise ValueError(f"target index must be 0..3, got {target}")
        return build_hr_d4().with_identity()[int(target)]
    arr = np.asarray(target)
    if arr.shape == (4,):
        if np.iscomplexobj(arr) and np.abs(arr.imag).max() > EPS_EXACT:
            raise ValueError("coefficient targets must be real (unitary combinations)")
        return u_of_c(arr.real)
    if arr.shape == (2, 2):
        return require_unitary(arr, what="target rotation")
    raise ValueError("target must be an index 0..3, a real 4-vector, or a 2x2 unitary")


@dataclass(frozen=True)
class QsvResult:
    """Outcome of a verification run; the interval lives on the infidelity."""

    total: int
    passed: int
    p_hat: float
    eps_hat: float
    ci_low: float
    ci_high: float
    confidence: float

    def __post_init__(self):
        want = 1.5 * (1.0 - self.passed / self.total)
        if abs(self.eps_hat - want) > 1e-15:
            raise ValueError("eps_hat must equal 1.5 (1 - passed/total)")
        if self.ci_low > self.ci_high:
            raise ValueError("interval endpoints out of order")

    @property
    def fidelity(self) -> float:
        return 1.0 - self.eps_hat

    @property
    def error(self) -> float:
        """Symmetrized half-width max(eps_hat - low, high - eps_hat)."""
        return max(self.eps_hat - self.ci_low, self.ci_high - self.eps_hat)


StateSource = Union[DensityMatrix, Callable[[], DensityMatrix]]


def qsv_run(
    state_source: StateSource,
    target,
    n_tests: int,
    seed: int,
    confidence: float = 0.95,
) -> QsvResult:
    """Run `n_tests` randomly chosen local tests against the rotated target.

    `target` is a magic-basis index 0..3, a real coefficient 4-vector, or the
    2x2 rotation itself.  `state_source` is either a fixed two-qubit density
    matrix or a callable producing one per round.
    """
    if n_tests < 1:
        raise ValueError("n_tests must be >= 1")
    projs = test_projectors(_resolve_target_unitary(target))
    rng = generator(seed)
    which = rng.integers(0, 3, size=n_tests)
    draws = rng.random(n_tests)
    if isinstance(state_source, DensityMatrix):
        pass_probs = np.array([np.trace(state_source.mat @ p).real for p in projs])
        passed = int(np.count_nonzero(draws < pass_probs[which]))
    else:
        passed = 0
        for t, u in zip(which, draws):
            rho = state_source()
            if u < np.trace(rho.mat @ projs[t]).real:
                passed += 1
    p_hat = passed / n_tests
    eps_hat = 1.5 * (1.0 - p_hat)
    lo, hi = agresti_coull(passed, n_tests, confidence)
    return QsvResult(
        total=n_tests,
        passed=passed,
        p_hat=p_hat,
        eps_hat=eps_hat,
        ci_low=min(lo, eps_hat),
        ci_high=max(hi, eps_hat),
        confidence=confidence,
    )


def agresti_coull(passed: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    """Add-pseudo-counts interval on the infidelity eps = (3/2)(1 - p).

    With kappa the (1+confidence)/2 normal quantile, S~ = S + kappa^2/2,
    N~ = N + kappa^2, p~ = S~/N~:
    endpoints (3/2)[1 - p~ -/+ kappa sqrt(p~ q~ / N~)], clipped to [0, 3/2].
    """
    if not 0 <= passed <= total or total < 1:
        raise ValueError(f"need 0 <= passed <= total, got {passed}/{total}")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    kappa = NormalDist().inv_cdf((1.0 + confidence) / 2.0)
    n_t = total + kappa**2
    p_t = (passed + kappa**2 / 2.0) / n_t
    half = kappa * np.sqrt(p_t * (1.0 - p_t) / n_t)
    lo = 1.5 * (1.0 - p_t - half)
    hi = 1.5 * (1.0 - p_t + half)
    return max(0.0, lo), min(1.5, hi)


# ---------------------------------------------------------------------------
# Single-qubit maximum-likelihood tomography.

_AXES = ("X", "Y", "Z")
_SIGMAS = np.stack([PAULI_X, PAULI_Y, PAULI_Z])
# Projectors indexed [axis, outcome, i, j]; outcome 0 is the +1 eigenspace.
_PROJECTORS = np.stack(
    [np.stack([(np.eye(2) + s * sig) / 2 for s in (+1, -1)]) for sig in _SIGMAS]
)


def _rr_step(rho: np.ndarray, freq: np.ndarray) -> np.ndarray:
    probs = np.einsum("bij,koji->bko", rho, _PROJECTORS).real
    weights = np.divide(freq, probs, out=np.zeros_like(freq), where=freq > 0)
    r_op = np.einsum("bko,koij->bij", weights, _PROJECTORS)
    new = r_op @ rho @ r_op
    new = 0.5 * (new + np.conj(np.swapaxes(new, 1, 2)))
    return new / np.trace(new, axis1=1, axis2=2).real[:, None, None]


def _log_likelihood(rho: np.ndarray, counts: np.ndarray) -> np.ndarray:
    probs = np.einsum("bij,koji->bko", rho, _PROJECTORS).real
    terms = np.where(counts > 0, counts * np.log(np.clip(probs, 1e-300, None)), 0.0)
    return terms.sum(axis=(1, 2))


def mle_qubit_batch(counts: np.ndarray, *, tol: float = 1e-10, max_iter: int = 5000) -> np.ndarray:
    """Iterative R rho R fixed point for a batch of X/Y/Z count triples.

    `counts` has shape (batch, 3, 2); returns (batch, 2, 2) density matrices.
    Converged when successive iterates move less than `tol` in trace
    distance.  Boundary-of-the-Bloch-ball fits approach their fixed point
    sublinearly, so when the iteration cap is reached the estimate is still
    accepted if the log-likelihood has verifiably flattened (gain below
    1e-12 per sweep); a genuinely unconverged fit raises ConvergenceError
    with the residual.
    """
    c = np.asarray(counts, dtype=float)
    if c.ndim == 2:
        c = c[None]
    if c.shape[1:] != (3, 2):
        raise ValueError("counts must have shape (batch, 3, 2)")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    freq = c / c.sum(axis=(1, 2), keepdims=True)
    rho = np.broadcast_to(np.eye(2, dtype=complex) / 2, (c.shape[0], 2, 2)).copy()
    delta = np.inf
    for _ in range(max_iter):
        new = _rr_step(rho, freq)
        diff = new - rho
        # Trace distance of a traceless Hermitian 2x2: sqrt(|a|^2 + |b|^2).
        delta = float(np.sqrt(np.abs(diff[:, 0, 0]) ** 2 + np.abs(diff[:, 0, 1]) ** 2).max())
        rho = new
        if delta < tol:
            return rho
    before = _log_likelihood(rho, c)
    after = _log_likelihood(_rr_step(rho, freq), c)
    if np.all(after - before < 1e-12 * (np.abs(before) + 1.0)):
        return rho
    raise ConvergenceError(f"tomography stalled: residual {delta:.3e} after {max_iter} iterations")


@dataclass(frozen=True, eq=False)
class TomoResult:
    """Reconstructed qubit with its linear-inversion cross-check."""

    bloch: np.ndarray
    bloch_linear: np.ndarray
    rho_hat: DensityMatrix
    purity: float
    std_purity: float | None = None

    def __post_init__(self):
        if np.linalg.norm(self.bloch) > 1.0 + 1e-10:
            raise ValueError("reconstructed Bloch vector outside the ball")


def _counts_array(counts_x: CountsTable, counts_y: CountsTable, counts_z: CountsTable) -> np.ndarray:
    arr = []
    for t in (counts_x, counts_y, counts_z):
        if len(t.counts) != 2:
            raise ValueError("tomography expects two-outcome tables")
        if t.shots <= 0:
            raise ValueError("tomography tables need shots > 0")
        arr.append(t.counts)
    return np.asarray(arr, dtype=float)


def tomography_1q(
    counts_x: CountsTable,
    counts_y: CountsTable,
    counts_z: CountsTable,
    *,
    tol: float = 1e-10,
    max_iter: int = 5000,
    bootstrap_resamples: int | None = None,
    bootstrap_seed: int = 0,
) -> TomoResult:
    """Maximum-likelihood qubit reconstruction from X, Y, Z counts.

    Pass `bootstrap_resamples` to also fill std_purity from Poisson
    resampling of the three tables.
    """
    counts = _counts_array(counts_x, counts_y, counts_z)
    rho = mle_qubit_batch(counts, tol=tol, max_iter=max_iter)[0]
    dm = DensityMatrix(rho)
    bloch = np.array([np.trace(dm.mat @ sig).real for sig in _SIGMAS])
    bloch_linear = (counts[:, 0] - counts[:, 1]) / counts.sum(axis=1)
    std = None
    if bootstrap_resamples is not None:

        def mle_purity(tables) -> float:
            c = np.asarray([t.counts for t in tables], dtype=float)
            r = mle_qubit_batch(c[None], tol=tol, max_iter=max_iter)[0]
            return float(np.trace(r @ r).real)

        std = bootstrap_std(mle_purity, (counts_x, counts_y, counts_z),
                            resamples=bootstrap_resamples, seed=bootstrap_seed)
    return TomoResult(bloch=bloch, bloch_linear=bloch_linear, rho_hat=dm,
                      purity=purity(dm), std_purity=std)


def purity_from_counts(counts: np.ndarray, **kwargs) -> np.ndarray:
    """Batch shortcut: MLE purities for counts of shape (batch, 3, 2)."""
    rho = mle_qubit_batch(counts, **kwargs)
    return np.einsum("bij,bji->b", rho, rho).real


def bootstrap_std(
    quantity: Callable[[Sequence[CountsTable]], float],
    tables: Sequence[CountsTable],
    resamples: int = 100,
    seed: int = 0,
) -> float:
    """Standard deviation of `quantity` over Poisson resamples of all tables."""
    if resamples < 2:
        raise ValueError("need at least 2 resamples")
    values = np.empty(resamples)
    for r in range(resamples):
        redrawn = [poisson_resample(t, derive_seed(seed, "boot", r, i)) for i, t in enumerate(tables)]
        values[r] = quantity(redrawn)
    return float(np.std(values, ddof=1))


# ---------------------------------------------------------------------------
# Correlation-matrix decoding of the real input state.

_AXIS_INDEX = {"X": 0, "Y": 1, "Z": 2}


def correlation_matrix(tables: Sequence[CountsTable]) -> np.ndarray:
    """3x3 correlator estimates from the nine Pauli-pair tables.

    Tables are identified by their setting labels 'XX'..'ZZ'; every pair must
    be present exactly once.
    """
    t = np.full((3, 3), np.nan)
    for table in tables:
        label = table.setting
        if len(label) != 2 or label[0] not in _AXIS_INDEX or label[1] not in _AXIS_INDEX:
            raise ValueError(f"not a Pauli-pair setting label: {label!r}")
        j, k = _AXIS_INDEX[label[0]], _AXIS_INDEX[label[1]]
        if not np.isnan(t[j, k]):
            raise ValueError(f"duplicate setting {label}")
        t[j, k] = correlator_estimate(table)
    if np.isnan(t).any():
        missing = [f"{a}{b}" for a in _AXES for b in _AXES if np.isnan(t[_AXIS_INDEX[a], _AXIS_INDEX[b]])]
        raise ValueError(f"missing settings: {', '.join(missing)}")
    return validate_correlation_matrix(t)


def validate_correlation_matrix(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if arr.shape != (3, 3):
        raise ValueError("correlation matrix must be 3x3")
    if np.abs(arr).max() > 1.0 + 1e-9:
        raise ValueError("correlator magnitude exceeds 1 beyond tolerance")
    return arr


def _simplex_projection(vals: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    srt = np.sort(vals)[::-1]
    cumul = np.cumsum(srt)
    ks = np.arange(1, len(vals) + 1)
    shifted = srt + (1.0 - cumul) / ks
    k = int(np.max(np.nonzero(shifted > 0)[0])) + 1
    shift = (1.0 - cumul[k - 1]) / k
    return np.clip(vals + shift, 0.0, None)


def project_to_density(mat: np.ndarray) -> DensityMatrix:
    """Nearest density matrix in Frobenius norm (eigenvalue simplex projection)."""
    arr = np.asarray(mat, dtype=complex)
    arr = 0.5 * (arr + arr.conj().T)
    vals, vecs = np.linalg.eigh(arr)
    vals = _simplex_projection(vals.real)
    return DensityMatrix((vecs * vals) @ vecs.conj().T)


@dataclass(frozen=True, eq=False)
class DecodeResult:
    """Real reconstruction before and after the positivity projection."""

    rho_hat: np.ndarray
    rho_proj: DensityMatrix
    fidelity_vs_input: float | None = None


def decode_real_state(t, input_state: StateVector | None = None) -> DecodeResult:
    """Rebuild the real ququart density matrix from the masked correlators.

    Diagonal entries come from the diagonal correlators, e.g.
    rho_00 = (1 + T_xx - T_yy + T_zz)/4; off-diagonals from the skew pairs,
    e.g. rho_01 = -(T_yx + T_xy)/4.  The imaginary part is identically zero
    by construction.
    """
    t = validate_correlation_matrix(t)
    rho = np.zeros((4, 4))
    rho[0, 0] = (1 + t[0, 0] - t[1, 1] + t[2, 2]) / 4
    rho[1, 1] = (1 - t[0, 0] + t[1, 1] + t[2, 2]) / 4
    rho[2, 2] = (1 + t[0, 0] + t[1, 1] - t[2, 2]) / 4
    rho[3, 3] = (1 - t[0, 0] - t[1, 1] - t[2, 2]) / 4
    rho[0, 1] = rho[1, 0] = -(t[1, 0] + t[0, 1]) / 4
    rho[0, 2] = rho[2, 0] = (t[1, 2] + t[2, 1]) / 4
    rho[0, 3] = rho[3, 0] = (t[2, 0] - t[0, 2]) / 4
    rho[1, 2] = rho[2, 1] = (t[0, 2] + t[2, 0]) / 4
    rho[1, 3] = rho[3, 1] = (t[1, 2] - t[2, 1]) / 4
    rho[2, 3] = rho[3, 2] = (t[1, 0] - t[0, 1]) / 4
    projected = project_to_density(rho)
    fid = fidelity_with_pure(projected, input_state) if input_state is not None else None
    return DecodeResult(rho_hat=rho, rho_proj=projected, fidelity_vs_input=fid)


def decode_round_trip_error(rho_real: DensityMatrix, t: np.ndarray) -> float:
    """Trace distance between the pre-projection decode and the true state."""
    raw = decode_real_state(t).rho_hat
    return trace_distance(raw.astype(complex), rho_real)


# ---------------------------------------------------------------------------
# Report container shared by the experiment pipelines.

_ERROR_KINDS = ("ci95", "std")


@dataclass(frozen=True)
class EstimationReport:
    """One labeled estimate with its uncertainty semantics."""

    experiment: str
    target: str
    estimate: float
    error: float
    error_kind: str
    n: int | None = None
    shots: int | None = None
    seed: int | None = None
    noise_p: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.error_kind not in _ERROR_KINDS:
            raise ValueError(f"error_kind must be one of {_ERROR_KINDS}")

    def to_dict(self) -> dict:
        doc = {
            "experiment": self.experiment,
            "target": self.target,
            "estimate": self.estimate,
            "error": self.error,
            "error_kind": self.error_kind,
            "N": self.n,
            "shots": self.shots,
            "seed": self.seed,
            "noise_p": self.noise_p,
        }
        doc.update(self.extra)
        return doc
