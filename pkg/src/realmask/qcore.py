"""Exact complex linear algebra and quantum-state utilities.

Everything here operates on plain complex128 numpy arrays wrapped in two thin
value types (`StateVector`, `DensityMatrix`) that enforce the usual sanity
invariants (normalization, Hermiticity, positivity) at construction time.
All protocol dimensions are at most 16, so dense double-precision algebra is
exact to ~1e-12 with comfortable headroom.

Tolerance policy: EPS_EXACT guards identities that hold analytically
(isometries, trace preservation); EPS_NUMERIC guards quantities that pass
through an eigensolver or an iterative estimator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EPS_EXACT = 1e-12
EPS_NUMERIC = 1e-10

# Pauli convention: basis order |0>,|1>.
ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

# Canonical two-qubit Bell state (|00> + |11>)/sqrt(2).
BELL_PHI = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


class DimensionError(ValueError):
    """Operand dimensions do not match or do not factor as required."""


def _as_complex_array(values, shape_hint: str) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
        raise ValueError(f"{shape_hint} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class StateVector:
    """Normalized complex amplitude vector.

    `amplitudes` is stored read-only; use `normalized()` to build one from an
    unnormalized vector.
    """

    amplitudes: np.ndarray

    def __init__(self, amplitudes, *, _skip_check: bool = False):
        arr = _as_complex_array(amplitudes, "state vector")
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("state vector must be a nonempty 1-D array")
        if not _skip_check:
            norm = np.linalg.norm(arr)
            if abs(norm - 1.0) > EPS_EXACT:
                raise ValueError(f"state vector norm {norm} deviates from 1 by more than {EPS_EXACT}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @staticmethod
    def normalized(amplitudes) -> "StateVector":
        arr = _as_complex_array(amplitudes, "state vector")
        norm = np.linalg.norm(arr)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(arr / norm, _skip_check=True)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def inner(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.dim != self.dim:
            raise DimensionError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        return float(abs(self.inner(other)) ** 2)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix.

    Eigenvalues in [-1e-10, 0) are treated as estimator round-off: they are
    clipped to zero and the spectrum renormalized.  Anything more negative is
    rejected.
    """

    mat: np.ndarray

    def __init__(self, mat):
        arr = _as_complex_array(mat, "density matrix")
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("density matrix must be square")
        if np.abs(arr - arr.conj().T).max() > EPS_EXACT:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        tr = np.trace(arr).real
        if abs(tr - 1.0) > EPS_EXACT:
            raise ValueError(f"density matrix trace {tr} deviates from 1 by more than {EPS_EXACT}")
        arr = 0.5 * (arr + arr.conj().T)
        lo = np.linalg.eigvalsh(arr).min()
        if lo < -EPS_NUMERIC:
            raise ValueError(f"density matrix has eigenvalue {lo} < -{EPS_NUMERIC}")
        if lo < 0.0:
            # Round-off repair: clip the slightly negative tail and rescale.
            vals, vecs = np.linalg.eigh(arr)
            vals = np.clip(vals, 0.0, None)
            vals /= vals.sum()
            arr = (vecs * vals) @ vecs.conj().T
            arr = 0.5 * (arr + arr.conj().T)
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]


def require_unitary(u: np.ndarray, *, eps: float = EPS_EXACT, what: str = "matrix") -> np.ndarray:
    """Validate U†U = 1 within `eps` and return U as a complex array."""
    arr = _as_complex_array(u, what)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{what} must be square")
    dev = np.abs(arr.conj().T @ arr - np.eye(arr.shape[0])).max()
    if dev > eps:
        raise ValueError(f"{what} is not unitary: max |U†U - 1| = {dev:.3e}")
    return arr


def kron(a, b) -> np.ndarray:
    """Kronecker product, row-major block convention: (A⊗B)[ip+k, jq+l] = A[i,j] B[k,l]."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def _rho_array(rho) -> np.ndarray:
    if isinstance(rho, DensityMatrix):
        return rho.mat
    return _as_complex_array(rho, "density matrix")


def _subsystem_index(keep) -> int:
    if keep in (0, "A", "a"):
        return 0
    if keep in (1, "B", "b"):
        return 1
    raise ValueError(f"keep must be 0/'A' or 1/'B', got {keep!r}")


def partial_trace(rho, keep, dims: tuple[int, int] | None = None) -> DensityMatrix:
    """Reduced state of one factor of a bipartite density matrix.

    `dims` gives the factor dimensions (dA, dB); by default both factors are
    qubits.  Raises DimensionError when the total dimension does not factor.
    """
    arr = _rho_array(rho)
    d = arr.shape[0]
    if dims is None:
        if d % 2 != 0:
            raise DimensionError(f"dimension {d} does not factor into 2 x {d}/2")
        dims = (2, d // 2)
    da, db = dims
    if da * db != d:
        raise DimensionError(f"dimension {d} does not factor as {da} x {db}")
    which = _subsystem_index(keep)
    blocks = arr.reshape(da, db, da, db)
    reduced = np.einsum("ikjk->ij", blocks) if which == 0 else np.einsum("kikj->ij", blocks)
    return DensityMatrix(reduced)


def purity(rho) -> float:
    """tr(rho^2)."""
    arr = _rho_array(rho)
    return float(np.trace(arr @ arr).real)


def fidelity_with_pure(rho, target: StateVector) -> float:
    """<target| rho |target> for a pure target."""
    arr = _rho_array(rho)
    if arr.shape[0] != target.dim:
        raise DimensionError(f"dimension mismatch: {arr.shape[0]} vs {target.dim}")
    val = np.vdot(target.amplitudes, arr @ target.amplitudes)
    if abs(val.imag) > EPS_EXACT:
        raise ValueError(f"fidelity has spurious imaginary part {val.imag:.3e}")
    return float(val.real)


def trace_distance(a, b) -> float:
    """Half the trace norm of a - b."""
    diff = _rho_array(a) - _rho_array(b)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def concurrence_pure(psi: StateVector) -> float:
    """Entanglement of a two-qubit pure state: sqrt(2(1 - tr rho_A^2))."""
    if psi.dim != 4:
        raise DimensionError("concurrence_pure expects a two-qubit state")
    red = partial_trace(psi.density(), keep="A")
    return float(np.sqrt(max(0.0, 2.0 * (1.0 - purity(red)))))


def spin_flip_concurrence(psi: StateVector) -> float:
    """Independent concurrence formula |<psi| sigma_y ⊗ sigma_y |psi*>|."""
    if psi.dim != 4:
        raise DimensionError("spin_flip_concurrence expects a two-qubit state")
    yy = kron(PAULI_Y, PAULI_Y)
    return float(abs(psi.amplitudes @ yy @ psi.amplitudes))


def robustness_of_imaginarity(rho) -> float:
    """How non-real a state is in the computational basis: ||rho - rho^T||_1 / 2.

    Since rho is Hermitian, rho^T is its entrywise conjugate, so rho - rho^T
    is itself Hermitian (purely imaginary, antisymmetric) and the trace norm
    is the sum of its eigenvalue magnitudes.  For pure states the value must
    also equal sqrt(1 - tr(rho rho^T)); both are computed and cross-checked
    whenever the input is pure.
    """
    arr = _rho_array(rho)
    diff = arr - arr.T
    value = 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())
    if abs(purity(arr) - 1.0) <= EPS_NUMERIC:
        alt = float(np.sqrt(max(0.0, 1.0 - np.trace(arr @ arr.T).real)))
        if abs(value - alt) > EPS_NUMERIC:
            raise AssertionError(
                f"imaginarity cross-check failed: trace-norm {value} vs pure-state form {alt}"
            )
    return value


# Random-object helpers shared by the equivalence runner and the test-suite.

def haar_state(dim: int, rng: np.random.Generator) -> StateVector:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector.normalized(v)


def random_real_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_real_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    """Full-support real density matrix G^T G / tr(G^T G)."""
    g = rng.normal(size=(dim, dim))
    m = g.T @ g
    return DensityMatrix(m / np.trace(m))


def random_density(dim: int, rng: np.random.Generator) -> DensityMatrix:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    return DensityMatrix(m / np.trace(m).real)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary via QR with phase fixing."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases
