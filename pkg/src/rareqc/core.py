"""Dense complex linear algebra for few-qubit density matrices and noise channels.

Everything downstream (gate sequences, tomography, fidelity reporting) runs on
the small value types defined here: pure states, density matrices, Kraus
channels and Pauli observables. All types are immutable after construction and
all operations are pure functions, so they are safe to share across threads.

Qubit ordering convention: qubit 0 is the leftmost (most significant) tensor
factor, so ``|q0 q1>`` maps to index ``2*q0 + q1`` for two qubits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Project-wide numerical tolerances: double precision leaves ample headroom
# for the 4x4..16x16 matrices used here.
ATOL_ALGEBRAIC = 1e-12   # hermiticity, trace, norm checks
ATOL_SPECTRAL = 1e-10    # eigenvalue / Kraus-completeness checks

# Dense representations only; anything larger belongs to the analytic
# scaling model, not to this module.
MAX_DENSITY_QUBITS = 4
MAX_STATE_QUBITS = 10

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}


class DimensionMismatchError(ValueError):
    """Operands live in incompatible Hilbert spaces."""


class InvalidChannelError(ValueError):
    """Kraus set is not trace preserving or does not fit its targets."""


def _freeze(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=complex)
    out.setflags(write=False)
    return out


def _require_power_of_two(dim: int, max_qubits: int, what: str) -> int:
    n = int(dim).bit_length() - 1
    if dim <= 0 or 2**n != dim:
        raise ValueError(f"{what} dimension {dim} is not a power of two")
    if n > max_qubits:
        raise ValueError(f"{what} with {n} qubits exceeds the supported maximum of {max_qubits}")
    return n


@dataclass(frozen=True)
class PureState:
    """Normalized complex amplitude vector over n qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = _freeze(np.asarray(self.amplitudes).reshape(-1))
        _require_power_of_two(amp.size, MAX_STATE_QUBITS, "state vector")
        norm2 = float(np.vdot(amp, amp).real)
        if abs(norm2 - 1.0) > ATOL_ALGEBRAIC:
            raise ValueError(f"state vector squared-norm {norm2} deviates from 1 beyond {ATOL_ALGEBRAIC}")
        object.__setattr__(self, "amplitudes", amp)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def from_basis_label(cls, label: str) -> "PureState":
        """Computational basis state from a bit string, e.g. ``"01"`` -> |01>."""
        index = int(label, 2)
        amp = np.zeros(2 ** len(label), dtype=complex)
        amp[index] = 1.0
        return cls(amp)

    def to_density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Trace-one positive semidefinite Hermitian operator over n qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _freeze(np.asarray(self.matrix))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        _require_power_of_two(m.shape[0], MAX_DENSITY_QUBITS, "density matrix")
        if np.abs(m - m.conj().T).max() > ATOL_ALGEBRAIC:
            raise ValueError("density matrix is not Hermitian within tolerance")
        tr = complex(np.trace(m))
        if abs(tr - 1.0) > ATOL_ALGEBRAIC:
            raise ValueError(f"density matrix trace {tr} deviates from 1 beyond {ATOL_ALGEBRAIC}")
        if np.linalg.eigvalsh(m).min() < -ATOL_SPECTRAL:
            raise ValueError("density matrix has an eigenvalue below the PSD tolerance")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1

    @classmethod
    def maximally_mixed(cls, n_qubits: int) -> "DensityMatrix":
        d = 2**n_qubits
        return cls(np.eye(d, dtype=complex) / d)

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def evolve(self, unitary: np.ndarray) -> "DensityMatrix":
        """Conjugate by a unitary acting on the full space."""
        u = np.asarray(unitary, dtype=complex)
        if u.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"unitary shape {u.shape} does not match dimension {self.dim}")
        return DensityMatrix(u @ self.matrix @ u.conj().T)


@dataclass(frozen=True)
class NoiseChannel:
    """Completely positive trace-preserving map given by its Kraus operators."""

    kraus_ops: tuple
    label: str = "channel"

    def __post_init__(self):
        ops = tuple(_freeze(k) for k in self.kraus_ops)
        if not ops:
            raise InvalidChannelError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise InvalidChannelError("Kraus operators must be square and equally sized")
        total = sum(k.conj().T @ k for k in ops)
        if np.abs(total - np.eye(d)).max() > ATOL_SPECTRAL:
            raise InvalidChannelError(f"channel '{self.label}' violates completeness sum K^dag K = I")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    @property
    def n_qubits(self) -> int:
        return self.dim.bit_length() - 1


@dataclass(frozen=True)
class PauliObservable:
    """Tensor product of single-qubit Pauli factors, one label per qubit."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(str(f).upper() for f in self.factors)
        if not factors or any(f not in PAULIS for f in factors):
            raise ValueError(f"factors must be drawn from I, X, Y, Z; got {self.factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    @property
    def dim(self) -> int:
        return 2 ** len(self.factors)

    def matrix(self) -> np.ndarray:
        m = PAULIS[self.factors[0]]
        for f in self.factors[1:]:
            m = np.kron(m, PAULIS[f])
        return m


def tensor(a, b):
    """Tensor product of two states of the same kind (pure or density)."""
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(np.kron(a.amplitudes, b.amplitudes))
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(np.kron(a.matrix, b.matrix))
    raise TypeError(f"tensor expects two PureState or two DensityMatrix operands, got {type(a)} and {type(b)}")


def _permutation_to_front(n_qubits: int, targets: tuple) -> np.ndarray:
    """Permutation matrix moving ``targets`` to the leading qubit slots."""
    others = [q for q in range(n_qubits) if q not in targets]
    order = list(targets) + others
    dim = 2**n_qubits
    perm = np.zeros((dim, dim), dtype=complex)
    for b in range(dim):
        bits = [(b >> (n_qubits - 1 - q)) & 1 for q in range(n_qubits)]
        new_bits = [bits[q] for q in order]
        b_new = 0
        for bit in new_bits:
            b_new = (b_new << 1) | bit
        perm[b_new, b] = 1.0
    return perm


def lift_operator(op: np.ndarray, n_qubits: int, targets) -> np.ndarray:
    """Embed an operator on ``targets`` into the full n-qubit space."""
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"target qubits must be distinct, got {targets}")
    if any(t < 0 or t >= n_qubits for t in targets):
        raise ValueError(f"target qubits {targets} out of range for {n_qubits} qubits")
    k = len(targets)
    if op.shape != (2**k, 2**k):
        raise DimensionMismatchError(f"operator shape {op.shape} does not act on {k} qubits")
    rest = np.eye(2 ** (n_qubits - k), dtype=complex)
    perm = _permutation_to_front(n_qubits, targets)
    return perm.conj().T @ np.kron(op, rest) @ perm


def apply_channel(rho: DensityMatrix, channel: NoiseChannel, targets) -> DensityMatrix:
    """Apply ``sum_k K rho K^dag`` with the channel lifted onto ``targets``.

    Raises:
        InvalidChannelError: channel dimension does not match ``2**len(targets)``.
    """
    targets = tuple(int(t) for t in targets)
    if len(set(targets)) != len(targets):
        raise ValueError(f"target qubits must be distinct, got {targets}")
    if channel.dim != 2 ** len(targets):
        raise InvalidChannelError(
            f"channel '{channel.label}' of dimension {channel.dim} cannot act on {len(targets)} qubit(s)"
        )
    out = np.zeros_like(rho.matrix)
    for k in channel.kraus_ops:
        lifted = lift_operator(k, rho.n_qubits, targets)
        out = out + lifted @ rho.matrix @ lifted.conj().T
    # Symmetrize away the last-bit rounding so the constructor checks stay honest.
    out = (out + out.conj().T) / 2.0
    return DensityMatrix(out)


def _check_probability(p: float, name: str) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {p}")
    return p


def make_bit_flip(p: float) -> NoiseChannel:
    """X flip with probability p: Kraus {sqrt(1-p) I, sqrt(p) X}."""
    p = _check_probability(p, "bit-flip probability")
    return NoiseChannel((np.sqrt(1 - p) * I2, np.sqrt(p) * PAULI_X), label="bit_flip")


def make_phase_flip(p: float) -> NoiseChannel:
    """Z flip with probability p: Kraus {sqrt(1-p) I, sqrt(p) Z}."""
    p = _check_probability(p, "phase-flip probability")
    return NoiseChannel((np.sqrt(1 - p) * I2, np.sqrt(p) * PAULI_Z), label="phase_flip")


def make_amplitude_damping(gamma: float) -> NoiseChannel:
    """Decay |1> -> |0> with probability gamma (standard two-element Kraus form)."""
    gamma = _check_probability(gamma, "damping parameter")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return NoiseChannel((k0, k1), label="amplitude_damping")


def make_confusion(p_read1_given0: float, p_read0_given1: float) -> NoiseChannel:
    """Classical asymmetric readout flip as a (coherence-destroying) channel."""
    p10 = _check_probability(p_read1_given0, "p_read1_given0")
    p01 = _check_probability(p_read0_given1, "p_read0_given1")
    ops = (
        np.sqrt(1 - p10) * np.array([[1, 0], [0, 0]], dtype=complex),
        np.sqrt(p10) * np.array([[0, 0], [1, 0]], dtype=complex),
        np.sqrt(1 - p01) * np.array([[0, 0], [0, 1]], dtype=complex),
        np.sqrt(p01) * np.array([[0, 1], [0, 0]], dtype=complex),
    )
    return NoiseChannel(ops, label="confusion")


def fidelity(rho: DensityMatrix, target: PureState) -> float:
    """Overlap <psi| rho |psi> of a state with a pure target, in [0, 1]."""
    if rho.dim != target.dim:
        raise DimensionMismatchError(f"state dimension {rho.dim} does not match target dimension {target.dim}")
    value = np.vdot(target.amplitudes, rho.matrix @ target.amplitudes)
    return float(value.real)


def expectation(rho: DensityMatrix, obs: PauliObservable) -> float:
    """Tr(rho P) for a Pauli observable; the imaginary residue must vanish."""
    if rho.dim != obs.dim:
        raise DimensionMismatchError(f"state dimension {rho.dim} does not match observable dimension {obs.dim}")
    value = complex(np.trace(rho.matrix @ obs.matrix()))
    if abs(value.imag) > ATOL_ALGEBRAIC:
        raise ValueError(f"expectation acquired imaginary part {value.imag}")
    return float(value.real)


def project_physical(matrix: np.ndarray) -> DensityMatrix:
    """Nearest (Frobenius) trace-one PSD matrix to a Hermitian input.

    The eigenvalues are projected onto the probability simplex (clip the
    negative part, renormalize the rest additively), keeping the eigenvectors.
    Idempotent on inputs that already satisfy the density-matrix invariants.
    """
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if np.abs(m - m.conj().T).max() > 1e-9:
        raise ValueError("input is not Hermitian within tolerance")
    m = (m + m.conj().T) / 2.0
    evals, evecs = np.linalg.eigh(m)
    clipped = _project_simplex(evals)
    out = (evecs * clipped) @ evecs.conj().T
    out = (out + out.conj().T) / 2.0
    # Chop the rounding left over by the eigendecomposition itself.
    tr = np.trace(out).real
    if abs(tr - 1.0) > ATOL_ALGEBRAIC:
        out = out / tr
    return DensityMatrix(out)


def _project_simplex(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto {x >= 0, sum x = 1}."""
    v = np.sort(values)[::-1]
    cumulative = np.cumsum(v) - 1.0
    ranks = np.arange(1, v.size + 1)
    feasible = v - cumulative / ranks > 0
    rho = int(np.nonzero(feasible)[0][-1])
    tau = cumulative[rho] / (rho + 1)
    return np.maximum(values - tau, 0.0)
