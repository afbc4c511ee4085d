"""Dense density-matrix machinery for a small register of labeled qubits.

Convention used throughout the package: the register order is the tensor
order, with the leftmost label being the most significant bit of a
computational basis index.  All states are 64-bit complex, validated on
construction (trace 1, Hermitian, positive semidefinite within ``ATOL``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ATOL = 1e-9
MAX_QUBITS = 6

I2 = np.eye(2, dtype=complex)
X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}

KET0 = np.array([1.0, 0.0], dtype=complex)
KET1 = np.array([0.0, 1.0], dtype=complex)
KET_PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
KET_MINUS = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
KET_R = np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0)  # +1 of Y
KET_L = np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0)  # -1 of Y

#: The six mutually unbiased single-qubit states, keyed by common name.
MUB_STATES = {
    "0": KET0,
    "1": KET1,
    "+": KET_PLUS,
    "-": KET_MINUS,
    "R": KET_R,
    "L": KET_L,
}

#: Eigenvector matrices U_P with columns (|+1>, |-1>) for each Pauli basis.
PAULI_EIGENBASIS = {
    "X": np.column_stack([KET_PLUS, KET_MINUS]),
    "Y": np.column_stack([KET_R, KET_L]),
    "Z": np.column_stack([KET0, KET1]),
}


class ValidationError(ValueError):
    """A physical invariant (trace, Hermiticity, PSD, completeness) failed."""


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2:
        raise ValidationError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


@dataclass(frozen=True)
class QubitRegister:
    """Ordered, unique qubit labels; order is fixed for a state's lifetime."""

    labels: tuple[str, ...]

    def __init__(self, labels: Iterable[str]):
        labels = tuple(labels)
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate qubit labels: {labels}")
        if not 1 <= len(labels) <= MAX_QUBITS:
            raise ValidationError(f"register size {len(labels)} not in 1..{MAX_QUBITS}")
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def dim(self) -> int:
        return 2 ** len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationError(f"unknown qubit label {label!r} (register {self.labels})")

    def positions(self, labels: Sequence[str]) -> list[int]:
        return [self.index(lab) for lab in labels]


@dataclass(frozen=True)
class DensityState:
    """Trace-1 Hermitian PSD operator over a labeled qubit register."""

    register: QubitRegister
    rho: np.ndarray = field(repr=False)

    def __post_init__(self):
        rho = _as_matrix(self.rho)
        d = self.register.dim
        if rho.shape != (d, d):
            raise ValidationError(f"rho shape {rho.shape} does not match register dim {d}")
        if abs(np.trace(rho).real - 1.0) > ATOL or abs(np.trace(rho).imag) > ATOL:
            raise ValidationError(f"trace {np.trace(rho)} differs from 1 beyond {ATOL}")
        if np.max(np.abs(rho - rho.conj().T)) > ATOL:
            raise ValidationError("rho is not Hermitian within tolerance")
        if np.linalg.eigvalsh(rho).min() < -ATOL:
            raise ValidationError("rho has a negative eigenvalue beyond tolerance")
        rho = rho.copy()
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_vector(cls, register: QubitRegister, vec) -> "DensityState":
        v = np.asarray(vec, dtype=complex).reshape(-1)
        if v.shape != (register.dim,):
            raise ValidationError(f"vector length {v.size} does not match register dim")
        v = v / np.linalg.norm(v)
        return cls(register, np.outer(v, v.conj()))

    @classmethod
    def computational(cls, register: QubitRegister, bits: str = "") -> "DensityState":
        bits = bits or "0" * len(register)
        v = np.zeros(register.dim, dtype=complex)
        v[int(bits, 2)] = 1.0
        return cls(register, np.outer(v, v.conj()))


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by Kraus operators, validated for completeness."""

    operators: tuple[np.ndarray, ...]

    def __init__(self, operators: Iterable[np.ndarray]):
        ops = tuple(_as_matrix(k) for k in operators)
        if not ops:
            raise ValidationError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        for k in ops:
            if k.shape != (d, d):
                raise ValidationError("Kraus operators must be square and same dimension")
        total = sum(k.conj().T @ k for k in ops)
        if np.max(np.abs(total - np.eye(d))) > ATOL:
            raise ValidationError("Kraus completeness sum K†K = I violated")
        frozen = []
        for k in ops:
            k = k.copy()
            k.flags.writeable = False
            frozen.append(k)
        object.__setattr__(self, "operators", tuple(frozen))

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @property
    def nqubits(self) -> int:
        return int(round(np.log2(self.dim)))


@dataclass(frozen=True)
class PauliString:
    """One Pauli factor per register qubit, e.g. ('Z', 'Z', 'I')."""

    factors: tuple[str, ...]

    def __init__(self, factors: Iterable[str]):
        factors = tuple(factors)
        for f in factors:
            if f not in PAULI:
                raise ValidationError(f"unknown Pauli factor {f!r}")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def from_str(cls, s: str) -> "PauliString":
        return cls(tuple(s))

    def matrix(self) -> np.ndarray:
        m = PAULI[self.factors[0]]
        for f in self.factors[1:]:
            m = np.kron(m, PAULI[f])
        return m


def kron(a, b) -> np.ndarray:
    """Tensor product of two matrices."""
    return np.kron(_as_matrix(a), _as_matrix(b))


def is_unitary(u: np.ndarray, atol: float = ATOL) -> bool:
    u = _as_matrix(u)
    return u.shape[0] == u.shape[1] and np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= atol


def embed_operator(op: np.ndarray, targets: Sequence[str], register: QubitRegister) -> np.ndarray:
    """Embed an operator on `targets` into the full register Hilbert space.

    Built as P^T (op ⊗ I_rest) P where P permutes basis indices so target
    qubits come first; equivalent to the index-wise tensor embedding.
    """
    op = _as_matrix(op)
    pos = register.positions(targets)
    if len(set(pos)) != len(pos):
        raise ValidationError("duplicate targets")
    n = len(register)
    k = len(pos)
    if op.shape != (2**k, 2**k):
        raise ValidationError(f"operator shape {op.shape} does not match {k} target qubits")
    rest = [i for i in range(n) if i not in pos]
    order = pos + rest  # new ordering: targets first (MSB side)
    dim = 2**n
    perm = np.empty(dim, dtype=np.intp)
    for i in range(dim):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        j = 0
        for q in order:
            j = (j << 1) | bits[q]
        perm[i] = j
    full = np.kron(op, np.eye(2 ** (n - k), dtype=complex))
    # U_full[i, i'] = full[perm[i], perm[i']]
    return full[np.ix_(perm, perm)]


def apply_unitary(state: DensityState, u: np.ndarray, targets: Sequence[str]) -> DensityState:
    """rho -> U rho U† with `u` acting on the given target qubits."""
    u = _as_matrix(u)
    if not is_unitary(u):
        raise ValidationError("operator is not unitary within tolerance")
    u_full = embed_operator(u, targets, state.register)
    return DensityState(state.register, u_full @ state.rho @ u_full.conj().T)


def apply_channel(state: DensityState, channel: KrausChannel, targets: Sequence[str]) -> DensityState:
    """rho -> sum_k K rho K† with the channel acting on the target qubits."""
    if channel.dim != 2 ** len(targets):
        raise ValidationError(
            f"channel dimension {channel.dim} does not match {len(targets)} target qubits"
        )
    out = np.zeros_like(state.rho)
    for k in channel.operators:
        k_full = embed_operator(k, targets, state.register)
        out += k_full @ state.rho @ k_full.conj().T
    return DensityState(state.register, out)


def partial_trace(state: DensityState, keep: Sequence[str]) -> DensityState:
    """Reduced state over the `keep` labels, in their register order."""
    if not keep:
        raise ValidationError("keep must be a nonempty subset of the register")
    keep_pos = state.register.positions(keep)
    n = len(state.register)
    drop = [i for i in range(n) if i not in keep_pos]
    t = state.rho.reshape([2] * (2 * n))
    for offset, ax in enumerate(sorted(drop)):
        a = ax - offset
        nq = n - offset
        t = np.trace(t, axis1=a, axis2=a + nq)
    # axes are now the kept qubits in register order; reorder to `keep` order
    kept_sorted = sorted(keep_pos)
    new_order = [kept_sorted.index(p) for p in keep_pos]
    m = len(keep_pos)
    t = np.transpose(t, new_order + [m + i for i in new_order])
    rho = t.reshape(2**m, 2**m)
    return DensityState(QubitRegister(tuple(keep)), rho)


def expectation(state: DensityState, obs: PauliString) -> float:
    """Tr(rho O) for a Pauli string over the whole register."""
    if len(obs.factors) != len(state.register):
        raise ValidationError("Pauli string length does not match register")
    val = np.trace(state.rho @ obs.matrix())
    if abs(val.imag) > ATOL:
        raise ValidationError(f"expectation has imaginary part {val.imag}")
    return float(val.real)


def expectation_matrix(state: DensityState, obs: np.ndarray) -> float:
    """Tr(rho O) for an arbitrary Hermitian observable on the full register."""
    val = np.trace(state.rho @ _as_matrix(obs))
    if abs(val.imag) > 1e-8:
        raise ValidationError(f"expectation has imaginary part {val.imag}")
    return float(val.real)


def _check_projectors(projectors: Sequence[np.ndarray], dim: int):
    total = np.zeros((dim, dim), dtype=complex)
    for p in projectors:
        p = _as_matrix(p)
        if p.shape != (dim, dim):
            raise ValidationError("projector dimension mismatch")
        if np.max(np.abs(p @ p - p)) > 1e-8 or np.max(np.abs(p - p.conj().T)) > ATOL:
            raise ValidationError("measurement operators must be orthogonal projectors")
        total += p
    if np.max(np.abs(total - np.eye(dim))) > ATOL:
        raise ValidationError("projectors do not sum to identity")


def measurement_probabilities(state: DensityState, projectors: Sequence[np.ndarray]) -> np.ndarray:
    """Outcome probabilities Tr(P_i rho) for a complete orthogonal projector set."""
    d = state.register.dim
    _check_projectors(projectors, d)
    probs = np.array([np.trace(p @ state.rho).real for p in projectors])
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_measurement(
    state: DensityState, projectors: Sequence[np.ndarray], rng: np.random.Generator
) -> tuple[int, DensityState]:
    """Draw one outcome and return (index, collapsed state)."""
    probs = measurement_probabilities(state, projectors)
    idx = int(rng.choice(len(probs), p=probs))
    p = np.asarray(projectors[idx], dtype=complex)
    rho = p @ state.rho @ p
    rho = rho / np.trace(rho).real
    return idx, DensityState(state.register, rho)


def sample_counts(
    state: DensityState,
    projectors: Sequence[np.ndarray],
    shots: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Multinomial outcome counts for `shots` independent measurements."""
    probs = measurement_probabilities(state, projectors)
    return rng.multinomial(shots, probs)


def project_to_psd(rho: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues and renormalize to trace one.

    Used only by tomography; physics code never repairs states silently.
    """
    rho = _as_matrix(rho)
    rho = (rho + rho.conj().T) / 2.0
    w, v = np.linalg.eigh(rho)
    w = np.clip(w, 0.0, None)
    out = (v * w) @ v.conj().T
    return out / np.trace(out).real


def state_fidelity(state: DensityState, target_vec) -> float:
    """<psi| rho |psi> for a pure target state."""
    v = np.asarray(target_vec, dtype=complex).reshape(-1)
    v = v / np.linalg.norm(v)
    val = (v.conj() @ state.rho @ v).real
    return float(val)


def bell_phi_plus() -> np.ndarray:
    """(|00> + |11>)/sqrt(2)."""
    v = np.zeros(4, dtype=complex)
    v[0] = v[3] = 1.0 / np.sqrt(2.0)
    return v


def ghz_vector() -> np.ndarray:
    """(|000> + |111>)/sqrt(2); photon H maps to bit 0, V to bit 1."""
    v = np.zeros(8, dtype=complex)
    v[0] = v[7] = 1.0 / np.sqrt(2.0)
    return v


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_density(register: QubitRegister, rng: np.random.Generator, rank: int | None = None) -> DensityState:
    """Random mixed state (Hilbert-Schmidt-ish) for property tests."""
    d = register.dim
    rank = rank or d
    a = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = a @ a.conj().T
    return DensityState(register, rho / np.trace(rho).real)
