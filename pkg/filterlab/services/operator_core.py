"""Numerical kernels: Pauli-string algebra, sparse operators and state vectors

Basis convention: site 0 is the most significant bit of the computational-basis
index and Z|0> = +|0>. Every kernel is a pure function of its inputs; sparse
matvecs are single threaded (scipy CSR), so results are bitwise reproducible.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..core.config import settings
from ..core.exceptions import (
    ConvergenceError,
    DimensionMismatchError,
    SiteCapExceededError,
    SolverStagnationError,
)

logger = logging.getLogger(__name__)

PAULI_SYMBOLS = "IXYZ"

# a * b = phase * c
_CYCLIC = {("X", "Y"): "Z", ("Y", "Z"): "X", ("Z", "X"): "Y"}


def _single_site_product(a: str, b: str) -> Tuple[complex, str]:
    if a == "I":
        return 1.0 + 0j, b
    if b == "I":
        return 1.0 + 0j, a
    if a == b:
        return 1.0 + 0j, "I"
    if (a, b) in _CYCLIC:
        return 1j, _CYCLIC[(a, b)]
    return -1j, _CYCLIC[(b, a)]


PRODUCT_TABLE: Dict[Tuple[str, str], Tuple[complex, str]] = {
    (a, b): _single_site_product(a, b) for a in PAULI_SYMBOLS for b in PAULI_SYMBOLS
}

_SINGLE_SITE_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


# ===== PAULI STRINGS =====

@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-site Pauli factors with a scalar coefficient.

    ``factors[i]`` acts on site ``i``. Strings are immutable; products return new
    strings with the phase folded into the coefficient.
    """
    factors: str
    coefficient: complex = 1.0

    def __post_init__(self):
        if not self.factors:
            raise ValueError("PauliString needs at least one site")
        bad = set(self.factors) - set(PAULI_SYMBOLS)
        if bad:
            raise ValueError(f"Unknown Pauli symbols: {sorted(bad)}")
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @classmethod
    def identity(cls, n_sites: int, coefficient: complex = 1.0) -> "PauliString":
        return cls("I" * n_sites, coefficient)

    @classmethod
    def from_sites(cls, n_sites: int, sites: Dict[int, str], coefficient: complex = 1.0) -> "PauliString":
        """Build a string from a ``{site: symbol}`` mapping, identity elsewhere"""
        chars = ["I"] * n_sites
        for site, symbol in sites.items():
            if not 0 <= site < n_sites:
                raise DimensionMismatchError(f"Site {site} outside chain of {n_sites} sites")
            chars[site] = symbol
        return cls("".join(chars), coefficient)

    @classmethod
    def from_label(cls, label: str, n_sites: int, coefficient: complex = 1.0) -> "PauliString":
        """Parse ``"0:X 3:Z"`` style labels"""
        sites = {}
        for token in label.split():
            site, symbol = token.split(":")
            sites[int(site)] = symbol
        return cls.from_sites(n_sites, sites, coefficient)

    @property
    def n_sites(self) -> int:
        return len(self.factors)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.factors) if c != "I")

    @property
    def support_mask(self) -> int:
        mask = 0
        for i in self.support:
            mask |= 1 << i
        return mask

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def is_identity(self) -> bool:
        return self.weight == 0

    @property
    def label(self) -> str:
        return " ".join(f"{i}:{self.factors[i]}" for i in self.support)

    def scaled(self, alpha: complex) -> "PauliString":
        return PauliString(self.factors, self.coefficient * alpha)

    def dagger(self) -> "PauliString":
        return PauliString(self.factors, self.coefficient.conjugate())

    def commutes_with(self, other: "PauliString") -> bool:
        clashes = sum(
            1 for a, b in zip(self.factors, other.factors)
            if a != "I" and b != "I" and a != b
        )
        return clashes % 2 == 0

    def __mul__(self, other):
        if isinstance(other, PauliString):
            if other.n_sites != self.n_sites:
                raise DimensionMismatchError(
                    f"Cannot multiply strings on {self.n_sites} and {other.n_sites} sites"
                )
            phase = 1.0 + 0j
            chars = []
            for a, b in zip(self.factors, other.factors):
                p, c = PRODUCT_TABLE[(a, b)]
                phase *= p
                chars.append(c)
            return PauliString("".join(chars), self.coefficient * other.coefficient * phase)
        if isinstance(other, (int, float, complex, np.number)):
            return self.scaled(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return self.scaled(other)
        return NotImplemented

    def basis_masks(self) -> Tuple[int, int, int]:
        """Return (x_mask, z_mask, n_y) in computational-basis bit positions"""
        n = self.n_sites
        x_mask = z_mask = 0
        n_y = 0
        for i, c in enumerate(self.factors):
            bit = 1 << (n - 1 - i)
            if c in "XY":
                x_mask |= bit
            if c in "YZ":
                z_mask |= bit
            if c == "Y":
                n_y += 1
        return x_mask, z_mask, n_y

    def to_matrix(self) -> np.ndarray:
        """Dense 2^N x 2^N matrix (small N only)"""
        result = np.array([[1.0 + 0j]])
        for c in self.factors:
            result = np.kron(result, _SINGLE_SITE_MATRICES[c])
        return self.coefficient * result


def _parity(indices: np.ndarray, mask: int) -> np.ndarray:
    parity = np.zeros(indices.shape, dtype=np.int64)
    bit = 0
    while mask >> bit:
        if (mask >> bit) & 1:
            parity ^= (indices >> bit) & 1
        bit += 1
    return parity


def _pauli_action(string: PauliString) -> Tuple[np.ndarray, np.ndarray]:
    """Return (targets, values) with P|k> = values[k] |targets[k]>"""
    dim = 1 << string.n_sites
    x_mask, z_mask, n_y = string.basis_masks()
    indices = np.arange(dim, dtype=np.int64)
    signs = 1 - 2 * _parity(indices, z_mask)
    values = string.coefficient * (1j ** n_y) * signs.astype(complex)
    return indices ^ x_mask, values


def apply_pauli(string: PauliString, amplitudes: np.ndarray) -> np.ndarray:
    """Apply a single Pauli string to a raw amplitude vector"""
    if amplitudes.shape[0] != 1 << string.n_sites:
        raise DimensionMismatchError("Vector length does not match the string")
    targets, values = _pauli_action(string)
    out = np.empty_like(amplitudes, dtype=complex)
    out[targets] = values * amplitudes
    return out


def collect_terms(terms: Iterable[PauliString], rel_tol: Optional[float] = None) -> List[PauliString]:
    """Merge like strings and drop coefficients below ``rel_tol`` of the largest"""
    rel_tol = settings.PRUNE_REL_TOL if rel_tol is None else rel_tol
    acc: Dict[str, complex] = {}
    for term in terms:
        acc[term.factors] = acc.get(term.factors, 0j) + term.coefficient
    if not acc:
        return []
    largest = max(abs(c) for c in acc.values())
    cutoff = rel_tol * largest
    return [PauliString(f, c) for f, c in acc.items() if abs(c) > cutoff and c != 0]


def multiply_sums(left: Sequence[PauliString], right: Sequence[PauliString],
                  rel_tol: Optional[float] = None) -> List[PauliString]:
    return collect_terms((a * b for a in left for b in right), rel_tol)


def commutator_sums(left: Sequence[PauliString], right: Sequence[PauliString],
                    rel_tol: Optional[float] = None) -> List[PauliString]:
    """[A, B] for Pauli sums: anticommuting pairs contribute 2ab, others vanish"""
    products = (
        (a * b).scaled(2.0)
        for a in left for b in right
        if not a.commutes_with(b)
    )
    return collect_terms(products, rel_tol)


# ===== OPERATORS =====

@dataclass(frozen=True)
class SparseOperator:
    """Operator on the 2^N space stored as a CSR matrix"""
    matrix: sp.csr_matrix
    n_sites: int
    hermitian: bool = False

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def matvec(self, amplitudes: np.ndarray) -> np.ndarray:
        return self.matrix @ amplitudes

    def axpy(self, alpha: complex, other: "SparseOperator") -> "SparseOperator":
        """Return ``self + alpha * other``"""
        if other.dim != self.dim:
            raise DimensionMismatchError(f"Operator dims {self.dim} and {other.dim} differ")
        hermitian = self.hermitian and other.hermitian and complex(alpha).imag == 0
        return SparseOperator((self.matrix + alpha * other.matrix).tocsr(), self.n_sites, hermitian)

    def scaled(self, alpha: complex) -> "SparseOperator":
        hermitian = self.hermitian and complex(alpha).imag == 0
        return SparseOperator((alpha * self.matrix).tocsr(), self.n_sites, hermitian)

    def dagger(self) -> "SparseOperator":
        return SparseOperator(self.matrix.conj().T.tocsr(), self.n_sites, self.hermitian)

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.aslinearoperator(self.matrix)

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral norm (max absolute column sum)"""
        if self.matrix.nnz == 0:
            return 0.0
        return float(spla.norm(self.matrix, 1))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        diff = self.matrix - self.matrix.conj().T
        return diff.nnz == 0 or float(abs(diff).max()) <= tol

    @classmethod
    def identity(cls, n_sites: int) -> "SparseOperator":
        return cls(sp.identity(1 << n_sites, dtype=complex, format="csr"), n_sites, True)


@dataclass(frozen=True)
class ComposedOperator:
    """Matrix-free operator defined by a matvec callable"""
    n_sites: int
    apply: Callable[[np.ndarray], np.ndarray]
    hermitian: bool = True
    norm_estimate: float = 0.0

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def matvec(self, amplitudes: np.ndarray) -> np.ndarray:
        return self.apply(amplitudes)

    def scaled(self, alpha: float) -> "ComposedOperator":
        inner = self.apply
        return ComposedOperator(self.n_sites, lambda v: alpha * inner(v), self.hermitian,
                                abs(alpha) * self.norm_estimate)

    def as_linear_operator(self) -> spla.LinearOperator:
        return spla.LinearOperator((self.dim, self.dim), matvec=self.apply, dtype=complex)

    def norm_bound(self) -> float:
        return self.norm_estimate

    def to_dense(self) -> np.ndarray:
        eye = np.eye(self.dim, dtype=complex)
        return np.column_stack([self.apply(eye[:, j]) for j in range(self.dim)])


Operator = Union[SparseOperator, ComposedOperator]


# ===== STATES =====

@dataclass(frozen=True)
class StateVector:
    """Complex amplitude vector of length 2^N (read-only copy of the input)"""
    amplitudes: np.ndarray

    def __post_init__(self):
        arr = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        dim = arr.shape[0]
        if dim < 2 or dim & (dim - 1):
            raise DimensionMismatchError(f"State length {dim} is not a power of two")
        arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", arr)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def n_sites(self) -> int:
        return self.dim.bit_length() - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("Cannot normalize the zero vector")
        return StateVector(self.amplitudes / nrm)

    @classmethod
    def basis_state(cls, n_sites: int, index: int) -> "StateVector":
        amps = np.zeros(1 << n_sites, dtype=complex)
        amps[index] = 1.0
        return cls(amps)


@dataclass(frozen=True)
class EigenPair:
    eigenvalue: float
    state: StateVector
    residual: float


def normalize(v: StateVector) -> StateVector:
    return v.normalized()


def _check_dims(op_dim: int, v: StateVector) -> None:
    if op_dim != v.dim:
        raise DimensionMismatchError(f"Operator dim {op_dim} does not match state dim {v.dim}")


# ===== OPERATIONS =====

def assemble(terms: Sequence[PauliString], n_sites: int) -> SparseOperator:
    """Sum of Pauli strings as a CSR matrix"""
    if n_sites > settings.MAX_SITES:
        raise SiteCapExceededError(f"{n_sites} sites exceeds cap of {settings.MAX_SITES}")
    for term in terms:
        if term.n_sites != n_sites:
            raise DimensionMismatchError(
                f"Term {term.factors!r} has {term.n_sites} sites, expected {n_sites}"
            )
    dim = 1 << n_sites
    if not terms:
        return SparseOperator(sp.csr_matrix((dim, dim), dtype=complex), n_sites, True)

    rows, cols, data = [], [], []
    indices = np.arange(dim, dtype=np.int64)
    for term in terms:
        targets, values = _pauli_action(term)
        rows.append(targets)
        cols.append(indices)
        data.append(values)
    matrix = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dim, dim),
    ).tocsr()
    matrix.sum_duplicates()
    matrix.eliminate_zeros()

    # Pauli strings are Hermitian, so the sum is iff collected coefficients are real
    collected = collect_terms(terms, rel_tol=0.0)
    hermitian = all(abs(t.coefficient.imag) <= 1e-12 * max(1.0, abs(t.coefficient)) for t in collected)
    return SparseOperator(matrix, n_sites, hermitian)


def matvec(op: Operator, v: StateVector) -> StateVector:
    _check_dims(op.dim, v)
    return StateVector(op.matvec(v.amplitudes))


def _eig_residual(op: Operator, value: float, vector: np.ndarray) -> float:
    return float(np.linalg.norm(op.matvec(vector) - value * vector))


def extremal_eigs(
    op: Operator,
    k: int,
    which: Literal["lowest", "highest", "nearest"] = "lowest",
    seed: Optional[int] = None,
    sigma: Optional[float] = None,
) -> List[EigenPair]:
    """k extremal eigenpairs of a Hermitian operator, sorted by eigenvalue.

    Dense ``eigh`` up to DENSE_EIG_MAX_SITES, ARPACK Lanczos above. When
    ``sigma`` is given for an explicit sparse operator, shift-invert mode
    returns the eigenvalues closest to ``sigma`` (``which="nearest"``
    requires it).
    """
    if not op.hermitian:
        raise ValueError("extremal_eigs needs a Hermitian operator")
    if not 1 <= k <= op.dim:
        raise ValueError(f"k={k} outside [1, {op.dim}]")
    if which == "nearest" and sigma is None:
        raise ValueError("which='nearest' requires sigma")

    dense = op.n_sites <= settings.DENSE_EIG_MAX_SITES or k >= op.dim - 1
    if dense:
        values, vectors = np.linalg.eigh(op.to_dense())
        if which == "lowest":
            order = np.arange(k)
        elif which == "highest":
            order = np.arange(op.dim - k, op.dim)
        else:
            order = np.sort(np.argsort(np.abs(values - sigma), kind="stable")[:k])
        values, vectors = values[order], vectors[:, order]
        norm_scale = float(np.max(np.abs(values))) if values.size else 0.0
    else:
        rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
        v0 = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
        try:
            if sigma is not None and isinstance(op, SparseOperator):
                values, vectors = spla.eigsh(
                    op.matrix.tocsc(), k=k, sigma=sigma, which="LM", v0=v0,
                    maxiter=settings.EIG_MAX_ITER,
                )
            else:
                if which == "nearest":
                    raise ValueError("Shift-invert needs an explicit sparse operator")
                values, vectors = spla.eigsh(
                    op.as_linear_operator(), k=k, which="SA" if which == "lowest" else "LA",
                    v0=v0, maxiter=settings.EIG_MAX_ITER, tol=0,
                )
        except spla.ArpackNoConvergence as exc:
            raise ConvergenceError(f"Lanczos did not converge for k={k}: {exc}") from exc
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        norm_scale = op.norm_bound()

    pairs = []
    for value, vector in zip(values, vectors.T):
        value = float(np.real(value))
        residual = _eig_residual(op, value, vector)
        bound = settings.EIG_RESIDUAL_TOL * max(1.0, abs(value)) + 1e3 * np.finfo(float).eps * norm_scale
        if residual > bound:
            raise ConvergenceError(f"Eigenpair {value:.6g} residual {residual:.3e} above {bound:.3e}")
        pairs.append(EigenPair(value, StateVector(vector), residual))
    return pairs


def shifted_solve(
    H: Operator,
    E: float,
    delta: float,
    rhs: StateVector,
    tol: Optional[float] = None,
) -> StateVector:
    """Solve (1 + i/delta (H - E)) x = rhs.

    Restarted GMRES with iterative refinement; when refinement stalls above
    ``tol`` a dense direct solve is used for n_sites <= DENSE_MAX_SITES. Both
    paths raise SolverStagnationError rather than return an unconverged x; the
    dense path accepts residuals down to its rounding floor.
    ``delta = inf`` is the identity filter.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    _check_dims(H.dim, rhs)
    tol = settings.SOLVER_TOL if tol is None else tol
    b = np.array(rhs.amplitudes)
    if math.isinf(delta):
        return StateVector(b)
    b_norm = np.linalg.norm(b)
    if b_norm == 0:
        return StateVector(np.zeros_like(b))

    inv = 1.0 / delta

    def apply(x: np.ndarray) -> np.ndarray:
        return x + 1j * inv * (H.matvec(x) - E * x)

    linop = spla.LinearOperator((H.dim, H.dim), matvec=apply, dtype=complex)
    restart = min(settings.SOLVER_RESTART, H.dim)
    x = np.zeros_like(b)
    r = b
    rel = 1.0
    for sweep in range(settings.SOLVER_MAX_REFINEMENTS):
        d, info = spla.gmres(linop, r, rtol=settings.SOLVER_TOL, atol=0.0,
                             restart=restart, maxiter=settings.SOLVER_MAX_ITER)
        x = x + d
        r = b - apply(x)
        new_rel = float(np.linalg.norm(r) / b_norm)
        logger.debug(f"shifted_solve sweep {sweep}: residual {new_rel:.3e} (info={info})")
        if new_rel <= tol:
            return StateVector(x)
        stalled = new_rel > 0.1 * rel
        rel = new_rel
        if stalled:
            break

    if H.n_sites <= settings.DENSE_MAX_SITES:
        logger.warning(f"GMRES stalled at residual {rel:.3e}; using dense solve")
        dense = np.eye(H.dim, dtype=complex) + 1j * inv * (H.to_dense() - E * np.eye(H.dim))
        x = scipy.linalg.solve(dense, b)
        rel = float(np.linalg.norm(b - apply(x)) / b_norm)
        floor = max(tol, 1e3 * np.finfo(float).eps * np.linalg.norm(dense, 1))
        logger.debug(f"dense shifted solve residual {rel:.3e} (floor {floor:.3e})")
        if rel <= floor:
            return StateVector(x)
        raise SolverStagnationError(f"Dense shifted solve left relative residual {rel:.3e}", residual=rel)

    raise SolverStagnationError(f"Shifted solve stagnated at relative residual {rel:.3e}", residual=rel)


_BREAKDOWN_TOL = 1e-12


def _lanczos(op: Operator, q0: np.ndarray, m_max: int):
    """Lanczos with full reorthogonalization.

    Returns (basis rows, alpha, beta, exact) where beta[j] couples v_j to
    v_{j+1}; ``exact`` marks an invariant subspace.
    """
    basis = np.empty((m_max, q0.shape[0]), dtype=complex)
    basis[0] = q0
    alpha: List[float] = []
    beta: List[float] = []
    for j in range(m_max):
        w = op.matvec(basis[j])
        a = float(np.vdot(basis[j], w).real)
        w = w - a * basis[j]
        if j > 0:
            w = w - beta[j - 1] * basis[j - 1]
        w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        b = float(np.linalg.norm(w))
        alpha.append(a)
        beta.append(b)
        scale = max(1.0, abs(a), beta[j - 1] if j > 0 else 0.0)
        if b <= _BREAKDOWN_TOL * scale:
            return basis[: j + 1], np.array(alpha), np.array(beta), True
        if j + 1 < m_max:
            basis[j + 1] = w / b
    return basis, np.array(alpha), np.array(beta), m_max == q0.shape[0]


def expm_apply(op: Operator, v: StateVector, t: float, tol: Optional[float] = None) -> StateVector:
    """exp(-i t op) v by Krylov (Lanczos) projection with adaptive substeps.

    Each accepted substep of length h satisfies the a-posteriori estimate
    beta * beta_m * |[exp(-i h T_m)]_{m,1}| <= tol * ||v|| * h / |t|, so the
    total error stays below tol * ||v||.
    """
    if not op.hermitian:
        raise ValueError("expm_apply needs a Hermitian operator")
    _check_dims(op.dim, v)
    tol = settings.EXPM_TOL if tol is None else tol
    w = np.array(v.amplitudes)
    v_norm = float(np.linalg.norm(w))
    if t == 0 or v_norm == 0:
        return StateVector(w)

    m_max = min(settings.KRYLOV_MAX_DIM, op.dim)
    total = abs(t)
    direction = 1.0 if t > 0 else -1.0
    remaining = total
    step = total
    min_step = total * 1e-12

    while remaining > 0:
        beta0 = float(np.linalg.norm(w))
        basis, alpha, beta, exact = _lanczos(op, w / beta0, m_max)
        m = alpha.shape[0]
        if m == 1:
            evals, evecs = alpha.copy(), np.ones((1, 1))
        else:
            evals, evecs = scipy.linalg.eigh_tridiagonal(alpha, beta[: m - 1])

        step = min(step, remaining)
        while True:
            y = evecs @ (np.exp(-1j * direction * step * evals) * evecs[0])
            err = 0.0 if exact else beta0 * beta[m - 1] * abs(y[-1])
            if err <= tol * v_norm * step / total:
                break
            step *= 0.5
            if step < min_step:
                raise ConvergenceError(
                    f"Krylov error {err:.3e} unreachable with subspace cap {m_max}"
                )

        w = beta0 * (basis[:m].T @ y)
        remaining -= step
        if remaining < min_step:
            remaining = 0.0
        step *= 2.0
    return StateVector(w)


def energy_moments(op: Operator, v: StateVector) -> Tuple[float, float]:
    """Mean and variance of a Hermitian operator in a normalized state"""
    _check_dims(op.dim, v)
    a = v.amplitudes
    w = op.matvec(a)
    mean = float(np.vdot(a, w).real)
    deviation = w - mean * a
    variance = float(np.vdot(deviation, deviation).real)
    if variance < -settings.VARIANCE_CLIP:
        logger.warning(f"Variance {variance:.3e} below clip threshold")
    return mean, max(variance, 0.0)


def fidelity(a: StateVector, b: StateVector) -> float:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"State dims {a.dim} and {b.dim} differ")
    overlap = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, max(0.0, overlap)))


def entanglement_entropy(v: StateVector, cut: int) -> float:
    """Von Neumann entropy (nats) of sites [0, cut) against the rest"""
    n = v.n_sites
    if not 0 < cut < n:
        raise ValueError(f"cut={cut} must lie strictly between 0 and {n}")
    psi = v.normalized().amplitudes.reshape(1 << cut, 1 << (n - cut))
    singular = scipy.linalg.svdvals(psi)
    singular = singular[singular > settings.ENTROPY_CUTOFF]
    probs = singular ** 2
    probs = probs / probs.sum()
    return float(max(0.0, -np.sum(probs * np.log(probs))))


def energy_distribution(op: SparseOperator, v: StateVector) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-energies e_n and weights |<e_n|v>|^2 (dense diagonalization)"""
    if op.n_sites > settings.DENSE_MAX_SITES:
        raise SiteCapExceededError(
            f"Dense diagonalization limited to {settings.DENSE_MAX_SITES} sites"
        )
    _check_dims(op.dim, v)
    energies, vectors = np.linalg.eigh(op.to_dense())
    weights = np.abs(vectors.conj().T @ v.amplitudes) ** 2
    return energies, weights
