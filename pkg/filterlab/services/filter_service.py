"""Lorentzian filter, filtered states and the parent Hamiltonian family"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.integrate
import scipy.special

from ..core.config import settings
from ..schemas.schemas import FilterParams
from .operator_core import (
    ComposedOperator,
    Operator,
    PauliString,
    SparseOperator,
    StateVector,
    assemble,
    energy_moments,
    extremal_eigs,
    normalize,
    shifted_solve,
)

logger = logging.getLogger(__name__)


def resolve_filter_center(H: Operator, psi: StateVector, E_F: Optional[float] = None) -> Tuple[float, float]:
    """Return (E_F, E0); E_F defaults to the product-state energy E0"""
    E0, _ = energy_moments(H, psi)
    if E_F is None:
        return E0, E0
    if abs(E_F - E0) > settings.E_F_WARN_TOL:
        logger.warning(
            f"Filter center E_F={E_F:.6g} differs from product-state energy E0={E0:.6g}; "
            f"the filtered weight decays with the detuning"
        )
    return E_F, E0


def filter_matvec(H: Operator, fp: FilterParams, v: StateVector, adjoint: bool = False) -> StateVector:
    """(1 +/- i delta^-1 (H - E_F)) v, minus sign for the adjoint"""
    a = fp.delta_inverse
    if a == 0:
        return StateVector(v.amplitudes)
    sign = -1.0 if adjoint else 1.0
    x = v.amplitudes
    return StateVector(x + sign * 1j * a * (H.matvec(x) - fp.E_F * x))


def filtered_state(H: Operator, psi: StateVector, fp: FilterParams) -> StateVector:
    """Normalized solution of (1 + i delta^-1 (H - E_F)) phi = psi"""
    if fp.delta_inverse == 0:
        return normalize(psi)
    phi = shifted_solve(H, fp.E_F, fp.delta, psi, tol=settings.FILTER_SOLVE_TOL)
    return normalize(phi)


def lorentzian_weights(energies: np.ndarray, E_F: float, delta: float) -> np.ndarray:
    """Squared filter amplitudes 1 / (1 + delta^-2 (e - E_F)^2)"""
    inv = 0.0 if math.isinf(delta) else 1.0 / delta
    return 1.0 / (1.0 + (inv * (np.asarray(energies) - E_F)) ** 2)


# ===== PARENT HAMILTONIAN =====

@dataclass(frozen=True)
class ParentHamiltonian:
    raw: Operator
    rescaled: Operator
    params: FilterParams
    projector_sum: SparseOperator


@dataclass(frozen=True)
class ParentFamily:
    """H(a) = P + a K1 + a^2 K2 with a = delta^-1.

    K1 = -i[H, P] and K2 = (H - E_F) P (H - E_F). The explicit parts are only
    built up to EXPLICIT_PARENT_MAX_SITES; above that the family evaluates to
    a matrix-free composition F^dagger P F.
    """
    hamiltonian: SparseOperator
    projector_sum: SparseOperator
    E_F: float
    k1: Optional[SparseOperator] = None
    k2: Optional[SparseOperator] = None

    @classmethod
    def from_operators(cls, H: SparseOperator, P: SparseOperator, E_F: float,
                       explicit: Optional[bool] = None) -> "ParentFamily":
        if explicit is None:
            explicit = H.n_sites <= settings.EXPLICIT_PARENT_MAX_SITES
        if not explicit:
            return cls(H, P, E_F)
        A = H.axpy(-E_F, SparseOperator.identity(H.n_sites)).matrix
        Pm = P.matrix
        k1 = (1j * (Pm @ A - A @ Pm)).tocsr()
        k2 = (A @ Pm @ A).tocsr()
        k2 = (0.5 * (k2 + k2.conj().T)).tocsr()
        return cls(
            H, P, E_F,
            SparseOperator(k1, H.n_sites, True),
            SparseOperator(k2, H.n_sites, True),
        )

    @classmethod
    def from_terms(cls, H_terms: Sequence[PauliString], projector_terms: Sequence[PauliString],
                   E_F: float, n_sites: Optional[int] = None) -> "ParentFamily":
        n = n_sites if n_sites is not None else H_terms[0].n_sites
        return cls.from_operators(assemble(H_terms, n), assemble(projector_terms, n), E_F)

    @property
    def n_sites(self) -> int:
        return self.hamiltonian.n_sites

    @property
    def explicit(self) -> bool:
        return self.k1 is not None

    def operator(self, delta_inverse: float, rescaled: bool = False) -> Operator:
        a = delta_inverse
        scale = 1.0 / (1.0 + a * a) if rescaled else 1.0
        if self.explicit:
            op = self.projector_sum
            if a != 0:
                op = op.axpy(a, self.k1).axpy(a * a, self.k2)
            return op.scaled(scale) if scale != 1.0 else op
        return self._composed(a, scale)

    def _composed(self, a: float, scale: float) -> ComposedOperator:
        H, P, E = self.hamiltonian, self.projector_sum, self.E_F

        def apply(x: np.ndarray) -> np.ndarray:
            y = x + 1j * a * (H.matvec(x) - E * x)
            y = P.matvec(y)
            return scale * (y - 1j * a * (H.matvec(y) - E * y))

        shifted_norm = H.norm_bound() + abs(E)
        estimate = scale * P.norm_bound() * (1.0 + a * shifted_norm) ** 2
        return ComposedOperator(self.n_sites, apply, True, estimate)

    def parent(self, fp: FilterParams) -> ParentHamiltonian:
        raw = self.operator(fp.delta_inverse)
        return ParentHamiltonian(
            raw=raw,
            rescaled=self.operator(fp.delta_inverse, rescaled=True),
            params=fp,
            projector_sum=self.projector_sum,
        )


def build_parent(H_terms: Sequence[PauliString], projector_terms: Sequence[PauliString],
                 fp: FilterParams, n_sites: Optional[int] = None) -> ParentHamiltonian:
    """Parent Hamiltonian F^dagger (sum P_i) F, raw and rescaled by 1/(1 + delta^-2)"""
    family = ParentFamily.from_terms(H_terms, projector_terms, fp.E_F, n_sites)
    return family.parent(fp)


@dataclass(frozen=True)
class GapCertificate:
    min_eig_h2_minus_h: float
    smallest_nonzero: float
    passed: bool


def gap_certificate(ph: ParentHamiltonian, seed: Optional[int] = None) -> GapCertificate:
    """Smallest eigenvalue of H^2 - H and the smallest nonzero eigenvalue of H.

    Dense spectra are used up to DENSE_EIG_MAX_SITES. Above that only the two
    lowest eigenvalues are computed; with a unique ground state and a second
    eigenvalue above 1 no other level can make H^2 - H negative.
    """
    raw = ph.raw
    if raw.n_sites <= settings.DENSE_EIG_MAX_SITES:
        spectrum = np.linalg.eigvalsh(raw.to_dense())
    else:
        spectrum = np.array([pair.eigenvalue for pair in extremal_eigs(raw, 2, "lowest", seed=seed)])

    values = spectrum * spectrum - spectrum
    min_value = float(values.min())
    nonzero = spectrum[spectrum > settings.ZERO_EIGENVALUE_TOL]
    smallest_nonzero = float(nonzero[0]) if nonzero.size else math.inf
    passed = min_value >= -settings.GAP_TOL
    logger.debug(
        f"gap certificate N={raw.n_sites} delta^-1={ph.params.delta_inverse:.6g}: "
        f"min(H^2-H)={min_value:.3e}, gap={smallest_nonzero:.6g}"
    )
    return GapCertificate(min_value, smallest_nonzero, passed)


def discreteness_eta(H: SparseOperator, E: float, seed: Optional[int] = None) -> float:
    """Distance from E to the nearest eigenvalue of H"""
    if H.n_sites <= settings.DENSE_EIG_MAX_SITES:
        spectrum = np.linalg.eigvalsh(H.to_dense())
        return float(np.min(np.abs(spectrum - E)))
    pairs = extremal_eigs(H, 1, "nearest", seed=seed, sigma=E)
    return float(abs(pairs[0].eigenvalue - E))


# ===== CLOSED FORMS =====

def variance_theory(delta: float, sigma0_sq: float) -> float:
    """Filtered variance of a Gaussian energy distribution centered on E_F.

    sigma_L^2 = -delta^2 + delta sqrt(2 s/pi) exp(-x^2) / erfc(x), with
    x = delta / sqrt(2 s). exp(-x^2)/erfc(x) = 1/erfcx(x) keeps large x finite.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if sigma0_sq < 0:
        raise ValueError(f"sigma0_sq must be nonnegative, got {sigma0_sq}")
    if math.isinf(delta) or sigma0_sq == 0:
        return float(sigma0_sq)
    width = math.sqrt(2.0 * sigma0_sq)
    x = delta / width
    return float(-delta * delta + delta * width / math.sqrt(math.pi) / scipy.special.erfcx(x))


def gaussian_filtered_moments(delta: float, sigma0_sq: float, detuning: float = 0.0) -> Tuple[float, float]:
    """Mean shift and variance of a Gaussian energy distribution after filtering.

    The distribution is centered on E0 and the filter on E0 + detuning. With
    zero detuning the variance reduces to variance_theory.
    """
    if math.isinf(delta):
        return 0.0, float(sigma0_sq)
    sigma = math.sqrt(sigma0_sq)
    center = detuning / sigma
    width = delta / sigma

    def weight(z: float) -> float:
        return math.exp(-0.5 * z * z) / (1.0 + ((z - center) / width) ** 2)

    def moment(power: int) -> float:
        lo, hi = center - 50.0 * width, center + 50.0 * width
        f = lambda z: z ** power * weight(z)
        total = scipy.integrate.quad(f, lo, hi, points=[center], limit=400)[0]
        total += scipy.integrate.quad(f, -np.inf, lo, limit=200)[0]
        total += scipy.integrate.quad(f, hi, np.inf, limit=200)[0]
        return total

    norm = moment(0)
    mean = moment(1) / norm
    second = moment(2) / norm
    return float(mean * sigma), float(max(second - mean * mean, 0.0) * sigma0_sq)


@dataclass(frozen=True)
class RuntimeBound:
    gap_lower_bound: float
    derivative_bound: float
    time_bound: float


def runtime_bound(n_sites: int, delta_inverse: float, h_norm: float, samples: int = 101) -> RuntimeBound:
    """Adiabatic-theorem ingredients along the linear path s -> s delta^-1.

    Gap of the rescaled family >= 1/(1 + s^2 delta^-2); ||d/ds H~|| is bounded
    with ||P|| <= N, ||H - E|| <= h_norm and ||V|| <= 1 + s delta^-1 h_norm.
    Returns the gap at s=1 and max_s ||d/ds H~|| / gap(s)^2.
    """
    worst_derivative = 0.0
    worst_time = 0.0
    for s in np.linspace(0.0, 1.0, samples):
        a = s * delta_inverse
        scale = 1.0 / (1.0 + a * a)
        v_norm = 1.0 + a * h_norm
        parent_norm = n_sites * v_norm ** 2
        derivative = scale * (2 * s * delta_inverse ** 2 * parent_norm
                              + 2 * delta_inverse * h_norm * n_sites * v_norm)
        gap = scale
        worst_derivative = max(worst_derivative, derivative)
        worst_time = max(worst_time, derivative / gap ** 2)
    return RuntimeBound(1.0 / (1.0 + delta_inverse ** 2), worst_derivative, worst_time)
