"""Transverse-field Ising benchmark model, product states and their projectors"""
import logging
from typing import List, Sequence, Tuple

import numpy as np

from ..schemas.schemas import ProductStateSpec, TfiParams
from .operator_core import PauliString, StateVector, collect_terms

logger = logging.getLogger(__name__)

_BLOCH_AXES = ("X", "Y", "Z")


def build_tfi(params: TfiParams) -> List[PauliString]:
    """H = J sum Z_i Z_{i+1} + Jg sum X_i + Jh sum Z_i on an open chain"""
    n = params.N
    if n < 2:
        raise ValueError(f"TFI chain needs N >= 2, got {n}")
    terms = [
        PauliString.from_sites(n, {i: "Z", i + 1: "Z"}, params.J)
        for i in range(n - 1)
    ]
    terms += [PauliString.from_sites(n, {i: "X"}, params.J * params.g) for i in range(n)]
    terms += [PauliString.from_sites(n, {i: "Z"}, params.J * params.h) for i in range(n)]
    return terms


def product_state(spec: ProductStateSpec) -> StateVector:
    amplitudes = np.ones(1, dtype=complex)
    for a, b in spec.site_amplitudes():
        amplitudes = np.kron(amplitudes, np.array([a, b], dtype=complex))
    return StateVector(amplitudes).normalized()


def site_projector_terms(spec: ProductStateSpec, site: int) -> List[PauliString]:
    """P_i = (1 - n.sigma_i) / 2 for the Bloch vector n of the site state"""
    bloch = spec.bloch_vectors()[site]
    terms = [PauliString.identity(spec.N, 0.5)]
    for axis, component in zip(_BLOCH_AXES, bloch):
        terms.append(PauliString.from_sites(spec.N, {site: axis}, -0.5 * component))
    return collect_terms(terms)


def projectors(spec: ProductStateSpec) -> List[List[PauliString]]:
    """One Pauli-sum per site, each annihilating the product state"""
    return [site_projector_terms(spec, i) for i in range(spec.N)]


def projector_sum_terms(spec: ProductStateSpec) -> List[PauliString]:
    return collect_terms(term for site in projectors(spec) for term in site)


def _expectation(string: PauliString, bloch: np.ndarray) -> complex:
    value = string.coefficient
    for site in string.support:
        value *= bloch[site, _BLOCH_AXES.index(string.factors[site])]
    return value


def classical_moments(spec: ProductStateSpec, terms: Sequence[PauliString]) -> Tuple[float, float]:
    """Energy mean and variance of a product state by local contraction.

    Only pairs of terms with overlapping support contribute to the variance;
    no 2^N object is allocated.
    """
    bloch = spec.bloch_vectors()
    for term in terms:
        if term.n_sites != spec.N:
            raise ValueError(f"Term on {term.n_sites} sites, state has {spec.N}")
    means = [_expectation(t, bloch) for t in terms]
    masks = [t.support_mask for t in terms]
    mean = sum(means)

    variance = 0j
    for a, (term_a, mask_a) in enumerate(zip(terms, masks)):
        for b, (term_b, mask_b) in enumerate(zip(terms, masks)):
            if not mask_a & mask_b:
                continue
            variance += _expectation(term_a * term_b, bloch) - means[a] * means[b]
    variance = float(variance.real)
    return float(mean.real), max(variance, 0.0)


def theta_energy_density(theta: float, g: float, h: float) -> float:
    """Thermodynamic-limit E/JN = cos^2(2t) + h cos(2t) + g sin(2t)"""
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return float(c * c + h * c + g * s)


def theta_energy_curve(thetas: Sequence[float], g: float, h: float) -> np.ndarray:
    t = np.asarray(thetas, dtype=float)
    c, s = np.cos(2 * t), np.sin(2 * t)
    return c * c + h * c + g * s
