"""Tests for the Lorentzian filter, parent Hamiltonians and closed forms"""
import math

import numpy as np
import pytest
import scipy.integrate
import scipy.sparse as sp

from filterlab.core.config import settings
from filterlab.schemas.schemas import FilterParams, ProductStateSpec, TfiParams
from filterlab.services.filter_service import (
    ParentFamily,
    build_parent,
    discreteness_eta,
    filter_matvec,
    filtered_state,
    gap_certificate,
    gaussian_filtered_moments,
    lorentzian_weights,
    resolve_filter_center,
    runtime_bound,
    variance_theory,
)
from filterlab.services.operator_core import (
    SparseOperator,
    StateVector,
    assemble,
    energy_moments,
    entanglement_entropy,
    fidelity,
)
from filterlab.services.tfi_model import build_tfi, classical_moments, product_state, projector_sum_terms

THETA = math.pi / 6


def chain(spec):
    terms = build_tfi(TfiParams(N=spec.N))
    H = assemble(terms, spec.N)
    psi = product_state(spec)
    E0, _ = energy_moments(H, psi)
    return terms, H, psi, E0


def site_states(spec):
    return [[a, b] for a, b in spec.site_amplitudes()]


def erfc_oracle(x):
    tail, _ = scipy.integrate.quad(lambda t: math.exp(-t * t), x, np.inf, epsabs=1e-15, epsrel=1e-13)
    return 2.0 / math.sqrt(math.pi) * tail


class TestFilterApplication:

    def test_no_filter(self, rng):
        _, H, _, _ = chain(ProductStateSpec.afm(4))
        v = StateVector(rng.standard_normal(16))
        fp = FilterParams.from_inverse(0.3, 0.0)
        assert np.array_equal(filter_matvec(H, fp, v).amplitudes, v.amplitudes)

    def test_eigenvector(self, oracle):
        H = oracle.tfi(4)
        energies, vectors = np.linalg.eigh(H)
        op = assemble(build_tfi(TfiParams(N=4)), 4)
        fp = FilterParams(E_F=-1.0, delta=0.5)
        out = filter_matvec(op, fp, StateVector(vectors[:, 3]))
        assert np.allclose(out.amplitudes, (1 + 2j * (energies[3] + 1.0)) * vectors[:, 3], atol=1e-12)

    def test_adjoint_times_forward(self, oracle, rng):
        H = oracle.tfi(4)
        op = assemble(build_tfi(TfiParams(N=4)), 4)
        fp = FilterParams(E_F=0.7, delta=0.4)
        v = StateVector(rng.standard_normal(16) + 1j * rng.standard_normal(16))
        out = filter_matvec(op, fp, filter_matvec(op, fp, v), adjoint=True)
        A = H - 0.7 * np.eye(16)
        expected = (np.eye(16) + A @ A / 0.16) @ v.amplitudes
        assert np.allclose(out.amplitudes, expected, atol=1e-10)

    def test_filtered_state_without_filter(self):
        _, H, psi, E0 = chain(ProductStateSpec.afm(4))
        phi = filtered_state(H, psi, FilterParams.from_inverse(E0, 0.0))
        assert np.allclose(phi.amplitudes, psi.amplitudes)

    def test_filtered_eigenvector(self, oracle):
        _, vectors = np.linalg.eigh(oracle.tfi(4))
        op = assemble(build_tfi(TfiParams(N=4)), 4)
        phi = filtered_state(op, StateVector(vectors[:, 5]), FilterParams(E_F=0.0, delta=0.2))
        assert fidelity(phi, StateVector(vectors[:, 5])) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", range(2, 9))
    @pytest.mark.parametrize("spec_kind", ["afm", "theta"])
    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0, 5.0])
    def test_lorentzian_weight_ratio(self, oracle, n, spec_kind, delta):
        spec = ProductStateSpec.afm(n) if spec_kind == "afm" else ProductStateSpec.uniform(n, THETA)
        _, H, psi, E0 = chain(spec)
        phi = filtered_state(H, psi, FilterParams(E_F=E0, delta=delta))

        energies, vectors = np.linalg.eigh(oracle.tfi(n))
        before = np.abs(vectors.conj().T @ psi.amplitudes) ** 2
        after = np.abs(vectors.conj().T @ phi.amplitudes) ** 2
        mask = before > 1e-6
        ratio = after[mask] / before[mask] / lorentzian_weights(energies[mask], E0, delta)
        assert np.allclose(ratio, ratio[0], rtol=1e-5)

    def test_lorentzian_weights(self):
        assert np.allclose(lorentzian_weights(np.array([0.0, 1.0]), 0.0, 0.5), [1.0, 0.2])
        assert np.allclose(lorentzian_weights(np.array([3.0]), 0.0, math.inf), [1.0])


class TestFilterCenter:

    def test_defaults_to_product_energy(self):
        _, H, psi, E0 = chain(ProductStateSpec.afm(4))
        assert resolve_filter_center(H, psi) == (pytest.approx(E0), pytest.approx(E0))
        assert E0 == pytest.approx(-3.0)

    def test_explicit_center(self):
        _, H, psi, E0 = chain(ProductStateSpec.afm(4))
        E_F, reference = resolve_filter_center(H, psi, 0.25)
        assert E_F == 0.25
        assert reference == pytest.approx(E0)


class TestParentHamiltonian:

    def test_zero_inverse_width_is_projector_sum(self):
        spec = ProductStateSpec.uniform(4, THETA)
        terms, H, _, E0 = chain(spec)
        P_terms = projector_sum_terms(spec)
        ph = build_parent(terms, P_terms, FilterParams.from_inverse(E0, 0.0))
        assert np.allclose(ph.raw.to_dense(), assemble(P_terms, 4).to_dense())

    @pytest.mark.parametrize("spec", [ProductStateSpec.afm(4), ProductStateSpec.uniform(4, THETA)],
                             ids=["afm", "theta"])
    def test_matches_triple_product(self, spec, oracle):
        terms, _, psi, E0 = chain(spec)
        delta = 0.5
        ph = build_parent(terms, projector_sum_terms(spec), FilterParams(E_F=E0, delta=delta))
        expected = oracle.parent(oracle.tfi(4), oracle.projector_sum(site_states(spec)), E0, delta)
        assert np.allclose(ph.raw.to_dense(), expected, atol=1e-10)
        assert np.allclose(ph.rescaled.to_dense(), expected / (1 + delta ** -2), atol=1e-10)

    @pytest.mark.parametrize("n", [4, 6, 8, 10])
    @pytest.mark.parametrize("spec_kind", ["afm", "theta"])
    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
    def test_filtered_state_is_ground_state(self, n, spec_kind, delta):
        spec = ProductStateSpec.afm(n) if spec_kind == "afm" else ProductStateSpec.uniform(n, THETA)
        terms, H, psi, E0 = chain(spec)
        fp = FilterParams(E_F=E0, delta=delta)
        ph = build_parent(terms, projector_sum_terms(spec), fp)
        phi = filtered_state(H, psi, fp)
        image = ph.raw.matvec(phi.amplitudes)
        assert np.linalg.norm(image) <= 1e-8
        assert np.vdot(phi.amplitudes, image).real <= 1e-9

    def test_matrix_free_matches_explicit(self, rng):
        spec = ProductStateSpec.uniform(4, THETA)
        terms, H, _, E0 = chain(spec)
        P = assemble(projector_sum_terms(spec), 4)
        explicit = ParentFamily.from_operators(H, P, E0, explicit=True)
        composed = ParentFamily.from_operators(H, P, E0, explicit=False)
        assert explicit.explicit and not composed.explicit
        v = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        for a in (0.0, 0.8, 3.0):
            for rescaled in (False, True):
                assert np.allclose(composed.operator(a, rescaled).matvec(v),
                                   explicit.operator(a, rescaled).matvec(v), atol=1e-10)
        assert composed.operator(3.0).norm_bound() >= np.linalg.norm(explicit.operator(3.0).to_dense(), 2)


class TestGapCertificate:

    def test_projector_sum_spectrum(self):
        spec = ProductStateSpec.afm(4)
        terms, _, _, E0 = chain(spec)
        ph = build_parent(terms, projector_sum_terms(spec), FilterParams.from_inverse(E0, 0.0))
        cert = gap_certificate(ph)
        assert cert.passed
        assert cert.min_eig_h2_minus_h == pytest.approx(0.0, abs=1e-12)
        assert cert.smallest_nonzero == pytest.approx(1.0)

    @pytest.mark.parametrize("n", [4, 6, 8])
    @pytest.mark.parametrize("spec_kind", ["afm", "theta"])
    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
    def test_gap_at_least_one(self, n, spec_kind, delta):
        spec = ProductStateSpec.afm(n) if spec_kind == "afm" else ProductStateSpec.uniform(n, THETA)
        terms, _, _, E0 = chain(spec)
        cert = gap_certificate(build_parent(terms, projector_sum_terms(spec), FilterParams(E_F=E0, delta=delta)))
        assert cert.passed
        assert cert.min_eig_h2_minus_h >= -settings.GAP_TOL
        assert cert.smallest_nonzero >= 1.0 - settings.GAP_TOL

    @pytest.mark.slow
    @pytest.mark.parametrize("spec_kind", ["afm", "theta"])
    @pytest.mark.parametrize("delta", [0.1, 0.5, 1.0])
    def test_gap_at_ten_sites(self, spec_kind, delta):
        spec = ProductStateSpec.afm(10) if spec_kind == "afm" else ProductStateSpec.uniform(10, THETA)
        terms, _, _, E0 = chain(spec)
        cert = gap_certificate(build_parent(terms, projector_sum_terms(spec), FilterParams(E_F=E0, delta=delta)))
        assert cert.passed and cert.smallest_nonzero >= 1.0 - settings.GAP_TOL

    def test_lanczos_path(self, monkeypatch):
        monkeypatch.setattr(settings, "DENSE_EIG_MAX_SITES", 2)
        spec = ProductStateSpec.afm(5)
        terms, _, _, E0 = chain(spec)
        cert = gap_certificate(build_parent(terms, projector_sum_terms(spec), FilterParams(E_F=E0, delta=0.5)),
                               seed=11)
        assert cert.passed
        assert cert.smallest_nonzero >= 1.0 - settings.GAP_TOL


class TestDiscreteness:

    def test_exact_eigenvalue(self, oracle):
        energies = np.linalg.eigvalsh(oracle.tfi(4))
        H = assemble(build_tfi(TfiParams(N=4)), 4)
        assert discreteness_eta(H, float(energies[2])) == pytest.approx(0.0, abs=1e-10)

    def test_two_level(self):
        H = SparseOperator(sp.diags([0.0, 1.0]).astype(complex).tocsr(), 1, True)
        assert discreteness_eta(H, 0.4) == pytest.approx(0.4)

    def test_afm_center(self, oracle):
        _, H, _, E0 = chain(ProductStateSpec.afm(8))
        expected = np.min(np.abs(np.linalg.eigvalsh(oracle.tfi(8)) - E0))
        assert discreteness_eta(H, E0) == pytest.approx(expected, abs=1e-10)

    def test_shift_invert_path(self, oracle, monkeypatch):
        monkeypatch.setattr(settings, "DENSE_EIG_MAX_SITES", 4)
        _, H, _, E0 = chain(ProductStateSpec.afm(8))
        expected = np.min(np.abs(np.linalg.eigvalsh(oracle.tfi(8)) - E0))
        assert discreteness_eta(H, E0, seed=5) == pytest.approx(expected, abs=1e-8)


class TestClosedForms:

    def test_spot_value_against_erf_oracle(self):
        x = 1.0 / math.sqrt(2.0)
        expected = -1.0 + math.sqrt(2.0 / math.pi) * math.exp(-x * x) / erfc_oracle(x)
        assert variance_theory(1.0, 1.0) == pytest.approx(expected, rel=1e-10)
        assert variance_theory(1.0, 1.0) == pytest.approx(0.5252, abs=1e-3)

    def test_wide_filter_limit(self):
        sigma0_sq = 2.3
        delta = 100.0 * math.sqrt(2 * sigma0_sq)
        assert variance_theory(delta, sigma0_sq) == pytest.approx(sigma0_sq, rel=0.01)
        assert variance_theory(math.inf, sigma0_sq) == sigma0_sq

    def test_narrow_filter_limit(self):
        sigma0_sq = 2.3
        delta = 0.01 * math.sqrt(2 * sigma0_sq)
        assert variance_theory(delta, sigma0_sq) == pytest.approx(delta * math.sqrt(2 * sigma0_sq / math.pi),
                                                                  rel=0.01)

    @pytest.mark.parametrize("sigma0_sq", [0.5, 1.0, 4.0])
    def test_variance_increases_with_width(self, sigma0_sq):
        values = np.array([variance_theory(d, sigma0_sq) for d in np.logspace(-2, 2, 200)])
        assert np.all(np.diff(values) > 0)
        assert np.all((values > 0) & (values < sigma0_sq))

    def test_invalid_arguments(self):
        with pytest.raises(ValueError):
            variance_theory(0.0, 1.0)
        with pytest.raises(ValueError):
            variance_theory(1.0, -1.0)

    @pytest.mark.parametrize("delta, sigma0_sq", [(0.7, 1.3), (2.0, 0.5), (0.05, 4.0)])
    def test_gaussian_moments_reduce_to_closed_form(self, delta, sigma0_sq):
        shift, variance = gaussian_filtered_moments(delta, sigma0_sq)
        assert shift == pytest.approx(0.0, abs=1e-9)
        assert variance == pytest.approx(variance_theory(delta, sigma0_sq), rel=1e-6)

    def test_detuned_filter_pulls_mean(self):
        shift, _ = gaussian_filtered_moments(0.5, 1.0, detuning=0.8)
        assert 0.0 < shift < 0.8

    def test_runtime_bound(self):
        small = runtime_bound(6, 1.0, h_norm=10.0)
        large = runtime_bound(6, 10.0, h_norm=10.0)
        assert small.gap_lower_bound == pytest.approx(0.5)
        assert large.gap_lower_bound == pytest.approx(1.0 / 101.0)
        assert large.time_bound > small.time_bound > 0
        assert runtime_bound(12, 1.0, h_norm=10.0).time_bound > small.time_bound


class TestFilteredEntropy:

    def test_matches_dense_svd(self, oracle):
        spec = ProductStateSpec.uniform(10, THETA)
        _, H, psi, E0 = chain(spec)
        phi = filtered_state(H, psi, FilterParams.from_inverse(E0, 5.0))

        Hd = oracle.tfi(10)
        x = np.linalg.solve(np.eye(1024) + 5j * (Hd - E0 * np.eye(1024)), oracle.theta_state(10, THETA))
        x /= np.linalg.norm(x)
        s = np.linalg.svd(x.reshape(32, 32), compute_uv=False) ** 2
        s = s[s > 1e-24]
        expected = float(-np.sum(s * np.log(s)))

        got = entanglement_entropy(phi, 5)
        assert got > 0
        assert got == pytest.approx(expected, abs=1e-8)

    @pytest.mark.slow
    def test_entropy_grows_with_size(self):
        values = []
        for n in (8, 10, 12):
            spec = ProductStateSpec.uniform(n, THETA)
            _, H, psi, E0 = chain(spec)
            values.append(entanglement_entropy(filtered_state(H, psi, FilterParams.from_inverse(E0, 5.0)), n // 2))
        assert values[0] < values[1] < values[2]
        assert values[2] >= 1.3 * values[0]


@pytest.mark.slow
@pytest.mark.parametrize("n", [10, 12])
def test_variance_follows_narrow_filter_line(n):
    spec = ProductStateSpec.uniform(n, THETA)
    terms, H, psi, _ = chain(spec)
    E0, sigma0_sq = classical_moments(spec, terms)
    eta = discreteness_eta(H, E0)

    logs = []
    for delta in np.geomspace(0.05, 5.0, 21):
        _, measured = energy_moments(H, filtered_state(H, psi, FilterParams(E_F=E0, delta=delta)))
        if delta > 5 * eta and measured < sigma0_sq / 4:
            logs.append((math.log(delta), math.log(measured / math.sqrt(sigma0_sq))))
    assert len(logs) >= 3
    slope, intercept = np.polyfit(*zip(*logs), 1)
    assert slope == pytest.approx(1.0, abs=0.15)
    assert math.exp(intercept) == pytest.approx(math.sqrt(2 / math.pi), rel=0.2)
