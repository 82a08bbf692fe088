"""Shared fixtures: dense Kronecker-product oracles independent of filterlab"""
import sys
from functools import reduce
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DenseOracle:
    """Builds Hamiltonians and states with explicit np.kron, site 0 leftmost"""

    @staticmethod
    def site_operator(n, site, op):
        return reduce(np.kron, [op if i == site else I2 for i in range(n)])

    @classmethod
    def tfi(cls, n, J=1.0, g=-1.05, h=0.5):
        H = np.zeros((2 ** n, 2 ** n), dtype=complex)
        for i in range(n - 1):
            H += J * cls.site_operator(n, i, Z) @ cls.site_operator(n, i + 1, Z)
        for i in range(n):
            H += J * g * cls.site_operator(n, i, X)
            H += J * h * cls.site_operator(n, i, Z)
        return H

    @staticmethod
    def product(site_states):
        return reduce(np.kron, [np.asarray(s, dtype=complex) for s in site_states])

    @classmethod
    def afm(cls, n):
        return cls.product([[0, 1] if i % 2 == 0 else [1, 0] for i in range(n)])

    @classmethod
    def theta_state(cls, n, theta):
        return cls.product([[np.cos(theta), np.sin(theta)]] * n)

    @classmethod
    def projector_sum(cls, site_states):
        n = len(site_states)
        total = np.zeros((2 ** n, 2 ** n), dtype=complex)
        for i, s in enumerate(site_states):
            s = np.asarray(s, dtype=complex)
            total += cls.site_operator(n, i, I2 - np.outer(s, s.conj()))
        return total

    @classmethod
    def parent(cls, H, P, E, delta):
        F = np.eye(H.shape[0]) + 1j / delta * (H - E * np.eye(H.shape[0]))
        return F.conj().T @ P @ F


@pytest.fixture
def oracle():
    return DenseOracle


@pytest.fixture
def afm_sites():
    def sites(n):
        return [[0, 1] if i % 2 == 0 else [1, 0] for i in range(n)]
    return sites


@pytest.fixture
def rng():
    return np.random.default_rng(7)
