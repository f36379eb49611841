import math

import numpy as np
import pytest

from mceit.errors import DimensionError, TruncationError
from mceit.operators import (
    annihilation,
    basis_ket,
    coherent_ket,
    creation,
    dagger,
    expectation,
    identity,
    is_hermitian,
    kron,
    number_op,
    phonon_op,
    product_ket,
    projector,
    qubit_op,
    sigmam,
    sigmap,
    sigmax,
    sigmaz,
)


class TestKron:
    def test_identity_case(self):
        np.testing.assert_allclose(kron(identity(2), identity(3)), identity(6))

    def test_sigmaz_diagonal_structure(self):
        got = np.diag(kron(sigmaz(), identity(2)))
        np.testing.assert_allclose(got, [1, 1, -1, -1])

    def test_sigmap_annihilation_on_g1(self):
        # oracle: the full 6x6 matrix written out by hand for ncut = 3,
        # basis order (e0, e1, e2, g0, g1, g2)
        s2 = math.sqrt(2.0)
        expected = np.array(
            [
                [0, 0, 0, 0, 1, 0],
                [0, 0, 0, 0, 0, s2],
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
                [0, 0, 0, 0, 0, 0],
            ],
            dtype=complex,
        )
        op = kron(sigmap(), annihilation(3))
        np.testing.assert_allclose(op, expected)
        out = op @ product_ket("g", 1, 3)
        np.testing.assert_allclose(out, product_ket("e", 0, 3), atol=1e-15)

    def test_associativity(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        c = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        left = kron(kron(a, b), c)
        right = kron(a, kron(b, c))
        assert np.abs(left - right).max() < 1e-14


class TestAnnihilation:
    def test_lowers_one(self):
        a = annihilation(2)
        np.testing.assert_allclose(a @ basis_ket(2, 1), basis_ket(2, 0))

    def test_sqrt_n_amplitude(self):
        a = annihilation(4)
        np.testing.assert_allclose(
            a @ basis_ket(4, 3), math.sqrt(3.0) * basis_ket(4, 2)
        )

    def test_truncated_commutator(self):
        a = annihilation(4)
        comm = a @ dagger(a) - dagger(a) @ a
        np.testing.assert_allclose(comm, np.diag([1, 1, 1, 1 - 4]).astype(complex))

    def test_creation_is_adjoint(self):
        np.testing.assert_allclose(creation(5), dagger(annihilation(5)))

    def test_rejects_tiny_dimension(self):
        with pytest.raises(DimensionError):
            annihilation(1)


class TestCoherentKet:
    def test_vacuum(self):
        np.testing.assert_allclose(coherent_ket(0.0, 4), basis_ket(4, 0))

    def test_mean_occupation_by_direct_summation(self):
        # oracle: amplitudes from the closed form with exact factorials
        alpha, ncut = 0.24, 8
        amps = np.array(
            [
                math.exp(-(alpha**2) / 2.0) * alpha**n / math.sqrt(math.factorial(n))
                for n in range(ncut)
            ]
        )
        amps = amps / np.linalg.norm(amps)
        expected_nbar = float(np.sum(np.arange(ncut) * np.abs(amps) ** 2))
        ket = coherent_ket(alpha, ncut)
        nbar = float(np.sum(np.arange(ncut) * np.abs(ket) ** 2))
        assert abs(nbar - expected_nbar) < 1e-12
        assert abs(nbar - 0.0576) < 1e-6

    def test_normalized(self):
        assert abs(np.linalg.norm(coherent_ket(0.5, 16)) - 1.0) < 1e-12

    def test_near_eigenstate_of_annihilation(self):
        alpha, ncut = 0.8, 16
        ket = coherent_ket(alpha, ncut)
        residual = annihilation(ncut) @ ket - alpha * ket
        assert np.linalg.norm(residual) <= 1e-6

    def test_truncation_refusal_carries_hint(self):
        with pytest.raises(TruncationError) as err:
            coherent_ket(2.0, 8)
        assert err.value.required_ncut >= 16


class TestExpectation:
    def test_excited_population(self):
        rho = projector(product_ket("e", 0, 2))
        assert expectation(rho, qubit_op(sigmaz(), 2)) == pytest.approx(1.0)

    def test_traceless_on_mixed_state(self):
        rho = kron(identity(2) / 2.0, projector(basis_ket(3, 0)))
        val = expectation(rho, qubit_op(sigmam(), 3))
        assert abs(val) < 1e-14

    def test_coherent_mean_occupation(self):
        ncut = 8
        rho = kron(projector(basis_ket(2, 1)), projector(coherent_ket(0.24, ncut)))
        val = expectation(rho, phonon_op(number_op(ncut)))
        assert val.real == pytest.approx(0.0576, abs=1e-6)
        assert abs(val.imag) < 1e-14

    def test_real_for_hermitian_pair(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
            h = (m + m.conj().T) / 2.0
            v = rng.normal(size=(6,)) + 1j * rng.normal(size=(6,))
            rho = projector(v / np.linalg.norm(v))
            assert abs(expectation(rho, h).imag) < 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            expectation(identity(4), identity(6))


def test_hermiticity_checker():
    assert is_hermitian(sigmax())
    assert not is_hermitian(sigmap())


def test_product_ket_index_convention():
    # index = q * ncut + n with the excited block first
    ket = product_ket("g", 2, 4)
    assert ket[4 + 2] == 1.0
    ket = product_ket("e", 3, 4)
    assert ket[3] == 1.0
