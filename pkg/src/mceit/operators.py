"""Dense operator algebra on the qubit (x) Fock product space.

Conventions, fixed once for the whole package:

* qubit basis order is (|e>, |g>), so ``sigmaz() == diag(+1, -1)`` realises
  sigma_z = |e><e| - |g><g|,
* tensor products put the qubit factor first; the product-space basis index
  is ``q * ncut + n`` with q = 0 for |e>, q = 1 for |g> and n the phonon
  number,
* all matrices are dense complex128 arrays.  System dimensions stay small
  enough (<= a few hundred) that dense storage keeps every oracle comparison
  a plain matrix identity.
"""

import numpy as np

from .errors import DimensionError, TruncationError

# type aliases; operators and kets are plain ndarrays by convention
Operator = np.ndarray
Ket = np.ndarray

QUBIT_EXCITED = 0
QUBIT_GROUND = 1


def identity(dim: int) -> Operator:
    if dim < 1:
        raise DimensionError(f"identity dimension must be >= 1, got {dim}")
    return np.eye(dim, dtype=complex)


def sigmaz() -> Operator:
    return np.diag([1.0 + 0j, -1.0 + 0j])


def sigmax() -> Operator:
    return np.array([[0, 1], [1, 0]], dtype=complex)


def sigmap() -> Operator:
    """Raising operator |e><g|."""
    return np.array([[0, 1], [0, 0]], dtype=complex)


def sigmam() -> Operator:
    """Lowering operator |g><e|."""
    return np.array([[0, 0], [1, 0]], dtype=complex)


def annihilation(ncut: int) -> Operator:
    """Phonon annihilation operator on a Fock space truncated at ncut levels."""
    if ncut < 2:
        raise DimensionError(f"Fock truncation must be >= 2, got {ncut}")
    a = np.zeros((ncut, ncut), dtype=complex)
    n = np.arange(1, ncut)
    a[n - 1, n] = np.sqrt(n)
    return a


def creation(ncut: int) -> Operator:
    return annihilation(ncut).conj().T


def number_op(ncut: int) -> Operator:
    if ncut < 2:
        raise DimensionError(f"Fock truncation must be >= 2, got {ncut}")
    return np.diag(np.arange(ncut, dtype=float)).astype(complex)


def kron(a: Operator, b: Operator) -> Operator:
    """Kronecker product with the first (qubit) factor outermost."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def qubit_op(op2: Operator, ncut: int) -> Operator:
    """Promote a 2x2 qubit operator to the product space."""
    op2 = np.asarray(op2)
    if op2.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 qubit operator, got {op2.shape}")
    return kron(op2, identity(ncut))


def phonon_op(opn: Operator) -> Operator:
    """Promote a phonon operator to the product space."""
    return kron(identity(2), opn)


def dagger(op: Operator) -> Operator:
    return np.asarray(op).conj().T


def basis_ket(dim: int, index: int) -> Ket:
    if not 0 <= index < dim:
        raise DimensionError(f"basis index {index} outside dimension {dim}")
    ket = np.zeros(dim, dtype=complex)
    ket[index] = 1.0
    return ket


def product_ket(qubit: str, n: int, ncut: int) -> Ket:
    """Basis ket |qubit, n> on the product space; qubit is 'e' or 'g'."""
    if qubit not in ("e", "g"):
        raise DimensionError(f"qubit label must be 'e' or 'g', got {qubit!r}")
    q = QUBIT_EXCITED if qubit == "e" else QUBIT_GROUND
    return basis_ket(2 * ncut, q * ncut + n)


def coherent_ket(alpha: complex, ncut: int) -> Ket:
    """Coherent state |alpha> on the truncated Fock space, renormalized.

    Amplitudes follow exp(-|alpha|^2/2) alpha^n / sqrt(n!), evaluated by a
    running product so no factorial is ever formed explicitly.  Refuses
    amplitudes whose photon number would spill past the truncation.
    """
    if ncut < 2:
        raise DimensionError(f"Fock truncation must be >= 2, got {ncut}")
    nbar = abs(alpha) ** 2
    if nbar > ncut / 4.0:
        required = int(np.ceil(4.0 * nbar))
        raise TruncationError(
            f"|alpha|^2 = {nbar:.4g} exceeds ncut/4 = {ncut / 4.0:.4g}; "
            f"use ncut >= {required}",
            required_ncut=required,
        )
    amps = np.empty(ncut, dtype=complex)
    amps[0] = 1.0
    for n in range(1, ncut):
        amps[n] = amps[n - 1] * alpha / np.sqrt(n)
    amps *= np.exp(-nbar / 2.0)
    amps /= np.linalg.norm(amps)
    return amps


def projector(ket: Ket) -> Operator:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def expectation(rho: Operator, op: Operator) -> complex:
    """trace(rho @ op) without forming the product matrix."""
    rho = np.asarray(rho)
    op = np.asarray(op)
    if rho.shape != op.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(
            f"shape mismatch in expectation: rho {rho.shape}, op {op.shape}"
        )
    return complex(np.einsum("ij,ji->", rho, op))


def is_hermitian(op: Operator, tol: float = 1e-12) -> bool:
    op = np.asarray(op)
    scale = max(1.0, float(np.abs(op).max()))
    return bool(np.abs(op - op.conj().T).max() <= tol * scale)


def is_unitary(op: Operator, tol: float = 1e-12) -> bool:
    op = np.asarray(op)
    eye = np.eye(op.shape[0])
    return bool(np.abs(op.conj().T @ op - eye).max() <= tol)
