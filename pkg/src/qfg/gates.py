"""Canonical factors and quantum gates.

All multi-qubit gates follow the flattening convention of :mod:`qfg.tensor`:
rows ``(a, b)`` then columns ``(a, b)``, first-listed wire most significant.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError, DomainError
from .tensor import DEFAULT_TOL, Tolerance, group_matrix, is_unitary

_SQRT_HALF = 1.0 / np.sqrt(2.0)


def equality_tensor(degree: int, size: int) -> np.ndarray:
    """Indicator of ``x1 == x2 == ... == xn``; degree 2 is the identity matrix."""
    if degree < 1:
        raise ArgumentError(f"equality degree must be >= 1, got {degree}")
    t = np.zeros((size,) * degree, dtype=np.complex128)
    for x in range(size):
        t[(x,) * degree] = 1.0
    return t


def mod_add_tensor(size: int) -> np.ndarray:
    """Indicator of ``(x1 + x2 + x3) mod size == 0``.

    For ``size == 2`` this is the parity check "x1 + x2 + x3 is even".
    """
    if size < 2:
        raise ArgumentError(f"mod-M adder needs M >= 2, got {size}")
    idx = np.arange(size)
    total = idx[:, None, None] + idx[None, :, None] + idx[None, None, :]
    return (total % size == 0).astype(np.complex128)


def one_hot(size: int, value: int) -> np.ndarray:
    if not 0 <= value < size:
        raise ArgumentError(f"value {value} out of range for size {size}")
    v = np.zeros(size, dtype=np.complex128)
    v[value] = 1.0
    return v


_PAULI = (
    np.array([[1, 0], [0, 1]], dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)


def pauli(k: int) -> np.ndarray:
    """Pauli matrix sigma_k, with sigma_0 the identity."""
    if k not in (0, 1, 2, 3):
        raise ArgumentError(f"Pauli index must be 0..3, got {k}")
    return _PAULI[k].copy()


def hadamard() -> np.ndarray:
    return _SQRT_HALF * np.array([[1, 1], [1, -1]], dtype=np.complex128)


def dft(size: int) -> np.ndarray:
    """Unitary discrete Fourier matrix ``exp(2 pi i jk / M) / sqrt(M)``."""
    j = np.arange(size)
    return np.exp(2j * np.pi * np.outer(j, j) / size) / np.sqrt(size)


def cnot() -> np.ndarray:
    """Controlled-NOT on (control, target), as a 4x4 matrix.

    Built by contracting the equality/parity network: the control wire runs
    through a degree-3 equality node whose branch feeds a parity check on the
    target wire.
    """
    eq = equality_tensor(3, 2)  # (c_in, c_out, branch)
    xor = mod_add_tensor(2)  # (t_in, branch, t_out)
    # tensor axes: (c_out, t_out, c_in, t_in)
    t = np.einsum("abk,ikj->bjai", eq, xor)
    return group_matrix(t, 2)


def swap() -> np.ndarray:
    """Swap of two qubits: crossed wires, i.e. two identity factors."""
    ident = equality_tensor(2, 2)
    # out_a = in_b, out_b = in_a; axes (a_out, b_out, a_in, b_in)
    t = np.einsum("ad,bc->abcd", ident, ident)
    return group_matrix(t, 2)


def controlled(u, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Block-diagonal ``diag(I, U)``: apply ``U`` when the control is 1."""
    u = np.asarray(u, dtype=np.complex128)
    if not is_unitary(u, tol):
        raise DomainError("controlled() requires a unitary matrix")
    m = u.shape[0]
    out = np.zeros((2 * m, 2 * m), dtype=np.complex128)
    out[:m, :m] = np.eye(m)
    out[m:, m:] = u
    return out


def gate(name: str, sizes: tuple[int, ...] = ()) -> np.ndarray:
    """Look up a gate or constraint factor by name.

    ``sizes`` are the alphabet sizes of the variables the factor will be
    attached to; they select the degree and alphabet of ``equality``,
    ``mod_add`` and ``identity``.  Fixed-size gates are reshaped to ``sizes``
    when given.
    """
    key = name.lower()
    if key in ("equality", "eq", "="):
        if not sizes or len(set(sizes)) != 1:
            raise ArgumentError("equality needs variables of one common size")
        return equality_tensor(len(sizes), sizes[0])
    if key in ("mod_add", "xor", "oplus"):
        if len(sizes) != 3 or len(set(sizes)) != 1:
            raise ArgumentError("mod_add needs three variables of one common size")
        return mod_add_tensor(sizes[0])
    if key in ("identity", "i"):
        if len(sizes) != 2 or sizes[0] != sizes[1]:
            raise ArgumentError("identity needs two variables of equal size")
        return np.eye(sizes[0], dtype=np.complex128)
    fixed = {
        "sigma0": lambda: pauli(0),
        "sigma1": lambda: pauli(1),
        "sigma2": lambda: pauli(2),
        "sigma3": lambda: pauli(3),
        "x": lambda: pauli(1),
        "y": lambda: pauli(2),
        "z": lambda: pauli(3),
        "h": hadamard,
        "hadamard": hadamard,
        "cnot": cnot,
        "swap": swap,
    }
    if key.startswith("pauli") and key[5:].isdigit():
        mat = pauli(int(key[5:]))
    elif key.startswith("dft") and key[3:].isdigit():
        mat = dft(int(key[3:]))
    elif key in fixed:
        mat = fixed[key]()
    else:
        raise ArgumentError(f"unknown gate {name!r}")
    if sizes:
        if int(np.prod(sizes)) != mat.size:
            raise ArgumentError(f"gate {name!r} does not fit variable sizes {sizes}")
        return mat.reshape(sizes)
    return mat


GATE_NAMES = (
    "equality", "mod_add", "identity", "sigma0", "sigma1", "sigma2", "sigma3",
    "pauli0", "pauli1", "pauli2", "pauli3", "x", "y", "z", "h", "hadamard",
    "cnot", "swap", "dft<M>",
)
