"""Dense complex tensors over finite alphabets.

Tensors are plain ``numpy`` arrays of dtype ``complex128``; axis labels, where
they matter, are carried by :class:`qfg.graph.FactorGraph`.  Every function
here is pure and never modifies its inputs.

Flattening convention
---------------------
A matrix indexed by variable tuples (rows ``(r1, ..., rp)``, columns
``(c1, ..., cq)``) is stored as a tensor with axes ``(r1, ..., rp, c1, ...,
cq)``.  Flattening puts the row group before the column group, and inside a
group the earlier-listed variable is the most significant digit (row-major).
:func:`group_matrix` and :func:`ungroup_matrix` implement this convention and
every other module relies on it.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError, DomainError


@dataclass(frozen=True)
class Tolerance:
    """Absolute and relative tolerances for floating-point comparisons.

    ``abs_eps`` bounds max-norm differences; when the reference tensor has
    max-norm above one the bound scales with it.  ``rel_eps`` is used where a
    spectrum is involved (eigenvalue signs).
    """

    abs_eps: float = 1e-10
    rel_eps: float = 1e-8

    def __post_init__(self):
        if not (self.abs_eps >= 0 and self.rel_eps >= 0):
            raise ArgumentError(f"tolerances must be nonnegative, got {self}")

    def bound(self, reference_scale: float = 0.0) -> float:
        return self.abs_eps * max(1.0, float(reference_scale))

    @classmethod
    def from_env(cls, var: str = "QFG_TOL") -> "Tolerance":
        """Read ``"abs"`` or ``"abs,rel"`` from an environment variable."""
        raw = os.environ.get(var)
        if not raw:
            return cls()
        parts = [float(p) for p in raw.split(",")]
        if len(parts) == 1:
            return cls(abs_eps=parts[0])
        if len(parts) == 2:
            return cls(abs_eps=parts[0], rel_eps=parts[1])
        raise ArgumentError(f"{var} must be 'abs' or 'abs,rel', got {raw!r}")


DEFAULT_TOL = Tolerance()


def as_tensor(data, shape: Sequence[int] | None = None) -> np.ndarray:
    """Return ``data`` as a finite complex128 array, optionally reshaped.

    Raises:
        DimensionError: if ``shape`` is given and does not match the data
            length, or an axis has size zero.
        DomainError: if any entry is NaN or infinite.
    """
    arr = np.asarray(data, dtype=np.complex128)
    if shape is not None:
        shape = tuple(int(s) for s in shape)
        if int(np.prod(shape, dtype=np.int64)) != arr.size:
            raise DimensionError(
                f"data length {arr.size} does not match shape {shape}"
            )
        arr = arr.reshape(shape)
    if any(s < 1 for s in arr.shape):
        raise DimensionError(f"axis sizes must be >= 1, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("tensor contains NaN or infinite entries")
    return arr


def _check_matrix(m: np.ndarray, square: bool = True) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got {m.ndim} axes")
    if square and m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    return m


def contract(a: np.ndarray, b: np.ndarray, pairs: Iterable[tuple[int, int]]) -> np.ndarray:
    """Sum the product of ``a`` and ``b`` over paired axes.

    The result carries the unpaired axes of ``a`` followed by the unpaired
    axes of ``b``.  ``contract(A, B, [(1, 0)])`` is the matrix product.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    pairs = [(int(i), int(j)) for i, j in pairs]
    axes_a = [i for i, _ in pairs]
    axes_b = [j for _, j in pairs]
    if len(set(axes_a)) != len(axes_a) or len(set(axes_b)) != len(axes_b):
        raise ArgumentError(f"repeated axis in contraction pairs {pairs}")
    for i, j in pairs:
        if not (0 <= i < a.ndim and 0 <= j < b.ndim):
            raise ArgumentError(f"axis pair {(i, j)} out of range")
        if a.shape[i] != b.shape[j]:
            raise DimensionError(
                f"cannot pair axis {i} (size {a.shape[i]}) with axis {j} "
                f"(size {b.shape[j]})"
            )
    return np.tensordot(a, b, axes=(axes_a, axes_b))


def sum_out(t: np.ndarray, axes: Iterable[int]) -> np.ndarray:
    """Marginalize ``t`` over ``axes``; summing every axis gives a 0-d array."""
    t = np.asarray(t, dtype=np.complex128)
    axes = [int(x) for x in axes]
    if len(set(axes)) != len(axes):
        raise ArgumentError(f"repeated axis in {axes}")
    if any(not 0 <= x < t.ndim for x in axes):
        raise ArgumentError(f"axes {axes} out of range for rank {t.ndim}")
    return np.sum(t, axis=tuple(axes))


def trace(t: np.ndarray) -> complex:
    m = _check_matrix(t)
    return complex(np.trace(m))


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor (Kronecker) product.

    For two matrices the result has axes ``(rows_a, rows_b, cols_a, cols_b)``,
    so that :func:`group_matrix` with two row axes yields ``np.kron(a, b)``.
    For any other ranks the axes of ``a`` are followed by those of ``b``.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    outer = np.multiply.outer(a, b)
    if a.ndim == 2 and b.ndim == 2:
        return outer.transpose(0, 2, 1, 3)
    return outer


def group_matrix(t: np.ndarray, n_row_axes: int) -> np.ndarray:
    """Flatten a tensor into a matrix: the first ``n_row_axes`` axes index rows."""
    t = np.asarray(t)
    if not 0 <= n_row_axes <= t.ndim:
        raise ArgumentError(f"n_row_axes={n_row_axes} invalid for rank {t.ndim}")
    rows = int(np.prod(t.shape[:n_row_axes], dtype=np.int64))
    return t.reshape(rows, -1)


def ungroup_matrix(m: np.ndarray, row_sizes: Sequence[int], col_sizes: Sequence[int]) -> np.ndarray:
    """Inverse of :func:`group_matrix`."""
    m = _check_matrix(m, square=False)
    shape = tuple(row_sizes) + tuple(col_sizes)
    if int(np.prod(row_sizes)) != m.shape[0] or int(np.prod(col_sizes)) != m.shape[1]:
        raise DimensionError(f"matrix {m.shape} cannot be split into {shape}")
    return m.reshape(shape)


def conj(t: np.ndarray) -> np.ndarray:
    return np.conj(np.asarray(t, dtype=np.complex128))


def conj_transpose(m: np.ndarray) -> np.ndarray:
    m = _check_matrix(np.asarray(m, dtype=np.complex128), square=False)
    return m.conj().T


def max_abs(t) -> float:
    t = np.asarray(t)
    return float(np.max(np.abs(t))) if t.size else 0.0


def allclose(a, b, tol: Tolerance = DEFAULT_TOL) -> bool:
    """Max-norm comparison; the bound scales with ``b`` once ``|b| > 1``."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return max_abs(a - b) <= tol.bound(max_abs(b))


def is_unitary(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = _check_matrix(np.asarray(m, dtype=np.complex128))
    return max_abs(m.conj().T @ m - np.eye(m.shape[0])) <= tol.abs_eps


def is_hermitian(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = _check_matrix(np.asarray(m, dtype=np.complex128))
    return max_abs(m - m.conj().T) <= tol.bound(max_abs(m))


def is_psd(m, tol: Tolerance = DEFAULT_TOL) -> bool:
    m = _check_matrix(np.asarray(m, dtype=np.complex128))
    if not is_hermitian(m, tol):
        return False
    herm = (m + m.conj().T) / 2
    lam = np.linalg.eigvalsh(herm)
    return bool(lam[0] >= -(tol.abs_eps + tol.rel_eps * max_abs(lam)))


def _projective_normal_form(t: np.ndarray, tol: Tolerance) -> np.ndarray | None:
    norm = np.linalg.norm(t)
    if norm <= tol.abs_eps:
        return None
    u = (t / norm).ravel()
    idx = int(np.argmax(np.abs(u) > tol.abs_eps))
    phase = u[idx] / abs(u[idx])
    return u / phase


def projective_equal(a, b, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff ``b == c * a`` for some complex scalar ``c``.

    The all-zero tensor is projectively equal only to another all-zero
    tensor.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    na = _projective_normal_form(a, tol)
    nb = _projective_normal_form(b, tol)
    if na is None or nb is None:
        return na is None and nb is None
    return max_abs(na - nb) <= tol.abs_eps


def spectral_decompose(m, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix as ``U @ diag(lam) @ U^H``.

    Returns:
        ``(U, lam)`` with ``lam`` real and sorted in descending order and the
        columns of ``U`` the matching orthonormal eigenvectors.

    Raises:
        DomainError: if ``m`` is not Hermitian within ``tol``.
    """
    m = _check_matrix(np.asarray(m, dtype=np.complex128))
    if not is_hermitian(m, tol):
        raise DomainError("spectral_decompose requires a Hermitian matrix")
    lam, u = np.linalg.eigh((m + m.conj().T) / 2)
    order = np.argsort(lam)[::-1]
    return u[:, order], lam[order]
