import itertools

import numpy as np
import pytest

from helpers import random_unitary
from qfg.errors import ArgumentError, DomainError
from qfg.gates import (
    cnot,
    controlled,
    dft,
    equality_tensor,
    gate,
    hadamard,
    mod_add_tensor,
    one_hot,
    pauli,
    swap,
)
from qfg.tensor import is_unitary, ungroup_matrix

RNG = np.random.default_rng(7)


def test_equality_degree_two_is_identity():
    assert np.array_equal(equality_tensor(2, 3), np.eye(3))


def test_equality_half_edge_dropped():
    assert np.array_equal(equality_tensor(3, 2).sum(axis=2), np.eye(2))


def test_two_equality_nodes_merge():
    e = equality_tensor(3, 3)
    merged = np.einsum("abk,kcd->abcd", e, e)
    assert np.array_equal(merged, equality_tensor(4, 3))


def test_equality_bad_degree():
    with pytest.raises(ArgumentError):
        equality_tensor(0, 2)


def test_parity_check_entries():
    f = mod_add_tensor(2)
    assert f[0, 1, 1] == 1
    assert f[1, 1, 1] == 0
    assert mod_add_tensor(3)[1, 1, 1] == 1


@pytest.mark.parametrize("m", [2, 3, 5])
def test_mod_add_unique_completion_and_symmetry(m):
    f = mod_add_tensor(m)
    assert np.all(f.sum(axis=2) == 1)
    for perm in itertools.permutations(range(3)):
        assert np.array_equal(f, f.transpose(perm))


def test_mod_add_bad_size():
    with pytest.raises(ArgumentError):
        mod_add_tensor(1)


def test_one_hot():
    assert np.array_equal(one_hot(3, 2), [0, 0, 1])
    with pytest.raises(ArgumentError):
        one_hot(3, 3)


def test_pauli_entries_and_squares():
    assert np.array_equal(pauli(2), [[0, -1j], [1j, 0]])
    for k in range(4):
        assert np.max(np.abs(pauli(k) @ pauli(k) - pauli(0))) <= 1e-12
    with pytest.raises(ArgumentError):
        pauli(4)


def test_hadamard_identities():
    h = hadamard()
    s1, s2, s3 = pauli(1), pauli(2), pauli(3)
    assert np.max(np.abs(h @ s1 @ h - s3)) <= 1e-15
    assert np.max(np.abs(h @ s1 - s3 @ h)) <= 1e-15
    assert np.max(np.abs(h @ s2 + s2 @ h)) <= 1e-15
    assert is_unitary(h)


def test_cnot_and_swap():
    c, s = cnot(), swap()
    assert np.max(np.abs(c @ c - np.eye(4))) <= 1e-12
    assert np.max(np.abs(s @ s - np.eye(4))) <= 1e-12
    # basis (1,1) -> (1,0)
    assert c[2, 3] == 1 and c[3, 3] == 0
    # swap (0,1) -> (1,0)
    assert s[2, 1] == 1


def test_double_cnot_network_is_equality_pair():
    t = ungroup_matrix(cnot() @ cnot(), (2, 2), (2, 2))
    ref = np.einsum("ac,bd->abcd", equality_tensor(2, 2), equality_tensor(2, 2))
    assert np.max(np.abs(t - ref)) <= 1e-12


def test_controlled():
    assert np.array_equal(controlled(pauli(1)), cnot())
    assert np.array_equal(controlled(np.eye(3)), np.eye(6))
    for _ in range(10):
        assert is_unitary(controlled(random_unitary(3, RNG)))
    with pytest.raises(DomainError):
        controlled(np.ones((2, 2)))


def test_all_unitary_gates():
    for g in (pauli(0), pauli(1), pauli(2), pauli(3), hadamard(), cnot(), swap(), dft(5)):
        assert is_unitary(g)


def test_gate_lookup():
    assert np.array_equal(gate("cnot", (2, 2, 2, 2)), cnot().reshape(2, 2, 2, 2))
    assert np.array_equal(gate("equality", (3, 3, 3)), equality_tensor(3, 3))
    assert np.array_equal(gate("identity", (4, 4)), np.eye(4))
    assert np.array_equal(gate("dft3"), dft(3))
    with pytest.raises(ArgumentError):
        gate("toffoli")
    with pytest.raises(ArgumentError):
        gate("h", (3, 3))
