import itertools

import numpy as np
import pytest

from helpers import random_complex, random_unitary
from qfg.errors import DimensionError, DomainError
from qfg.gates import hadamard, pauli
from qfg.graph import partition_sum
from qfg.qec import (
    ErrorSpec,
    effective_channel_check,
    effective_channel_direct,
    from_pauli_coeffs,
    is_impossible,
    pauli_coeffs,
    render_pauli_symbolic,
    rep3_compressed_reference,
    rep3_hadamard_reference,
    rep3_reference_channel,
    rep3_symbolic_table,
    rep3_syndrome_table,
    shor_channel_table,
    shor_effective_channel,
    shor_graph,
    shor_predicted_channel,
    shor_recover,
    shor_symbolic_table,
    shor_syndrome_distribution,
)
from qfg.tensor import Tolerance, projective_equal

RNG = np.random.default_rng(31)
SYNDROMES = list(itertools.product((0, 1), repeat=2))
TOL9 = Tolerance(abs_eps=1e-9)


def test_pauli_coefficients():
    assert np.allclose(pauli_coeffs(pauli(1)), [0, 1, 0, 0])
    assert np.allclose(pauli_coeffs(hadamard() * np.sqrt(2)), [0, 1, 0, 1])
    a = random_complex((2, 2), RNG)
    assert np.max(np.abs(from_pauli_coeffs(pauli_coeffs(a)) - a)) <= 1e-14
    with pytest.raises(DimensionError):
        pauli_coeffs(np.eye(3))


def test_error_spec_rejects_zero():
    with pytest.raises(DomainError):
        ErrorSpec(1, np.zeros((2, 2)))


def test_direct_path_channel():
    assert np.allclose(effective_channel_direct(np.eye(2), 0), np.eye(2))
    assert np.allclose(effective_channel_direct(np.eye(2), 1), 0)
    assert np.allclose(effective_channel_direct(pauli(1), 0), 0)
    assert np.allclose(effective_channel_direct(pauli(1), 1), pauli(1))
    for _ in range(10):
        w = random_complex(4, RNG)
        a = from_pauli_coeffs(w)
        ref0 = w[0] * pauli(0) + w[3] * pauli(3)
        ref1 = w[1] * pauli(1) + w[2] * pauli(2)
        assert np.max(np.abs(effective_channel_direct(a, 0) - ref0)) <= 1e-10
        assert np.max(np.abs(effective_channel_direct(a, 1) - ref1)) <= 1e-10


def test_check_path_channel():
    assert np.allclose(effective_channel_check(pauli(1), 1), pauli(0))
    assert np.allclose(effective_channel_check(pauli(2), 1), 1j * pauli(3))
    for _ in range(10):
        w = random_complex(4, RNG)
        a = from_pauli_coeffs(w)
        assert np.max(np.abs(effective_channel_check(a, 0) - effective_channel_direct(a, 0))) <= 1e-10
        ref1 = pauli(1) @ effective_channel_direct(a, 1)
        assert np.max(np.abs(effective_channel_check(a, 1) - ref1)) <= 1e-10


def test_rep3_examples():
    w = random_complex(4, RNG)
    t1 = rep3_syndrome_table(ErrorSpec.from_coeffs(1, w))
    assert projective_equal(t1[1, 1], w[1] * pauli(1) + w[2] * pauli(2))
    t2 = rep3_syndrome_table(ErrorSpec.from_coeffs(2, w))
    assert projective_equal(t2[0, 1], w[1] * pauli(0) + 1j * w[2] * pauli(3))
    t3 = rep3_syndrome_table(ErrorSpec.from_coeffs(3, w))
    assert np.max(np.abs(t3[0, 1])) <= 1e-12


def test_rep3_full_table_and_compression():
    for _ in range(10):
        w = random_complex(4, RNG)
        for loc in (1, 2, 3):
            err = ErrorSpec.from_coeffs(loc, w)
            table = rep3_syndrome_table(err)
            for s in SYNDROMES:
                ref = rep3_reference_channel(w, s, loc)
                if np.linalg.norm(ref) == 0:
                    assert is_impossible(table[s], err)
                else:
                    assert projective_equal(table[s], ref)
                    assert projective_equal(table[s], rep3_compressed_reference(w, s))


def test_rep3_hadamard_wrapped():
    w = random_complex(4, RNG)
    for loc in (1, 2, 3):
        table = rep3_syndrome_table(ErrorSpec.from_coeffs(loc, w), hadamard_wrapped=True)
        for s in SYNDROMES:
            if not is_impossible(table[s], ErrorSpec.from_coeffs(loc, w)):
                assert projective_equal(table[s], rep3_hadamard_reference(w, s))


def test_rep3_symbolic_rendering():
    coef = rep3_symbolic_table(1)
    assert render_pauli_symbolic(coef[1, 1]) == "w1 σ1 + w2 σ2"
    assert render_pauli_symbolic(coef[0, 1]) == "impossible"
    assert render_pauli_symbolic(rep3_symbolic_table(2)[0, 1]) == "w1 σ0 + i w2 σ3"


def test_shor_identity_error():
    err = ErrorSpec(4, np.eye(2))
    table = shor_channel_table(err)
    assert projective_equal(table[(0,) * 8], np.eye(2))
    rest = np.delete(table.reshape(256, 2, 2), 0, axis=0)
    assert np.max(np.abs(rest)) <= 1e-12
    p = shor_syndrome_distribution(err, np.eye(2) / 2).ravel()
    assert abs(p[0] - 1) <= 1e-12


def test_shor_bit_flip_inner_syndrome():
    p = shor_syndrome_distribution(ErrorSpec(1, pauli(1)), np.eye(2) / 2)
    support = np.argwhere(p > 1e-12)
    assert len(support) == 1
    assert tuple(support[0][:2]) == (1, 1)


def test_shor_graph_partition_sum():
    for _ in range(3):
        u = random_unitary(2, RNG)
        a = random_complex((2, 2), RNG)
        rho = a @ a.conj().T
        rho /= np.trace(rho)
        g, _ = shor_graph(ErrorSpec(int(RNG.integers(1, 10)), u), rho)
        assert abs(partition_sum(g) - 1) <= 1e-9


def test_shor_syndromes_sum_proportional_to_norm():
    a = random_complex((2, 2), RNG)
    err = ErrorSpec(6, a)
    total = shor_syndrome_distribution(err, np.eye(2) / 2).sum()
    assert abs(total - 0.5 * np.linalg.norm(a) ** 2) <= 1e-9


def test_shor_channel_matches_prediction():
    for loc in range(1, 10):
        err = ErrorSpec(loc, random_complex((2, 2), RNG))
        table = shor_channel_table(err)
        for s in itertools.product((0, 1), repeat=8):
            ref = shor_predicted_channel(err, s)
            got = table[s]
            if np.linalg.norm(ref) == 0:
                assert is_impossible(got, err)
            else:
                assert projective_equal(got, ref, TOL9)
                # a scalar multiple of one Pauli matrix
                assert np.count_nonzero(np.abs(pauli_coeffs(got)) > 1e-9) == 1


def test_shor_single_syndrome_contraction():
    err = ErrorSpec(5, pauli(2))
    s = (0, 0, 1, 0, 0, 0, 0, 1)
    assert projective_equal(shor_effective_channel(err, s), shor_channel_table(err)[s])


def test_shor_symbolic_table_outer_rows():
    coef = shor_symbolic_table(1)
    assert coef
    for s, c in coef.items():
        assert s[2:6] == (0, 0, 0, 0)


@pytest.mark.parametrize(
    "loc,a",
    [(5, pauli(1)), (2, pauli(3)), (7, 0.6 * pauli(0) + 0.8j * pauli(2))],
)
def test_shor_recover_examples(loc, a):
    rep = shor_recover(ErrorSpec(loc, a), seed=loc)
    assert abs(rep.fidelity - 1) <= 1e-9


def test_shor_recover_impossible_syndrome():
    with pytest.raises(DomainError):
        shor_recover(ErrorSpec(1, np.eye(2)), syndrome=(1,) * 8, seed=0)
