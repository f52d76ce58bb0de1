"""Acceptance suite: one printed pass/fail line per criterion.

Run directly with ``python3 tests/test_acceptance.py`` or through pytest.
"""

import itertools
import time

import numpy as np
import pytest

from helpers import (
    random_density,
    random_family,
    random_graph,
    random_probability,
    random_timeline,
    random_unitary,
)
from qfg.gates import cnot, dft, hadamard, pauli, swap
from qfg.graph import FactorGraph, brute_force_exterior, exterior_function, internal_variables, partition_sum
from qfg.montecarlo import augment_conjugate, estimate_Z, full_table, sample
from qfg.qec import (
    ErrorSpec,
    is_impossible,
    rep3_reference_channel,
    rep3_syndrome_table,
    shor_effective_channel,
    shor_predicted_channel,
    shor_recover,
)
from qfg.quantum import (
    KnownValue,
    Measure,
    QuantumTimeline,
    Unitary,
    build_graph,
    check_density,
    collapse,
    conditional_next,
    density_matrix_before,
    family_superoperator,
    interaction_measurement_equivalence,
    interaction_superoperator,
    interaction_to_kraus,
    joint_distribution,
    kraus_apply,
    projection_family,
    replay_joint,
)
from qfg.tensor import Tolerance, projective_equal

TOL9 = Tolerance(abs_eps=1e-9, rel_eps=1e-9)


@pytest.fixture
def report(capsys):
    def _report(n, title, ok, detail=""):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] AC{n} {title}" + (f": {detail}" if detail else ""))
        assert ok, f"AC{n} {title}: {detail}"

    return _report


def _dev(a, b):
    """Max-norm deviation, relative once the reference exceeds 1."""
    return float(np.max(np.abs(a - b), initial=0.0) / max(1.0, np.max(np.abs(b), initial=0.0)))


def _timelines(n, seed):
    rng = np.random.default_rng(seed)
    return [random_timeline(rng, max_dim=4, max_meas=3) for _ in range(n)]


def test_ac1_closing_the_box(report):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        g = random_graph(rng, max_vars=8, max_size=4, max_factors=8)
        internal = internal_variables(g)
        a = exterior_function(g)
        b = exterior_function(g, order=list(rng.permutation(internal)))
        ref = brute_force_exterior(g)
        worst = max(worst, _dev(a, ref), _dev(b, ref), _dev(a, b))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-10 and elapsed < 30
    report(1, "closing the box", ok, f"500 graphs, max deviation {worst:.2e}, {elapsed:.1f} s")


def test_ac2_born_rule(report):
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        m = int(rng.integers(2, 9))
        x = int(rng.integers(m))
        u, b = random_unitary(m, rng), random_unitary(m, rng)
        t = QuantumTimeline(m, KnownValue(x), [Unitary(u), Measure(projection_family(b))])
        ref = np.abs(b.conj().T @ u[:, x]) ** 2
        worst = max(worst, _dev(joint_distribution(t), ref))
    report(2, "Born rule", worst <= 1e-10, f"100 triples, max deviation {worst:.2e}")


def test_ac3_normalization_and_future_blindness(report):
    rng = np.random.default_rng(103)
    worst_sum = worst_future = 0.0
    for t in _timelines(100, 3):
        table = joint_distribution(t)
        worst_sum = max(worst_sum, abs(table.sum() - 1))
        extra = Measure(random_family(t.dimension, rng))
        t2 = QuantumTimeline(t.dimension, t.initial, list(t.steps) + [extra])
        worst_future = max(worst_future, _dev(joint_distribution(t2).sum(axis=-1), table))
    ok = worst_sum <= 1e-10 and worst_future <= 1e-10
    report(3, "normalization and future blindness", ok,
           f"100 timelines, |sum-1| {worst_sum:.2e}, future change {worst_future:.2e}")


def test_ac4_measurement_calculus(report):
    worst_replay = worst_cond = 0.0
    states_ok = True
    n_states = 0
    for t in _timelines(100, 3):
        table = joint_distribution(t)
        worst_replay = max(worst_replay, _dev(replay_joint(t), table))
        # follow the most likely branch, checking each conditional and post-measurement state
        prefix = []
        for k, s in enumerate(t.measurements, start=1):
            marg = table.reshape(table.shape[: k] + (-1,)).sum(axis=-1)[tuple(prefix)]
            cond = conditional_next(t, prefix)
            worst_cond = max(worst_cond, _dev(cond, marg / marg.sum()))
            rho, _ = density_matrix_before(t, k, prefix)
            y = int(np.argmax(cond))
            _, post = collapse(rho, s.family, y)
            try:
                check_density(post, TOL9)
                n_states += 1
            except ValueError:
                states_ok = False
            prefix.append(y)
    ok = worst_replay <= 1e-9 and worst_cond <= 1e-9 and states_ok
    report(4, "measurement calculus", ok,
           f"replay {worst_replay:.2e}, conditionals {worst_cond:.2e}, {n_states} post-measurement states valid")


def test_ac5_repetition_tables(report):
    rng = np.random.default_rng(105)
    bad = cells = 0
    for _ in range(50):
        w = rng.normal(size=4) + 1j * rng.normal(size=4)
        for loc in (1, 2, 3):
            err = ErrorSpec.from_coeffs(loc, w)
            table = rep3_syndrome_table(err)
            for s in itertools.product((0, 1), repeat=2):
                ref = rep3_reference_channel(w, s, loc)
                if np.linalg.norm(ref) == 0:
                    good = is_impossible(table[s], err)
                else:
                    good = projective_equal(table[s], ref)
                bad += not good
                cells += 1
    report(5, "repetition-code syndrome tables", bad == 0, f"{cells} cells, {bad} mismatches")


def test_ac6_shor_code(report):
    rng = np.random.default_rng(106)
    start = time.perf_counter()
    mismatches = 0
    worst_fid = 0.0
    for i in range(200):
        loc = int(rng.integers(1, 10))
        a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
        err = ErrorSpec(loc, a)
        rep = shor_recover(err, psi=psi, seed=i)
        got = shor_effective_channel(err, rep.syndrome)
        mismatches += not projective_equal(got, shor_predicted_channel(err, rep.syndrome), TOL9)
        worst_fid = max(worst_fid, abs(rep.fidelity - 1))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and worst_fid <= 1e-9 and elapsed < 120
    report(6, "Shor code channels and recovery", ok,
           f"200 cases, {mismatches} mismatches, |fidelity-1| {worst_fid:.2e}, {elapsed:.1f} s")


def test_ac7_interaction_equivalence(report):
    rng = np.random.default_rng(107)
    results = []
    for m in (2, 3, 5):
        for basis in (np.eye(m), dft(m), random_unitary(m, rng)):
            results.append(interaction_measurement_equivalence(m, basis))
    negatives = [interaction_measurement_equivalence(m, dft(m), corrupt_adder=True) for m in (2, 3, 5)]
    ok = all(results) and not any(negatives)
    report(7, "interaction equivalence", ok,
           f"{sum(results)}/{len(results)} equivalent, {sum(negatives)}/3 corrupted adders accepted")


def test_ac8_kraus_choi(report):
    rng = np.random.default_rng(108)
    worst_s = worst_tr = 0.0
    for _ in range(50):
        v = random_unitary(4, rng)
        prior = random_probability(2, rng)
        fam = interaction_to_kraus(v, prior)
        worst_s = max(worst_s, _dev(family_superoperator(fam), interaction_superoperator(v, prior)))
        completeness = np.einsum("yji,yjk->ik", fam.matrices.conj(), fam.matrices)
        worst_tr = max(worst_tr, _dev(completeness, np.eye(2)))
        rho = random_density(2, rng)
        worst_tr = max(worst_tr, abs(np.trace(kraus_apply(rho, fam)) - 1))
    ok = worst_s <= 1e-9 and worst_tr <= 1e-9
    report(8, "Kraus from Choi matrix", ok, f"50 unitaries, superoperator {worst_s:.2e}, trace {worst_tr:.2e}")


def _mc_graphs():
    rng = np.random.default_rng(109)
    graphs = []
    while len(graphs) < 9:
        g = random_graph(rng, max_vars=6, max_size=3, max_factors=5, complex_values=len(graphs) % 2 == 1)
        if len(full_table(g)[1]) >= 2:
            graphs.append((g, None))
    t = QuantumTimeline(3, KnownValue(1), [
        Unitary(random_unitary(3, rng)), Measure(projection_family(random_unitary(3, rng)))])
    g, reg = build_graph(t)
    graphs.append((g, reg.mirror_pairs))
    return graphs


def _mc_run(g, pairs, seed):
    if pairs is None:
        return estimate_Z(sample(g, "uniform", 10_000, seed=seed), g)
    s = augment_conjugate(sample(g, "abs_f", 10_000, seed=seed), g, pairs)
    return estimate_Z(s, g, "exact")


def test_ac9_monte_carlo(report):
    worst_hits = 10
    real_pairs = True
    for gi, (g, pairs) in enumerate(_mc_graphs()):
        z = partition_sum(g)
        hits = 0
        for r in range(10):
            rep = _mc_run(g, pairs, seed=1000 * gi + r)
            hits += abs(rep.estimate - z) <= 3 * rep.std_error
            if pairs is not None:
                real_pairs &= rep.estimate.imag == 0 and rep.std_error > 0
        worst_hits = min(worst_hits, hits)
        if pairs is not None:
            assert abs(z - 1) <= 1e-10
    g, pairs = _mc_graphs()[-1]
    s = augment_conjugate(sample(g, "abs_f", 10_000, seed=5), g, pairs)
    pair_dev = float(np.max(np.abs(s.values[0::2] - s.values[1::2].conj())))
    identical = _mc_run(g, pairs, 77).to_json() == _mc_run(g, pairs, 77).to_json()
    ok = worst_hits >= 9 and real_pairs and pair_dev <= 1e-15 and identical
    report(9, "Monte Carlo partition sums", ok,
           f"min {worst_hits}/10 runs within 3 std_error, pair deviation {pair_dev:.1e}, "
           f"reruns identical {identical}")


def test_ac10_gate_identities(report):
    h = hadamard()
    devs = [
        np.max(np.abs(cnot() @ cnot() - np.eye(4))),
        np.max(np.abs(swap() @ swap() - np.eye(4))),
        max(np.max(np.abs(pauli(k) @ pauli(k) - pauli(0))) for k in range(4)),
        np.max(np.abs(h @ pauli(1) @ h - pauli(3))),
    ]
    report(10, "gate identities", max(devs) <= 1e-12, f"max deviation {max(devs):.1e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
