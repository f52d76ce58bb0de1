"""Random instance generators shared by the test modules."""

import numpy as np

from qfg.graph import FactorGraph
from qfg.quantum import (
    ClassicalPrior,
    GivenDensity,
    KnownValue,
    Measure,
    MeasurementFamily,
    QuantumTimeline,
    Unitary,
    partial_family,
    projection_family,
)


def random_unitary(n, rng):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_complex(shape, rng):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_density(n, rng, rank=None):
    a = random_complex((n, rank or n), rng)
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_probability(n, rng):
    p = rng.uniform(size=n)
    return p / p.sum()


def random_kraus_family(m, n_outcomes, rng):
    """Slices of a random isometry: sum_y A(y)^H A(y) = I."""
    q, _ = np.linalg.qr(random_complex((m * n_outcomes, m), rng))
    return MeasurementFamily(q.reshape(n_outcomes, m, m))


def random_graph(rng, max_vars=8, max_size=4, max_factors=8, complex_values=True):
    """Random normal factor graph: every variable attaches to one or two factors."""
    g = FactorGraph()
    n_vars = int(rng.integers(1, max_vars + 1))
    n_fac = int(rng.integers(1, max_factors + 1))
    scopes = [[] for _ in range(n_fac)]
    for _ in range(n_vars):
        v = g.add_variable(int(rng.integers(1, max_size + 1)))
        k = int(rng.integers(1, 3))
        for f in rng.choice(n_fac, size=min(k, n_fac), replace=False):
            scopes[f].append(v)
    for vs in scopes:
        shape = tuple(g.size(v) for v in vs)
        t = random_complex(shape, rng) if complex_values else rng.normal(size=shape)
        g.add_factor(t, vs)
    return g


def random_family(m, rng):
    kind = rng.choice(["projection", "partial", "general"])
    if kind == "partial" and m in (4,):
        return partial_family(random_unitary(2, rng), 2)
    if kind == "general":
        return random_kraus_family(m, int(rng.integers(1, 4)), rng)
    return projection_family(random_unitary(m, rng))


def random_timeline(rng, max_dim=4, max_meas=3, observed_prob=0.0):
    m = int(rng.integers(2, max_dim + 1))
    kind = rng.integers(3)
    if kind == 0:
        init = ClassicalPrior(random_probability(m, rng))
    elif kind == 1:
        init = KnownValue(int(rng.integers(m)))
    else:
        init = GivenDensity(random_density(m, rng))
    steps = []
    for _ in range(int(rng.integers(1, max_meas + 1))):
        if rng.random() < 0.7:
            steps.append(Unitary(random_unitary(m, rng)))
        fam = random_family(m, rng)
        obs = int(rng.integers(fam.n_outcomes)) if rng.random() < observed_prob else None
        steps.append(Measure(fam, obs))
    return QuantumTimeline(m, init, steps)
