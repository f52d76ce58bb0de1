"""Quantum timelines compiled to conjugate-pair factor graphs.

A :class:`QuantumTimeline` is an initial state followed by unitary and
measurement steps.  :func:`build_graph` turns it into a factor graph whose
upper half carries the matrices ``U`` and ``A(y)`` and whose lower half
carries their entry-wise complex conjugates over mirrored variables.  The
exterior function of that graph over the unobserved outcome variables is the
joint outcome distribution.

Density matrices are indexed ``rho[x, x']`` with ``x`` the upper (ket) and
``x'`` the lower (bra) variable.  Measurement factors are indexed
``A[y, x_out, x_in]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np

from .errors import (
    ArgumentError,
    DimensionError,
    DomainError,
    InternalConsistencyError,
    NullConditioningError,
)
from .gates import equality_tensor, mod_add_tensor, one_hot
from .graph import FactorGraph, exterior_function, internal_variables
from .tensor import (
    DEFAULT_TOL,
    Tolerance,
    is_hermitian,
    is_psd,
    is_unitary,
    max_abs,
    spectral_decompose,
)

# -- domain types -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClassicalPrior:
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "p", np.asarray(self.p, dtype=float))


@dataclass(frozen=True, eq=False)
class KnownValue:
    x0: int


@dataclass(frozen=True, eq=False)
class GivenDensity:
    rho: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rho", np.asarray(self.rho, dtype=np.complex128))


InitialState = Union[ClassicalPrior, KnownValue, GivenDensity]


@dataclass(frozen=True, eq=False)
class MeasurementFamily:
    """Outcome-indexed square matrices ``A(y)``, stored as ``(n_outcomes, M, M)``."""

    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=np.complex128)
        if m.ndim == 2:
            m = m[None]
        if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[0] < 1:
            raise DimensionError(
                f"measurement family must have shape (outcomes, M, M), got {m.shape}"
            )
        object.__setattr__(self, "matrices", m)

    @property
    def dimension(self) -> int:
        return self.matrices.shape[1]

    @property
    def n_outcomes(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, y: int) -> np.ndarray:
        return self.matrices[y]

    def __len__(self):
        return self.n_outcomes


@dataclass(frozen=True, eq=False)
class Unitary:
    U: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "U", np.asarray(self.U, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class Measure:
    family: MeasurementFamily
    observed: int | None = None


Step = Union[Unitary, Measure]


@dataclass(frozen=True, eq=False)
class QuantumTimeline:
    dimension: int
    initial: InitialState
    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def measurements(self) -> list[Measure]:
        return [s for s in self.steps if isinstance(s, Measure)]

    def validate(self, tol: Tolerance = DEFAULT_TOL) -> None:
        """Check every invariant of the initial state and the steps.

        Raises:
            DimensionError: inconsistent matrix sizes.
            DomainError: non-unitary ``U``, invalid prior, invalid density
                matrix, measurement family violating completeness, or an
                observed outcome out of range.
        """
        m = self.dimension
        init = self.initial
        if isinstance(init, ClassicalPrior):
            if init.p.shape != (m,):
                raise DimensionError(f"prior must have length {m}")
            if np.any(init.p < -tol.abs_eps) or abs(init.p.sum() - 1) > tol.abs_eps:
                raise DomainError("prior must be a probability vector")
        elif isinstance(init, KnownValue):
            if not 0 <= init.x0 < m:
                raise DomainError(f"known initial value {init.x0} out of range")
        elif isinstance(init, GivenDensity):
            check_density(init.rho, tol)
            if init.rho.shape != (m, m):
                raise DimensionError(f"density matrix must be {m}x{m}")
        else:
            raise ArgumentError(f"unknown initial state {init!r}")
        for i, s in enumerate(self.steps):
            if isinstance(s, Unitary):
                if s.U.shape != (m, m):
                    raise DimensionError(f"step {i}: unitary must be {m}x{m}")
                if not is_unitary(s.U, tol):
                    raise DomainError(f"step {i}: matrix is not unitary")
            elif isinstance(s, Measure):
                if s.family.dimension != m:
                    raise DimensionError(f"step {i}: measurement must act on dimension {m}")
                report = validate_measurement(s.family, tol)
                if not report.ok:
                    raise DomainError(
                        f"step {i}: measurement family is not complete "
                        f"(deviation {report.max_deviation:.3g})"
                    )
                if s.observed is not None and not 0 <= s.observed < s.family.n_outcomes:
                    raise DomainError(f"step {i}: observed outcome out of range")
            else:
                raise ArgumentError(f"step {i}: unknown step {s!r}")


def check_density(rho, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Validate a density matrix (Hermitian, PSD, unit trace) and return it."""
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    if not is_hermitian(rho, tol):
        raise DomainError("density matrix is not Hermitian")
    if not is_psd(rho, tol):
        raise DomainError("density matrix is not positive semidefinite")
    if abs(np.trace(rho) - 1) > tol.abs_eps:
        raise DomainError(f"density matrix has trace {np.trace(rho)}")
    return rho


def is_density(rho, tol: Tolerance = DEFAULT_TOL) -> bool:
    try:
        check_density(rho, tol)
    except (DomainError, DimensionError):
        return False
    return True


# -- measurement families ---------------------------------------------------


@dataclass(frozen=True)
class MeasurementReport:
    ok: bool
    max_deviation: float


def validate_measurement(fam: MeasurementFamily, tol: Tolerance = DEFAULT_TOL) -> MeasurementReport:
    """Check the completeness relation ``sum_y A(y)^H A(y) = I``."""
    a = fam.matrices
    total = np.einsum("yji,yjk->ik", a.conj(), a)
    dev = max_abs(total - np.eye(fam.dimension))
    return MeasurementReport(dev <= tol.abs_eps, dev)


def projection_family(basis, tol: Tolerance = DEFAULT_TOL) -> MeasurementFamily:
    """Rank-one projectors onto the columns of a unitary ``basis``."""
    b = np.asarray(basis, dtype=np.complex128)
    if not is_unitary(b, tol):
        raise DomainError("projection basis must be unitary")
    return MeasurementFamily(np.einsum("iy,jy->yij", b, b.conj()))


def partial_family(basis, idle_dim: int, tol: Tolerance = DEFAULT_TOL) -> MeasurementFamily:
    """Measure only the second tensor factor: ``A(y) = I_n (x) P_y``.

    The composite dimension is ``idle_dim * m``; the idle subsystem is the
    more significant digit.
    """
    proj = projection_family(basis, tol).matrices
    eye = np.eye(int(idle_dim))
    return MeasurementFamily(np.stack([np.kron(eye, p) for p in proj]))


def future_box_exterior(fam: MeasurementFamily) -> np.ndarray:
    """Exterior function of a measurement with unknown outcome, closed by the trace.

    The box holds ``A(y)`` on the upper path, its conjugate on the lower
    path, the outcome equality node with its (summed) half edge, and the
    terminal equality joining both outputs.  Returns the matrix over the
    input pair ``(x, x')``.
    """
    m = fam.dimension
    b = _PairBuilder()
    xu, xl = b.pair(m)
    ou, ol = b.pair(m)
    yu, yl = b.pair(fam.n_outcomes)
    b.mirrored(fam.matrices.transpose(1, 2, 0), (ou, xu, yu), (ol, xl, yl))
    y = b.g.add_variable(fam.n_outcomes)
    b.g.add_factor(equality_tensor(3, fam.n_outcomes), [yu, yl, y])
    b.g.add_factor(np.ones(fam.n_outcomes), [y])
    b.g.add_factor(np.eye(m), [ou, ol])
    return exterior_function(b.g)


def dont_mind_future_check(fam: MeasurementFamily, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff an unobserved measurement closes to the equality constraint."""
    ext = future_box_exterior(fam)
    return max_abs(ext - np.eye(fam.dimension)) <= tol.abs_eps


# -- graph compilation ------------------------------------------------------


class _PairBuilder:
    """Adds factors to a graph twice: as given on the upper half, conjugated below."""

    def __init__(self, g: FactorGraph | None = None):
        self.g = g if g is not None else FactorGraph()
        self.pairs: list[tuple[int, int]] = []

    def pair(self, size: int, name: str | None = None) -> tuple[int, int]:
        u = self.g.add_variable(size, name)
        low = self.g.add_variable(size, None if name is None else name + "'")
        self.pairs.append((u, low))
        return u, low

    def mirrored(self, tensor, upper_vars, lower_vars, name: str | None = None) -> tuple[int, int]:
        t = np.asarray(tensor, dtype=np.complex128)
        i = self.g.add_factor(t, upper_vars, name)
        j = self.g.add_factor(t.conj(), lower_vars, None if name is None else name + "*")
        return i, j


@dataclass
class Registry:
    """Variable handles of a compiled timeline.

    ``states[k]`` is the ``(upper, lower)`` pair entering step ``k``;
    ``states[-1]`` is the final pair.  ``outcomes[j]`` is the outcome
    variable of the ``j``-th measurement (0-based) and ``outcome_pairs[j]``
    the mirrored pair feeding its equality node.
    """

    states: list[tuple[int, int]] = field(default_factory=list)
    outcomes: list[int] = field(default_factory=list)
    outcome_pairs: list[tuple[int, int]] = field(default_factory=list)
    unobserved: list[int] = field(default_factory=list)
    mirror_pairs: list[tuple[int, int]] = field(default_factory=list)
    prior_var: int | None = None


def _compile(
    t: QuantumTimeline,
    n_steps: int | None = None,
    outcomes: Sequence[int | None] | None = None,
    close: bool = True,
    sum_unobserved: bool = False,
) -> tuple[FactorGraph, Registry]:
    m = t.dimension
    b = _PairBuilder()
    reg = Registry()
    xu, xl = b.pair(m, "X0")
    init = t.initial
    if isinstance(init, GivenDensity):
        b.g.add_factor(init.rho, [xu, xl], "rho")
    else:
        p = init.p if isinstance(init, ClassicalPrior) else one_hot(m, init.x0).real
        x0 = b.g.add_variable(m, "X0*")
        b.g.add_factor(p, [x0], "p(x0)")
        b.g.add_factor(equality_tensor(3, m), [x0, xu, xl], "=")
        reg.prior_var = x0
    steps = t.steps if n_steps is None else t.steps[:n_steps]
    j = 0
    for k, s in enumerate(steps):
        reg.states.append((xu, xl))
        nu, nl = b.pair(m, f"X{k + 1}")
        if isinstance(s, Unitary):
            b.mirrored(s.U, (nu, xu), (nl, xl), f"U{k}")
        else:
            fam = s.family
            n = fam.n_outcomes
            yu, yl = b.pair(n, f"Y{j + 1}~")
            b.mirrored(fam.matrices.transpose(1, 2, 0), (nu, xu, yu), (nl, xl, yl), f"A{j + 1}")
            y = b.g.add_variable(n, f"Y{j + 1}")
            b.g.add_factor(equality_tensor(3, n), [yu, yl, y], "=")
            obs = s.observed if outcomes is None else outcomes[j]
            if obs is not None:
                b.g.add_factor(one_hot(n, obs), [y], f"Y{j + 1}={obs}")
            elif sum_unobserved:
                b.g.add_factor(np.ones(n), [y], f"sum Y{j + 1}")
            else:
                reg.unobserved.append(y)
            reg.outcomes.append(y)
            reg.outcome_pairs.append((yu, yl))
            j += 1
        xu, xl = nu, nl
    reg.states.append((xu, xl))
    if close:
        b.g.add_factor(np.eye(m), [xu, xl], "=")
    reg.mirror_pairs = list(b.pairs)
    return b.g, reg


def build_graph(t: QuantumTimeline, tol: Tolerance = DEFAULT_TOL) -> tuple[FactorGraph, Registry]:
    """Compile a timeline into its conjugate-pair factor graph.

    Observed outcomes are clamped with one-hot factors; every unobserved
    outcome variable is a half edge.  Variable ids increase from left to
    right along the timeline, upper before lower within each pair.
    """
    t.validate(tol)
    return _compile(t)


def _real_table(ext: np.ndarray, tol: Tolerance, what: str) -> np.ndarray:
    imag = max_abs(ext.imag)
    if imag > tol.bound(max_abs(ext)):
        raise InternalConsistencyError(
            f"{what}: imaginary residue {imag:.3g} exceeds tolerance"
        )
    real = ext.real
    if np.any(real < -tol.abs_eps):
        raise InternalConsistencyError(f"{what}: negative probability {real.min():.3g}")
    return np.clip(real, 0.0, None)


OrderSpec = Literal["greedy", "forward", "backward"]


def _order_for(g: FactorGraph, spec: OrderSpec | Sequence[int] | None):
    if spec is None or spec == "greedy":
        return None
    if isinstance(spec, str):
        internal = internal_variables(g)
        if spec == "forward":
            return internal
        if spec == "backward":
            return internal[::-1]
        raise ArgumentError(f"unknown order {spec!r}")
    return list(spec)


def joint_distribution(
    t: QuantumTimeline,
    order: OrderSpec | Sequence[int] | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> np.ndarray:
    """Joint distribution of the unobserved outcomes, axes in timeline order.

    ``order="forward"`` eliminates variables left to right (Schroedinger
    picture), ``"backward"`` right to left (Heisenberg picture).  When some
    outcomes are observed the table is conditioned on them.

    Raises:
        NullConditioningError: the observed outcomes have probability zero.
        InternalConsistencyError: the contraction is not a probability table.
    """
    g, reg = build_graph(t, tol)
    ext = exterior_function(g, order=_order_for(g, order))
    table = _real_table(ext, tol, "joint distribution")
    total = table.sum()
    if len(reg.unobserved) == len(reg.outcomes):
        if abs(total - 1) > tol.bound(1.0) * max(1, table.size):
            raise InternalConsistencyError(f"joint distribution sums to {total}")
        return table
    if total <= tol.abs_eps:
        raise NullConditioningError("observed outcomes have probability zero")
    return table / total


def density_matrix_before(
    t: QuantumTimeline,
    k: int,
    prefix: Sequence[int | None] = (),
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[np.ndarray, float]:
    """State entering the ``k``-th measurement (1-based) given earlier outcomes.

    Closes the box holding the initial state and all steps before
    measurement ``k``, with outcomes ``prefix`` clamped (``None`` entries are
    summed over).  ``k = len(t.measurements) + 1`` gives the final state.

    Returns:
        ``(rho, p)``: the trace-normalized density matrix and the
        probability ``p(y_1, ..., y_{k-1})``, which is the trace of the
        unnormalized box.
    """
    t.validate(tol)
    meas_idx = [i for i, s in enumerate(t.steps) if isinstance(s, Measure)]
    if not 1 <= k <= len(meas_idx) + 1:
        raise ArgumentError(f"k must be in 1..{len(meas_idx) + 1}, got {k}")
    if len(prefix) != k - 1:
        raise ArgumentError(f"prefix must hold {k - 1} outcomes, got {len(prefix)}")
    n_steps = meas_idx[k - 1] if k <= len(meas_idx) else len(t.steps)
    for j, y in enumerate(prefix):
        if y is not None and not 0 <= y < t.measurements[j].family.n_outcomes:
            raise ArgumentError(f"outcome {y} out of range for measurement {j + 1}")
    g, reg = _compile(t, n_steps, list(prefix), close=False, sum_unobserved=True)
    rho_u = exterior_function(g)
    p = np.trace(rho_u)
    if abs(p.imag) > tol.bound(abs(p)):
        raise InternalConsistencyError(f"trace of the past is not real: {p}")
    p = float(p.real)
    if p <= tol.abs_eps:
        raise NullConditioningError(f"prefix {tuple(prefix)} has probability zero")
    rho = rho_u / p
    return rho, p


def conditional_next(
    t: QuantumTimeline,
    prefix: Sequence[int | None] = (),
    tol: Tolerance = DEFAULT_TOL,
) -> np.ndarray:
    """Distribution of the next outcome given the earlier ones, ``tr(A rho A^H)``."""
    k = len(prefix) + 1
    if k > len(t.measurements):
        raise ArgumentError("no measurement left after the given prefix")
    rho, _ = density_matrix_before(t, k, prefix, tol)
    fam = t.measurements[k - 1].family
    probs = np.einsum("yij,jk,ylk->yil", fam.matrices, rho, fam.matrices.conj())
    return _real_table(np.einsum("yii->y", probs), tol, "conditional distribution")


def evolve(rho, U, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``U rho U^H``."""
    U = np.asarray(U, dtype=np.complex128)
    if not is_unitary(U, tol):
        raise DomainError("evolve requires a unitary matrix")
    rho = np.asarray(rho, dtype=np.complex128)
    return U @ rho @ U.conj().T


def collapse(rho, fam: MeasurementFamily, y: int, tol: Tolerance = DEFAULT_TOL) -> tuple[float, np.ndarray]:
    """Outcome probability ``tr(A rho A^H)`` and the normalized post-measurement state."""
    if not validate_measurement(fam, tol).ok:
        raise DomainError("measurement family is not complete")
    a = fam[y]
    unnorm = a @ np.asarray(rho, dtype=np.complex128) @ a.conj().T
    p = np.trace(unnorm)
    if abs(p.imag) > tol.bound(abs(p)):
        raise InternalConsistencyError(f"outcome probability is not real: {p}")
    p = float(p.real)
    if p <= tol.abs_eps:
        raise NullConditioningError(f"outcome {y} has probability zero")
    return p, unnorm / p


def replay_joint(t: QuantumTimeline, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Joint outcome table by sequential evolve/collapse, without any graph.

    Same axes and conditioning convention as :func:`joint_distribution`.
    Branches carry unnormalized states so zero-probability paths need no
    special casing.
    """
    t.validate(tol)
    init = t.initial
    m = t.dimension
    if isinstance(init, GivenDensity):
        rho0 = init.rho
    else:
        p = init.p if isinstance(init, ClassicalPrior) else one_hot(m, init.x0).real
        rho0 = np.diag(p).astype(np.complex128)
    branches = [((), rho0)]
    shape = []
    for s in t.steps:
        if isinstance(s, Unitary):
            branches = [(ys, s.U @ r @ s.U.conj().T) for ys, r in branches]
            continue
        a = s.family.matrices
        if s.observed is not None:
            branches = [(ys, a[s.observed] @ r @ a[s.observed].conj().T) for ys, r in branches]
            continue
        shape.append(s.family.n_outcomes)
        branches = [
            (ys + (y,), a[y] @ r @ a[y].conj().T)
            for ys, r in branches
            for y in range(s.family.n_outcomes)
        ]
    table = np.zeros(shape)
    for ys, r in branches:
        table[ys] = np.trace(r).real
    if len(shape) < len(t.measurements):
        total = table.sum()
        if total <= tol.abs_eps:
            raise NullConditioningError("observed outcomes have probability zero")
        table = table / total
    return table


def observable_expectation(
    t: QuantumTimeline,
    observable,
    k: int | None = None,
    prefix: Sequence[int | None] | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> float:
    """``tr(rho O)`` for the state entering measurement ``k`` (default: final state).

    ``prefix`` defaults to the timeline's own observed outcomes.
    """
    o = np.asarray(observable, dtype=np.complex128)
    if not is_hermitian(o, tol):
        raise DomainError("observable must be Hermitian")
    n_meas = len(t.measurements)
    if k is None:
        k = n_meas + 1
    if prefix is None:
        prefix = [s.observed for s in t.measurements[: k - 1]]
    rho, _ = density_matrix_before(t, k, prefix, tol)
    val = np.trace(rho @ o)
    if abs(val.imag) > tol.bound(abs(val)):
        raise InternalConsistencyError(f"expectation of a Hermitian observable is complex: {val}")
    return float(val.real)


def kraus_apply(rho, fam: MeasurementFamily, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Operator-sum channel ``sum_y E(y) rho E(y)^H``."""
    if not validate_measurement(fam, tol).ok:
        raise DomainError("Kraus family violates the completeness relation")
    e = fam.matrices
    return np.einsum("yij,jk,ylk->il", e, np.asarray(rho, dtype=np.complex128), e.conj())


def family_superoperator(fam: MeasurementFamily) -> np.ndarray:
    """Superoperator tensor ``S[x~, x~', x, x'] = sum_y E(y)[x~, x] conj(E(y)[x~', x'])``."""
    e = fam.matrices
    return np.einsum("yab,ycd->acbd", e, e.conj())


def apply_superoperator(s: np.ndarray, rho) -> np.ndarray:
    return np.einsum("acbd,bd->ac", s, np.asarray(rho, dtype=np.complex128))


def interaction_superoperator(V, ancilla_prior, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Close the box of a unitary interaction with an ancilla that is then discarded.

    ``V`` acts on the composite space ``(system, ancilla)``, system most
    significant.  The ancilla enters through an equality node fed by
    ``ancilla_prior`` and leaves through the terminal equality (trace).

    Returns:
        ``S[x~, x~', x, x']`` as in :func:`family_superoperator`.
    """
    V = np.asarray(V, dtype=np.complex128)
    prior = np.asarray(ancilla_prior, dtype=float)
    d = prior.shape[0]
    if V.ndim != 2 or V.shape[0] % d:
        raise DimensionError(f"interaction of shape {V.shape} does not fit ancilla dimension {d}")
    if not is_unitary(V, tol):
        raise DomainError("interaction matrix must be unitary")
    if np.any(prior < -tol.abs_eps) or abs(prior.sum() - 1) > tol.abs_eps:
        raise DomainError("ancilla prior must be a probability vector")
    m = V.shape[0] // d
    b = _PairBuilder()
    xu, xl = b.pair(m, "X")
    ou, ol = b.pair(m, "X~")
    au, al = b.pair(d, "xi")
    bu, bl = b.pair(d, "xi~")
    a0 = b.g.add_variable(d, "xi0")
    b.g.add_factor(prior, [a0], "p(xi)")
    b.g.add_factor(equality_tensor(3, d), [a0, au, al], "=")
    b.mirrored(V.reshape(m, d, m, d), (ou, bu, xu, au), (ol, bl, xl, al), "V")
    b.g.add_factor(np.eye(d), [bu, bl], "=")
    ext = exterior_function(b.g)  # axes (xu, xl, ou, ol)
    return ext.transpose(2, 3, 0, 1)


def choi_matrix(s: np.ndarray) -> np.ndarray:
    """Reindex a superoperator: rows ``(x, x~)``, columns ``(x', x~')``."""
    m_out, _, m_in, _ = s.shape
    return s.transpose(2, 0, 3, 1).reshape(m_in * m_out, m_in * m_out)


def kraus_from_superoperator(s: np.ndarray, tol: Tolerance = DEFAULT_TOL, cutoff: float = 1e-12) -> MeasurementFamily:
    """Kraus operators from the eigendecomposition of the Choi matrix.

    Eigenpairs with eigenvalue at most ``cutoff`` are dropped.
    """
    m_out, _, m_in, _ = s.shape
    u, lam = spectral_decompose(choi_matrix(s), tol)
    keep = lam > cutoff
    if not np.any(keep):
        raise DomainError("superoperator is zero")
    vecs = u[:, keep] * np.sqrt(lam[keep])
    # vecs[(x, x~), j] -> E_j[x~, x]
    ops = vecs.T.reshape(-1, m_in, m_out).transpose(0, 2, 1)
    return MeasurementFamily(ops)


def interaction_to_kraus(V, ancilla_prior, tol: Tolerance = DEFAULT_TOL) -> MeasurementFamily:
    """Kraus family equivalent to a marginalized unitary interaction."""
    return kraus_from_superoperator(interaction_superoperator(V, ancilla_prior, tol), tol)


def _measurement_boxes(m: int, basis, prior, adder) -> tuple[np.ndarray, np.ndarray]:
    basis = np.asarray(basis, dtype=np.complex128)
    bh = basis.conj().T

    def skeleton():
        b = _PairBuilder()
        xu, xl = b.pair(m, "X")
        ou, ol = b.pair(m, "X~")
        su, sl = b.pair(m, "s")
        tu, tl = b.pair(m, "t")
        zu, zl = b.pair(m, "zeta")
        b.mirrored(bh, (su, xu), (sl, xl), "B^H")
        b.mirrored(equality_tensor(3, m), (su, tu, zu), (sl, tl, zl), "=")
        b.mirrored(basis, (ou, tu), (ol, tl), "B")
        return b, (zu, zl)

    left, (zu, zl) = skeleton()
    au, al = left.pair(m, "xi")
    cu, cl = left.pair(m, "xi~")
    a0 = left.g.add_variable(m, "xi0")
    left.g.add_factor(prior, [a0], "p(xi)")
    left.g.add_factor(equality_tensor(3, m), [a0, au, al], "=")
    left.mirrored(adder, (au, zu, cu), (al, zl, cl), "+")
    left.g.add_factor(np.eye(m), [cu, cl], "=")

    right, (zu, zl) = skeleton()
    right.g.add_factor(np.eye(m), [zu, zl], "=")
    return exterior_function(left.g), exterior_function(right.g)


def interaction_measurement_equivalence(
    m: int,
    basis,
    prior=None,
    corrupt_adder: bool = False,
    tol: Tolerance = DEFAULT_TOL,
) -> bool:
    """Check that a marginalized mod-M interaction acts as a projection measurement.

    Left box: ``B^H``, an equality node whose branch ``zeta`` drives a mod-M
    adder on an ancilla drawn from ``prior`` and then discarded, then ``B``.
    Right box: the same chain with ``zeta`` simply summed (projection
    measurement with unknown result).  ``corrupt_adder=True`` zeroes one
    entry of the adder, which breaks the equivalence (negative control).
    """
    basis = np.asarray(basis, dtype=np.complex128)
    if basis.shape != (m, m) or not is_unitary(basis, tol):
        return False
    prior = np.full(m, 1.0 / m) if prior is None else np.asarray(prior, dtype=float)
    adder = mod_add_tensor(m)
    if corrupt_adder:
        adder = adder.copy()
        adder[0, 0, 0] = 0.0
    left, right = _measurement_boxes(m, basis, prior, adder)
    return max_abs(left - right) <= tol.abs_eps


def partial_trace(rho, dims: tuple[int, int], keep: Literal["first", "second"] = "first") -> np.ndarray:
    """Trace out one subsystem of a bipartite density matrix.

    ``dims = (n, m)`` with the first subsystem the more significant digit.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    n, m = (int(d) for d in dims)
    if rho.shape != (n * m, n * m):
        raise DimensionError(f"matrix of shape {rho.shape} does not factor as {n}x{m}")
    r = rho.reshape(n, m, n, m)
    if keep == "first":
        return np.einsum("ajbj->ab", r)
    if keep == "second":
        return np.einsum("iaib->ab", r)
    raise ArgumentError(f"keep must be 'first' or 'second', got {keep!r}")


def apply_classical_channel(table, channel, axis: int = 0) -> np.ndarray:
    """Push one outcome axis through a stochastic matrix ``channel[y, zeta]``.

    The result carries the new outcome ``y`` on the same axis.
    """
    table = np.asarray(table, dtype=float)
    channel = np.asarray(channel, dtype=float)
    if np.any(channel < 0) or not np.allclose(channel.sum(axis=0), 1.0):
        raise DomainError("channel columns must be probability vectors")
    moved = np.moveaxis(table, axis, 0)
    out = np.tensordot(channel, moved, axes=(1, 0))
    return np.moveaxis(out, 0, axis)
