"""Repetition and Shor codes as factor graphs.

Circuits are assembled from :mod:`qfg.gates` primitives by
:class:`QubitCircuit` and contracted with :func:`qfg.graph.exterior_function`.
An *effective channel* is the 2x2 matrix from the encoder input to the
detector output of the upper half of the graph (the quantum circuit), with
ancillas prepared in ``|0>`` and syndrome outputs clamped to the observed
bits.  Channels are indexed ``C[out, in]``.

Qubit locations are 1-based.  Syndrome bits are listed in measurement
order: for the length-3 code ``(Y2, Y1)``; for the Shor code the pairs
``(Y2, Y1)`` of the three inner blocks followed by the outer pair.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ArgumentError, DimensionError, DomainError, StructureError
from .gates import cnot, equality_tensor, hadamard, one_hot, pauli
from .graph import FactorGraph, exterior_function
from .tensor import DEFAULT_TOL, Tolerance, projective_equal

IMPOSSIBLE_RTOL = 1e-12

_SIGMA = np.stack([pauli(k) for k in range(4)])


def pauli_coeffs(a) -> np.ndarray:
    """Coefficients ``w_k = tr(sigma_k A) / 2`` of ``A = sum_k w_k sigma_k``."""
    a = np.asarray(a, dtype=np.complex128)
    if a.shape != (2, 2):
        raise DimensionError(f"expected a 2x2 matrix, got {a.shape}")
    return 0.5 * np.einsum("kij,ji->k", _SIGMA, a)


def from_pauli_coeffs(w) -> np.ndarray:
    w = np.asarray(w, dtype=np.complex128)
    if w.shape != (4,):
        raise DimensionError(f"expected four Pauli coefficients, got {w.shape}")
    return np.einsum("k,kij->ij", w, _SIGMA)


@dataclass(frozen=True, eq=False)
class ErrorSpec:
    """A single-qubit error ``A`` acting at qubit ``location`` (1-based)."""

    location: int
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        if m.shape != (2, 2):
            raise DimensionError(f"error matrix must be 2x2, got {m.shape}")
        if not np.all(np.isfinite(m)) or np.linalg.norm(m) == 0:
            raise DomainError("error matrix must be finite and nonzero")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_coeffs(cls, location: int, w) -> "ErrorSpec":
        return cls(location, from_pauli_coeffs(w))

    @property
    def coeffs(self) -> np.ndarray:
        return pauli_coeffs(self.matrix)


def is_impossible(channel, error: ErrorSpec) -> bool:
    """True if the channel vanishes relative to the error's Frobenius norm."""
    return np.linalg.norm(channel) <= IMPOSSIBLE_RTOL * np.linalg.norm(error.matrix)


# -- circuits ---------------------------------------------------------------


class QubitCircuit:
    """A sequence of gates and computational-basis measurements on qubit wires.

    Wire 0 carries the data qubit; every other wire starts in ``|0>``.
    Measured wires are retired and may not be used afterwards.
    """

    def __init__(self, n_wires: int):
        if n_wires < 1:
            raise ArgumentError("a circuit needs at least one wire")
        self.n_wires = n_wires
        self.ops: list[tuple] = []
        self._measured: set[int] = set()
        self.n_measurements = 0

    def _check(self, wires):
        for w in wires:
            if not 0 <= w < self.n_wires:
                raise ArgumentError(f"wire {w} out of range")
            if w in self._measured:
                raise StructureError(f"wire {w} was already measured")
        if len(set(wires)) != len(wires):
            raise ArgumentError(f"repeated wire in {wires}")

    def gate(self, matrix, *wires: int) -> "QubitCircuit":
        wires = tuple(wires)
        self._check(wires)
        m = np.asarray(matrix, dtype=np.complex128)
        if m.shape != (2 ** len(wires),) * 2:
            raise DimensionError(f"gate of shape {m.shape} does not act on {len(wires)} qubits")
        self.ops.append(("gate", m, wires))
        return self

    def cnot(self, control: int, target: int) -> "QubitCircuit":
        return self.gate(cnot(), control, target)

    def h(self, *wires: int) -> "QubitCircuit":
        for w in wires:
            self.gate(hadamard(), w)
        return self

    def measure(self, wire: int) -> int:
        self._check((wire,))
        self._measured.add(wire)
        self.ops.append(("measure", wire))
        self.n_measurements += 1
        return self.n_measurements - 1

    def upper_graph(self, syndrome: Sequence[int] | None = None):
        """The circuit alone (upper half of the factor graph).

        Args:
            syndrome: bits to clamp the measured wires to; ``None`` leaves
                each measured wire as a half edge.

        Returns:
            ``(graph, x_in, x_out, outcome_vars)``.
        """
        if syndrome is not None and len(syndrome) != self.n_measurements:
            raise ArgumentError(f"syndrome must have {self.n_measurements} bits")
        g = FactorGraph()
        cur = []
        for w in range(self.n_wires):
            v = g.add_variable(2, f"q{w + 1}")
            if w > 0:
                g.add_factor(one_hot(2, 0), [v], "|0>")
            cur.append(v)
        x_in = cur[0]
        outcomes = []
        for op in self.ops:
            if op[0] == "gate":
                _, m, wires = op
                k = len(wires)
                new = [g.add_variable(2) for _ in wires]
                g.add_factor(m.reshape((2,) * (2 * k)), new + [cur[w] for w in wires])
                for w, v in zip(wires, new):
                    cur[w] = v
            else:
                v = cur[op[1]]
                if syndrome is not None:
                    bit = int(syndrome[len(outcomes)])
                    g.add_factor(one_hot(2, bit), [v], f"y={bit}")
                outcomes.append(v)
        self._check_closed()
        return g, x_in, cur[0], outcomes

    def pair_graph(self, rho_in):
        """Full conjugate-pair graph with input density matrix ``rho_in``.

        Each measured wire becomes a projection measurement whose outcome
        variable is a half edge; all outputs are closed by equality nodes.

        Returns:
            ``(graph, outcome_vars)``.
        """
        rho = np.asarray(rho_in, dtype=np.complex128)
        if rho.shape != (2, 2):
            raise DimensionError("input density matrix must be 2x2")
        g = FactorGraph()
        cur = []
        for w in range(self.n_wires):
            u = g.add_variable(2)
            low = g.add_variable(2)
            if w == 0:
                g.add_factor(rho, [u, low], "rho")
            else:
                g.add_factor(one_hot(2, 0), [u], "|0>")
                g.add_factor(one_hot(2, 0), [low], "<0|")
            cur.append((u, low))
        proj = np.stack([np.outer(e, e) for e in np.eye(2)]).transpose(1, 2, 0)
        outcomes = []
        for op in self.ops:
            if op[0] == "gate":
                _, m, wires = op
                k = len(wires)
                t = m.reshape((2,) * (2 * k))
                nu = [g.add_variable(2) for _ in wires]
                nl = [g.add_variable(2) for _ in wires]
                g.add_factor(t, nu + [cur[w][0] for w in wires])
                g.add_factor(t.conj(), nl + [cur[w][1] for w in wires])
                for w, a, b in zip(wires, nu, nl):
                    cur[w] = (a, b)
            else:
                u, low = cur[op[1]]
                ou, ol = g.add_variable(2), g.add_variable(2)
                yu, yl = g.add_variable(2), g.add_variable(2)
                g.add_factor(proj, [ou, u, yu])
                g.add_factor(proj.conj(), [ol, low, yl])
                y = g.add_variable(2, f"Y{len(outcomes) + 1}")
                g.add_factor(equality_tensor(3, 2), [yu, yl, y])
                g.add_factor(np.eye(2), [ou, ol], "=")
                outcomes.append(y)
        self._check_closed()
        u, low = cur[0]
        g.add_factor(np.eye(2), [u, low], "=")
        return g, outcomes

    def _check_closed(self):
        open_wires = set(range(1, self.n_wires)) - self._measured
        if open_wires:
            raise StructureError(f"ancilla wires {sorted(open_wires)} are never measured")


def _channel(circuit: QubitCircuit, syndrome: Sequence[int]) -> np.ndarray:
    g, x_in, x_out, _ = circuit.upper_graph(syndrome)
    ext = exterior_function(g)  # axes (x_in, x_out) since x_in < x_out
    return ext.T


def _channel_table(circuit: QubitCircuit) -> np.ndarray:
    """All syndromes at once: shape ``(2,) * n_measurements + (2, 2)``."""
    g, x_in, x_out, ys = circuit.upper_graph()
    ext = exterior_function(g)
    order = sorted([x_in, x_out] + ys)
    axes = [order.index(v) for v in ys] + [order.index(x_out), order.index(x_in)]
    return ext.transpose(axes)


def rep2_circuit(a, on_check: bool = False) -> QubitCircuit:
    """Length-2 repetition encoder, error ``a`` on the data or the check qubit, detector."""
    c = QubitCircuit(2)
    c.cnot(0, 1)
    c.gate(a, 1 if on_check else 0)
    c.cnot(0, 1)
    c.measure(1)
    return c


def effective_channel_direct(a, y: int) -> np.ndarray:
    """Effective channel with the error on the direct (data) path."""
    return _channel(rep2_circuit(np.asarray(a), False), [y])


def effective_channel_check(a, y: int) -> np.ndarray:
    """Effective channel with the error on the check (ancilla) path."""
    return _channel(rep2_circuit(np.asarray(a), True), [y])


def _rep3_block(c: QubitCircuit, data: int, a=None, where: int | None = None, outer_h: bool = False):
    """Append a length-3 repetition encoder/detector on wires ``data, data+1, data+2``."""
    if outer_h:
        c.h(data)
    c.cnot(data, data + 1).cnot(data, data + 2)
    if a is not None:
        c.gate(a, data + where)
    c.cnot(data, data + 2)
    c.measure(data + 2)
    c.cnot(data, data + 1)
    c.measure(data + 1)
    if outer_h:
        c.h(data)


def rep3_circuit(error: ErrorSpec, hadamard_wrapped: bool = False) -> QubitCircuit:
    if not 1 <= error.location <= 3:
        raise ArgumentError(f"length-3 code location must be 1..3, got {error.location}")
    c = QubitCircuit(3)
    _rep3_block(c, 0, error.matrix, error.location - 1, hadamard_wrapped)
    return c


def rep3_syndrome_table(error: ErrorSpec, hadamard_wrapped: bool = False) -> dict[tuple[int, int], np.ndarray]:
    """Effective channel of the length-3 code for every syndrome ``(Y2, Y1)``.

    With ``hadamard_wrapped`` the data line passes through ``H`` before the
    encoder and after the detector, as seen by the outer code of the Shor
    code.
    """
    c = rep3_circuit(error, hadamard_wrapped)
    return {s: _channel(c, s) for s in itertools.product((0, 1), repeat=2)}


def shor_circuit(error: ErrorSpec) -> QubitCircuit:
    """Nine-qubit Shor encoder, error, and mirror-image detector."""
    if not 1 <= error.location <= 9:
        raise ArgumentError(f"Shor code location must be 1..9, got {error.location}")
    c = QubitCircuit(9)
    c.cnot(0, 3).cnot(0, 6)
    c.h(0, 3, 6)
    for b in (0, 3, 6):
        c.cnot(b, b + 1).cnot(b, b + 2)
    c.gate(error.matrix, error.location - 1)
    for b in (0, 3, 6):
        c.cnot(b, b + 2)
        c.measure(b + 2)
        c.cnot(b, b + 1)
        c.measure(b + 1)
    c.h(0, 3, 6)
    c.cnot(0, 6)
    c.measure(6)
    c.cnot(0, 3)
    c.measure(3)
    return c


def shor_graph(error: ErrorSpec, rho_in=None) -> tuple[FactorGraph, list[int]]:
    """Conjugate-pair graph of the Shor code with its 8 syndrome variables as half edges.

    ``rho_in`` defaults to the maximally mixed state.
    """
    rho = np.eye(2) / 2 if rho_in is None else rho_in
    return shor_circuit(error).pair_graph(rho)


def _check_syndrome(syndrome, n):
    s = tuple(int(b) for b in syndrome)
    if len(s) != n or any(b not in (0, 1) for b in s):
        raise ArgumentError(f"syndrome must be {n} bits, got {syndrome!r}")
    return s


def shor_effective_channel(error: ErrorSpec, syndrome: Sequence[int]) -> np.ndarray:
    """Effective channel of the Shor code at a clamped 8-bit syndrome."""
    return _channel(shor_circuit(error), _check_syndrome(syndrome, 8))


def shor_channel_table(error: ErrorSpec) -> np.ndarray:
    """Effective channels for all 256 syndromes, shape ``(2,)*8 + (2, 2)``."""
    return _channel_table(shor_circuit(error))


def shor_syndrome_distribution(error: ErrorSpec, rho_in, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Unnormalized syndrome probabilities from the conjugate-pair graph.

    The total is 1 for a unitary error and ``tr(A rho A^H)``-like otherwise.
    """
    g, _ = shor_graph(error, rho_in)
    ext = exterior_function(g)
    if np.max(np.abs(ext.imag)) > tol.bound(np.max(np.abs(ext))):
        raise DomainError("syndrome probabilities are not real")
    return np.clip(ext.real, 0.0, None)


@dataclass(frozen=True)
class RecoveryReport:
    syndrome: tuple[int, ...]
    correction: int
    fidelity: float


def correction_for(channel, tol: Tolerance = DEFAULT_TOL) -> int:
    """Pauli index ``k`` with ``sigma_k @ channel`` proportional to the identity."""
    for k in range(4):
        if projective_equal(np.eye(2), _SIGMA[k] @ channel, tol):
            return k
    raise DomainError("effective channel is not a multiple of a Pauli matrix")


def shor_recover(
    error: ErrorSpec,
    syndrome: Sequence[int] | None = None,
    psi=None,
    seed: int | None = None,
    tol: Tolerance = DEFAULT_TOL,
) -> RecoveryReport:
    """Correct the Shor-code output and measure the fidelity with the input.

    Args:
        error: the single-qubit error.
        syndrome: observed syndrome; if ``None`` one is drawn from the
            syndrome distribution of ``psi``.
        psi: input pure state; random if ``None``.
        seed: seed for the random state and syndrome draw.

    Raises:
        DomainError: the syndrome is impossible for this error.
    """
    rng = np.random.default_rng(seed)
    if psi is None:
        psi = rng.normal(size=2) + 1j * rng.normal(size=2)
    psi = np.asarray(psi, dtype=np.complex128)
    psi = psi / np.linalg.norm(psi)
    if syndrome is None:
        p = shor_syndrome_distribution(error, np.outer(psi, psi.conj()), tol).ravel()
        idx = rng.choice(p.size, p=p / p.sum())
        syndrome = np.unravel_index(idx, (2,) * 8)
    syndrome = _check_syndrome(syndrome, 8)
    channel = shor_effective_channel(error, syndrome)
    if is_impossible(channel, error):
        raise DomainError(f"syndrome {syndrome} is impossible for this error")
    k = correction_for(channel, tol)
    out = _SIGMA[k] @ channel @ psi
    out = out / np.linalg.norm(out)
    fid = float(abs(np.vdot(psi, out)) ** 2)
    return RecoveryReport(syndrome, k, fid)


# -- reference tables -------------------------------------------------------
# Coefficient matrices T[j, k]: the channel is sum_j (sum_k T[j, k] w_k) sigma_j.


def _coef(entries) -> np.ndarray:
    t = np.zeros((4, 4), dtype=np.complex128)
    for (j, k), v in entries.items():
        t[j, k] = v
    return t


_REP3_REFERENCE = {
    ((0, 0), 1): _coef({(0, 0): 1, (3, 3): 1}),
    ((0, 0), 2): _coef({(0, 0): 1, (3, 3): 1}),
    ((0, 0), 3): _coef({(0, 0): 1, (3, 3): 1}),
    ((0, 1), 2): _coef({(0, 1): 1, (3, 2): 1j}),
    ((1, 0), 3): _coef({(0, 1): 1, (3, 2): 1j}),
    ((1, 1), 1): _coef({(1, 1): 1, (2, 2): 1}),
}

_REP3_HADAMARD_REFERENCE = {
    (0, 0): _coef({(0, 0): 1, (1, 3): 1}),
    (0, 1): _coef({(0, 1): 1, (1, 2): 1j}),
    (1, 0): _coef({(0, 1): 1, (1, 2): 1j}),
    (1, 1): _coef({(3, 1): 1, (2, 2): -1}),
}


def rep3_reference_coefficients(syndrome, location: int) -> np.ndarray:
    """Tabulated channel of the length-3 code (zero where impossible)."""
    return _REP3_REFERENCE.get((tuple(syndrome), location), np.zeros((4, 4), dtype=np.complex128))


def rep3_reference_channel(w, syndrome, location: int) -> np.ndarray:
    return from_pauli_coeffs(rep3_reference_coefficients(syndrome, location) @ np.asarray(w))


def rep3_compressed_reference(w, syndrome) -> np.ndarray:
    """Location-independent channel for a syndrome (compressed table)."""
    loc = {(0, 0): 1, (0, 1): 2, (1, 0): 3, (1, 1): 1}[tuple(syndrome)]
    return rep3_reference_channel(w, syndrome, loc)


def rep3_hadamard_reference(w, syndrome) -> np.ndarray:
    """Compressed table with ``H`` applied before and after."""
    return from_pauli_coeffs(_REP3_HADAMARD_REFERENCE[tuple(syndrome)] @ np.asarray(w))


def shor_outer_reference(inner_channel, outer_syndrome, block: int) -> np.ndarray:
    """Outer-code effect of an inner channel ``a s0 + b s1`` or ``c s2 + d s3``."""
    return rep3_reference_channel(pauli_coeffs(inner_channel), outer_syndrome, block)


def shor_predicted_channel(error: ErrorSpec, syndrome: Sequence[int]) -> np.ndarray:
    """Effective channel composed from the tabulated code effects.

    The inner block holding the error contributes its length-3 entry,
    wrapped by ``H`` on both sides, and the outer code then acts on that
    channel at the block's position.  Error-free blocks must report a zero
    syndrome.
    """
    s = _check_syndrome(syndrome, 8)
    block, pos = divmod(error.location - 1, 3)
    zero = np.zeros((2, 2), dtype=np.complex128)
    for b in range(3):
        if b != block and s[2 * b : 2 * b + 2] != (0, 0):
            return zero
    inner = rep3_reference_channel(error.coeffs, s[2 * block : 2 * block + 2], pos + 1)
    h = hadamard()
    return shor_outer_reference(h @ inner @ h, s[6:], block + 1)


# -- symbolic rendering -----------------------------------------------------


def _fmt_scalar(c: complex, digits: int = 9) -> str:
    c = complex(round(c.real, digits), round(c.imag, digits))
    if c.imag == 0:
        return f"{c.real:g}"
    if c.real == 0:
        return f"{c.imag:g}i"
    return f"({c.real:g}{c.imag:+g}i)"


def render_pauli_symbolic(coef: np.ndarray, eps: float = 1e-9) -> str:
    """Render ``sum_j (sum_k coef[j, k] w_k) sigma_j``, e.g. ``w1 σ0 + i w2 σ3``."""
    terms = []
    for j in range(4):
        parts = []
        for k in range(4):
            c = coef[j, k]
            if abs(c) <= eps:
                continue
            c = complex(round(c.real, 9), round(c.imag, 9))
            if c == 1:
                s = f"w{k}"
            elif c == -1:
                s = f"-w{k}"
            elif c == 1j:
                s = f"i w{k}"
            elif c == -1j:
                s = f"-i w{k}"
            else:
                s = f"{_fmt_scalar(c)} w{k}"
            parts.append(s)
        if not parts:
            continue
        body = parts[0] if len(parts) == 1 else "(" + " + ".join(parts) + ")"
        terms.append(f"{body} σ{j}")
    if not terms:
        return "impossible"
    return " + ".join(terms).replace("+ -", "- ")


def render_pauli_numeric(channel, eps: float = 1e-9) -> str:
    w = pauli_coeffs(channel)
    terms = [f"{_fmt_scalar(c)} σ{k}" for k, c in enumerate(w) if abs(c) > eps]
    return " + ".join(terms) if terms else "0"


def rep3_symbolic_table(location: int, hadamard_wrapped: bool = False) -> dict[tuple[int, int], np.ndarray]:
    """Coefficient matrices of the length-3 table, obtained by contracting Pauli errors."""
    tables = [rep3_syndrome_table(ErrorSpec(location, _SIGMA[k]), hadamard_wrapped) for k in range(4)]
    return {
        s: np.stack([pauli_coeffs(t[s]) for t in tables], axis=1)
        for s in itertools.product((0, 1), repeat=2)
    }


def shor_symbolic_table(location: int) -> dict[tuple[int, ...], np.ndarray]:
    """Coefficient matrices of all achievable Shor syndromes for one error location."""
    tables = [shor_channel_table(ErrorSpec(location, _SIGMA[k])) for k in range(4)]
    out = {}
    for s in itertools.product((0, 1), repeat=8):
        coef = np.stack([pauli_coeffs(t[s]) for t in tables], axis=1)
        if np.max(np.abs(coef)) > IMPOSSIBLE_RTOL:
            out[s] = coef
    return out
