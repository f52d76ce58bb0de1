"""Forney (normal) factor graphs with complex-valued factors.

Variables are edges: each variable touches at most two factor ports.  A
variable touching exactly one port is a half edge.  Fan-out must be modeled
with explicit equality factors (:func:`qfg.gates.equality_tensor`).

The central query is :func:`exterior_function`: the product of all factors in
a box, summed over the box's internal variables.  It is computed by variable
elimination; :func:`brute_force_exterior` computes the same quantity by plain
enumeration and serves as the reference oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError, NormalityError, ResourceError
from .tensor import as_tensor

DEFAULT_BUDGET = 2**26
DEFAULT_ENUM_GUARD = 10**7


@dataclass(frozen=True)
class Factor:
    tensor: np.ndarray
    vars: tuple[int, ...]
    name: str | None = None


class FactorGraph:
    """A normal factor graph.

    Building is incremental (:meth:`add_variable`, :meth:`add_factor`); every
    query function in this module treats a graph as a read-only value, and
    operations that change structure (:func:`clamp`, :func:`close_box`)
    return a new graph.

    Examples:
        >>> g = FactorGraph()
        >>> x = g.add_variable(2)
        >>> g.add_factor([1.0, 3.0], [x])
        0
        >>> partition_sum(g)
        (4+0j)
    """

    def __init__(self):
        self._sizes: dict[int, int] = {}
        self._names: dict[int, str] = {}
        self._degree: dict[int, int] = {}
        self._factors: list[Factor] = []
        self._next_id = 0

    # -- construction -----------------------------------------------------

    def add_variable(self, alphabet_size: int, name: str | None = None, var_id: int | None = None) -> int:
        alphabet_size = int(alphabet_size)
        if alphabet_size < 1:
            raise ArgumentError(f"alphabet size must be >= 1, got {alphabet_size}")
        if var_id is None:
            var_id = self._next_id
        elif var_id in self._sizes:
            raise ArgumentError(f"variable id {var_id} already in use")
        var_id = int(var_id)
        self._next_id = max(self._next_id, var_id + 1)
        self._sizes[var_id] = alphabet_size
        self._degree[var_id] = 0
        if name is not None:
            self._names[var_id] = name
        return var_id

    def add_factor(self, tensor, vars: Sequence[int], name: str | None = None) -> int:
        vars = tuple(int(v) for v in vars)
        for v in vars:
            if v not in self._sizes:
                raise ArgumentError(f"unknown variable {v}")
        shape = tuple(self._sizes[v] for v in vars)
        t = np.asarray(tensor, dtype=np.complex128)
        if t.shape != shape:
            if t.size != int(np.prod(shape, dtype=np.int64)):
                raise DimensionError(
                    f"factor of shape {t.shape} does not fit variables {vars} "
                    f"with sizes {shape}"
                )
            t = t.reshape(shape)
        t = as_tensor(t)
        added: dict[int, int] = {}
        for v in vars:
            added[v] = added.get(v, 0) + 1
        for v, n in added.items():
            if self._degree[v] + n > 2:
                raise NormalityError(
                    f"variable {v} would be attached to {self._degree[v] + n} "
                    "factor ports; insert an equality factor instead"
                )
        for v, n in added.items():
            self._degree[v] += n
        self._factors.append(Factor(t, vars, name))
        return len(self._factors) - 1

    def copy(self) -> "FactorGraph":
        g = FactorGraph()
        g._sizes = dict(self._sizes)
        g._names = dict(self._names)
        g._degree = dict(self._degree)
        g._factors = list(self._factors)
        g._next_id = self._next_id
        return g

    # -- inspection -------------------------------------------------------

    @property
    def factors(self) -> tuple[Factor, ...]:
        return tuple(self._factors)

    @property
    def variables(self) -> dict[int, int]:
        """Mapping variable id -> alphabet size."""
        return dict(self._sizes)

    def size(self, v: int) -> int:
        return self._sizes[v]

    def degree(self, v: int) -> int:
        return self._degree[v]

    def name(self, v: int) -> str | None:
        return self._names.get(v)

    def half_edges(self) -> list[int]:
        return sorted(v for v, d in self._degree.items() if d == 1)

    def __len__(self):
        return len(self._factors)

    def __repr__(self):
        return f"FactorGraph(variables={len(self._sizes)}, factors={len(self._factors)})"


def _check_box(g: FactorGraph, box: Iterable[int] | None) -> list[int]:
    if box is None:
        return list(range(len(g)))
    box = [int(i) for i in box]
    if len(set(box)) != len(box):
        raise ArgumentError(f"repeated factor index in box {box}")
    for i in box:
        if not 0 <= i < len(g):
            raise ArgumentError(f"factor index {i} out of range")
    return sorted(box)


def _attachment_counts(g: FactorGraph, box: Sequence[int]) -> dict[int, int]:
    counts: dict[int, int] = {}
    for i in box:
        for v in g.factors[i].vars:
            counts[v] = counts.get(v, 0) + 1
    return counts


def boundary_variables(g: FactorGraph, box: Iterable[int] | None = None) -> list[int]:
    """Variables with exactly one attachment inside the box, ascending id.

    These are the edges crossing the box wall together with the half edges
    inside the box.
    """
    box = _check_box(g, box)
    return sorted(v for v, n in _attachment_counts(g, box).items() if n == 1)


def internal_variables(g: FactorGraph, box: Iterable[int] | None = None) -> list[int]:
    box = _check_box(g, box)
    return sorted(v for v, n in _attachment_counts(g, box).items() if n == 2)


# -- elimination ----------------------------------------------------------


def _greedy_order(scopes: list[set[int]], sizes: dict[int, int], eliminate: set[int]) -> list[int]:
    neighbors: dict[int, set[int]] = {}
    for scope in scopes:
        for v in scope:
            neighbors.setdefault(v, set()).update(scope - {v})
    remaining = set(eliminate)
    order = []
    while remaining:
        best = None
        for v in sorted(remaining):
            nb = neighbors.get(v, set())
            cost = 1
            for u in nb:
                cost *= sizes[u]
            fill = 0
            nbl = sorted(nb)
            for i, a in enumerate(nbl):
                for b in nbl[i + 1:]:
                    if b not in neighbors[a]:
                        fill += 1
            key = (cost, fill, v)
            if best is None or key < best[0]:
                best = (key, v)
        v = best[1]
        nb = neighbors.pop(v, set())
        for u in nb:
            neighbors[u].discard(v)
            neighbors[u].update(nb - {u})
        remaining.discard(v)
        order.append(v)
    return order


def elimination_order(g: FactorGraph, boundary: Iterable[int] | None = None, box: Iterable[int] | None = None) -> list[int]:
    """Greedy elimination order over the internal variables of ``box``.

    Variables are chosen by smallest resulting intermediate tensor, ties
    broken by fewest fill edges, then by id.  ``boundary`` defaults to the
    box boundary; variables in it are never eliminated.
    """
    box = _check_box(g, box)
    scopes = [set(g.factors[i].vars) for i in box]
    allv = set().union(*scopes) if scopes else set()
    keep = set(boundary_variables(g, box) if boundary is None else boundary)
    return _greedy_order(scopes, g.variables, allv - keep)


def _einsum(ops: list[tuple[np.ndarray, tuple[int, ...]]], out_vars: Sequence[int]) -> np.ndarray:
    labels: dict[int, int] = {}
    args = []
    for t, vs in ops:
        args.append(t)
        args.append([labels.setdefault(v, len(labels)) for v in vs])
    args.append([labels.setdefault(v, len(labels)) for v in out_vars])
    if len(ops) == 1:
        return np.einsum(*args)
    return np.einsum(*args, optimize="greedy")


def _eliminate(
    ops: list[tuple[np.ndarray, tuple[int, ...]]],
    sizes: dict[int, int],
    keep: Sequence[int],
    order: Sequence[int],
    budget: int,
) -> np.ndarray:
    ops = list(ops)
    for v in order:
        bucket = [op for op in ops if v in op[1]]
        if not bucket:
            continue
        ops = [op for op in ops if v not in op[1]]
        scope: list[int] = []
        for _, vs in bucket:
            for u in vs:
                if u != v and u not in scope:
                    scope.append(u)
        n = int(np.prod([sizes[u] for u in scope], dtype=np.int64)) if scope else 1
        if n > budget:
            raise ResourceError(
                f"intermediate tensor of {n} entries exceeds budget {budget}"
            )
        ops.append((_einsum(bucket, scope), tuple(scope)))
    n = int(np.prod([sizes[u] for u in keep], dtype=np.int64)) if keep else 1
    if n > budget:
        raise ResourceError(f"result tensor of {n} entries exceeds budget {budget}")
    if not ops:
        return np.ones(tuple(sizes[u] for u in keep), dtype=np.complex128)
    return _einsum(ops, list(keep))


def exterior_function(
    g: FactorGraph,
    box: Iterable[int] | None = None,
    order: Sequence[int] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> np.ndarray:
    """Close a box: multiply its factors and sum out its internal variables.

    Args:
        g: the graph.
        box: factor indices inside the box; ``None`` means every factor,
            which yields the exterior function of the whole graph (half edges
            stick out).
        order: elimination order over the internal variables.  Any
            permutation gives the same result up to rounding; the default is
            :func:`elimination_order`.
        budget: maximum number of entries of any intermediate tensor.

    Returns:
        A tensor whose axes are the boundary variables in ascending id order.
    """
    box = _check_box(g, box)
    keep = boundary_variables(g, box)
    internal = set(internal_variables(g, box))
    if order is None:
        order = elimination_order(g, keep, box)
    else:
        order = [int(v) for v in order]
        if len(set(order)) != len(order) or set(order) != internal:
            raise ArgumentError(
                f"order must be a permutation of the internal variables {sorted(internal)}"
            )
    ops = [(g.factors[i].tensor, g.factors[i].vars) for i in box]
    return _eliminate(ops, g.variables, keep, order, budget)


def partition_sum(g: FactorGraph, budget: int = DEFAULT_BUDGET) -> complex:
    """Sum of the product of all factors over all variables, half edges included.

    Variables not attached to any factor are ignored.
    """
    ops = [(f.tensor, f.vars) for f in g.factors]
    scopes = [set(vs) for _, vs in ops]
    allv = set().union(*scopes) if scopes else set()
    order = _greedy_order(scopes, g.variables, allv)
    return complex(_eliminate(ops, g.variables, [], order, budget))


def brute_force_exterior(
    g: FactorGraph,
    box: Iterable[int] | None = None,
    guard: int = DEFAULT_ENUM_GUARD,
    sum_half_edges: bool = False,
) -> np.ndarray:
    """Exterior function by exhaustive enumeration.

    For every assignment of the boundary variables, the product of all factor
    values is summed over every assignment of the internal variables in a
    single flat loop (numpy's unoptimized einsum), with no intermediate
    tensors.  With ``sum_half_edges=True`` and ``box=None`` this is the
    partition sum.

    Raises:
        ResourceError: if the number of joint configurations exceeds
            ``guard`` or the graph is too large for a flat enumeration.
    """
    box = _check_box(g, box)
    keep = [] if sum_half_edges else boundary_variables(g, box)
    counts = _attachment_counts(g, box)
    # the flat loop visits every joint assignment of boundary and internal variables
    n_total = int(np.prod([float(g.size(v)) for v in counts])) if counts else 1
    if n_total > guard:
        raise ResourceError(f"{n_total} configurations exceed enumeration guard {guard}")
    if len(box) > 60 or len(counts) > 52:
        raise ResourceError("graph too large for flat enumeration")
    if not box:
        return np.ones((), dtype=np.complex128)
    labels = {v: i for i, v in enumerate(sorted(counts))}
    args = []
    for i in box:
        f = g.factors[i]
        args.append(f.tensor)
        args.append([labels[v] for v in f.vars])
    args.append([labels[v] for v in keep])
    return np.einsum(*args, optimize=False)


def clamp(g: FactorGraph, v: int, value: int) -> FactorGraph:
    """Return a copy of ``g`` with variable ``v`` fixed to ``value``.

    A one-hot factor is attached to ``v``.  If ``v`` already has two
    attachments, its second attachment is moved to a fresh copy of ``v`` and
    both are joined through a degree-3 equality factor whose third port
    carries the one-hot factor.
    """
    if v not in g.variables:
        raise ArgumentError(f"unknown variable {v}")
    size = g.size(v)
    value = int(value)
    if not 0 <= value < size:
        raise ArgumentError(f"value {value} out of range for alphabet size {size}")
    delta = np.zeros(size, dtype=np.complex128)
    delta[value] = 1.0
    out = g.copy()
    if g.degree(v) < 2:
        out.add_factor(delta, [v], name=f"clamp[{v}={value}]")
        return out
    # split the edge: rewire the second attachment of v onto v2
    v2 = out.add_variable(size)
    v3 = out.add_variable(size)
    seen = 0
    for i, f in enumerate(out._factors):
        if v not in f.vars:
            continue
        new_vars = []
        for u in f.vars:
            if u == v:
                seen += 1
                new_vars.append(v2 if seen == 2 else v)
            else:
                new_vars.append(u)
        if seen >= 2:
            out._factors[i] = Factor(f.tensor, tuple(new_vars), f.name)
            break
    out._degree[v] = 1
    out._degree[v2] = 1
    from .gates import equality_tensor

    out.add_factor(equality_tensor(3, size), [v, v2, v3], name="=")
    out.add_factor(delta, [v3], name=f"clamp[{v}={value}]")
    return out


def close_box(g: FactorGraph, box: Iterable[int], order: Sequence[int] | None = None) -> tuple[FactorGraph, int]:
    """Replace the factors of ``box`` by a single factor, their exterior function.

    Returns:
        ``(new_graph, index)`` where ``index`` is the position of the new
        factor.  Factors outside the box keep their relative order and come
        first.
    """
    box = _check_box(g, box)
    ext = exterior_function(g, box, order)
    keep = boundary_variables(g, box)
    internal = set(internal_variables(g, box))
    out = FactorGraph()
    for v, s in g.variables.items():
        if v not in internal:
            out.add_variable(s, g.name(v), var_id=v)
    for i, f in enumerate(g.factors):
        if i not in box:
            out.add_factor(f.tensor, f.vars, f.name)
    idx = out.add_factor(ext, keep, name="closed")
    return out, idx
