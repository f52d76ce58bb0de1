"""Monte Carlo estimation of partition sums of complex-valued factor graphs.

A configuration assigns a value to every variable attached to some factor;
its weight ``f(x)`` is the product of all factor entries.  Samples are drawn
from the annealed family ``p(x; rho) ~ |f(x)|**rho``: ``rho = 0`` is the
uniform scheme, ``rho = 1`` the ``|f|`` scheme.  With ``Z_rho`` the normalizer
of the sampling density, every estimator here has the form

    Z  ~  Z_rho * mean(f(x) * |f(x)|**(-rho)),

which is the plain mean of ``f`` for the uniform scheme and the mean phase
``f/|f|`` for the ``|f|`` scheme.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Literal, Sequence

import numpy as np

from .errors import (
    ArgumentError,
    DomainError,
    ResourceError,
    SchemeMismatchError,
    StructureError,
)
from .graph import FactorGraph, _einsum
from .tensor import DEFAULT_TOL, Tolerance, max_abs

Scheme = Literal["uniform", "abs_f", "abs_f_annealed"]
ENUM_GUARD = 10**7


def _attached(g: FactorGraph) -> list[int]:
    return sorted({v for f in g.factors for v in f.vars})


def weights(g: FactorGraph, configs: np.ndarray, variables: Sequence[int]) -> np.ndarray:
    """``f(x)`` for each row of ``configs`` (columns ordered as ``variables``)."""
    configs = np.asarray(configs, dtype=np.int64)
    col = {v: i for i, v in enumerate(variables)}
    out = np.ones(configs.shape[0], dtype=np.complex128)
    for f in g.factors:
        idx = tuple(configs[:, col[v]] for v in f.vars)
        out *= f.tensor[idx]
    return out


def full_table(g: FactorGraph, guard: int = ENUM_GUARD) -> tuple[np.ndarray, list[int]]:
    """The weight of every configuration, axes in ascending variable id."""
    variables = _attached(g)
    n = int(np.prod([g.size(v) for v in variables], dtype=np.int64)) if variables else 1
    if n > guard:
        raise ResourceError(f"{n} configurations exceed the enumeration guard {guard}")
    ops = [(f.tensor, f.vars) for f in g.factors]
    if not ops:
        return np.ones(()), []
    return _einsum(ops, variables), variables


def _proposal_weights(f: np.ndarray, rho: float) -> np.ndarray:
    a = np.abs(f)
    if rho == 0:
        return np.ones_like(a)
    return a**rho


@dataclass
class SampleSet:
    """Sampled configurations and their weights.

    ``configs[k, i]`` is the value of ``variables[i]`` in sample ``k``.
    After conjugate augmentation rows ``2k`` and ``2k + 1`` form a pair.
    """

    configs: np.ndarray
    values: np.ndarray
    variables: list[int]
    scheme: Scheme
    rho: float
    seed: int
    method: str = "exact"
    burn_in: int = 0
    thin: int = 1
    augmented: bool = False

    @property
    def K(self) -> int:
        return self.configs.shape[0]


def _scheme_rho(scheme: Scheme, rho: float | None) -> float:
    if scheme == "uniform":
        return 0.0
    if scheme == "abs_f":
        return 1.0
    if scheme == "abs_f_annealed":
        if rho is None or not 0 < rho < 1:
            raise ArgumentError(f"annealing exponent must lie in (0, 1), got {rho}")
        return float(rho)
    raise ArgumentError(f"unknown sampling scheme {scheme!r}")


def _resolve_seed(seed) -> int:
    if seed is None:
        return int(np.random.SeedSequence().entropy)
    return int(seed)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.default_rng(seed)
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def sample(
    g: FactorGraph,
    scheme: Scheme = "abs_f",
    K: int = 10_000,
    seed: int | None = None,
    rho: float | None = None,
    method: Literal["auto", "exact", "metropolis"] = "auto",
    burn_in: int = 1000,
    thin: int = 10,
    guard: int = ENUM_GUARD,
    _seed_seq: np.random.SeedSequence | None = None,
) -> SampleSet:
    """Draw ``K`` configurations from the chosen scheme.

    Exact mode enumerates the weight table and samples i.i.d. by inverse
    CDF.  Metropolis mode uses single-site uniform proposals and keeps every
    ``thin``-th state after ``burn_in`` sweeps of single-site moves.
    ``auto`` picks exact whenever the table fits under ``guard``.

    Raises:
        DomainError: ``|f|`` vanishes everywhere.
    """
    if K < 1:
        raise ArgumentError("K must be positive")
    r = _scheme_rho(scheme, rho)
    seed = _resolve_seed(seed)
    rng = _rng(_seed_seq if _seed_seq is not None else seed)
    variables = _attached(g)
    sizes = np.array([g.size(v) for v in variables], dtype=np.int64)
    n_conf = int(np.prod(sizes)) if len(sizes) else 1
    if method == "auto":
        method = "exact" if n_conf <= guard else "metropolis"
    if r == 0:
        configs = rng.integers(0, sizes, size=(K, len(sizes))) if len(sizes) else np.zeros((K, 0), np.int64)
        return SampleSet(configs, weights(g, configs, variables), variables, scheme, r, seed, "exact")
    if method == "exact":
        table, _ = full_table(g, guard)
        w = _proposal_weights(table.ravel(), r)
        total = w.sum()
        if total == 0:
            raise DomainError("|f| vanishes on every configuration")
        cdf = np.cumsum(w) / total
        idx = np.searchsorted(cdf, rng.random(K), side="right")
        idx = np.minimum(idx, w.size - 1)
        configs = np.stack(np.unravel_index(idx, tuple(sizes)), axis=1) if len(sizes) else np.zeros((K, 0), np.int64)
        return SampleSet(configs, table.ravel()[idx], variables, scheme, r, seed, "exact")
    if method != "metropolis":
        raise ArgumentError(f"unknown sampling method {method!r}")
    return _metropolis(g, variables, sizes, r, K, rng, seed, scheme, burn_in, thin)


def _metropolis(g, variables, sizes, r, K, rng, seed, scheme, burn_in, thin, max_tries=10_000):
    n = len(sizes)
    x = None
    for _ in range(max_tries):
        cand = rng.integers(0, sizes)
        if abs(weights(g, cand[None], variables)[0]) > 0:
            x = cand
            break
    if x is None:
        raise DomainError("no configuration with nonzero |f| found for the Metropolis start")
    fx = weights(g, x[None], variables)[0]
    wx = abs(fx) ** r
    configs = np.empty((K, n), dtype=np.int64)
    values = np.empty(K, dtype=np.complex128)
    total = burn_in + K * thin
    for step in range(total):
        i = rng.integers(n)
        y = x.copy()
        y[i] = rng.integers(sizes[i])
        fy = weights(g, y[None], variables)[0]
        wy = abs(fy) ** r
        if wy >= wx or rng.random() * wx < wy:
            x, fx, wx = y, fy, wy
        k = step - burn_in
        if k >= 0 and (k + 1) % thin == 0:
            configs[k // thin] = x
            values[k // thin] = fx
    return SampleSet(configs, values, list(variables), scheme, r, seed, "metropolis", burn_in, thin)


def augment_conjugate(
    s: SampleSet,
    g: FactorGraph,
    mirror_pairs: Sequence[tuple[int, int]],
    tol: Tolerance = DEFAULT_TOL,
) -> SampleSet:
    """Join every sample with its upper/lower mirror image.

    Variables not listed in ``mirror_pairs`` keep their value.  The mirror
    configuration has the same ``|f|``, so the augmented set is still a
    sample from the same scheme.

    Raises:
        StructureError: the pairs do not describe a conjugate mirror of the
            graph (some swapped weight is not the conjugate of the original).
    """
    if s.augmented:
        raise StructureError("sample set is already augmented")
    col = {v: i for i, v in enumerate(s.variables)}
    if not mirror_pairs:
        raise StructureError("no mirror pairs given")
    perm = np.arange(len(s.variables))
    for u, low in mirror_pairs:
        if u not in col or low not in col:
            raise StructureError(f"mirror pair {(u, low)} is not part of the sampled configuration")
        if g.size(u) != g.size(low):
            raise StructureError(f"mirror pair {(u, low)} has mismatched alphabets")
        perm[col[u]], perm[col[low]] = col[low], col[u]
    mirrored = s.configs[:, perm]
    mv = weights(g, mirrored, s.variables)
    dev = max_abs(mv - s.values.conj())
    if dev > tol.bound(max_abs(s.values)):
        raise StructureError(f"mirror weights are not conjugate (deviation {dev:.3g})")
    configs = np.empty((2 * s.K, len(s.variables)), dtype=np.int64)
    configs[0::2] = s.configs
    configs[1::2] = mirrored
    values = np.empty(2 * s.K, dtype=np.complex128)
    values[0::2] = s.values
    values[1::2] = mv
    return replace(s, configs=configs, values=values, augmented=True)


@dataclass
class EstimatorReport:
    estimate: complex
    std_error: float
    K: int
    scheme: str
    seed: int
    conjugate_augmented: bool = False
    rho: float = 0.0
    method: str = "exact"
    burn_in: int = 0
    thin: int = 1
    z_proposal: float | None = None
    z_proposal_source: str = "exact"
    positive_sum: float = 0.0
    negative_sum: float = 0.0
    levels: list[float] = field(default_factory=list)
    level_ratios: list[float] = field(default_factory=list)

    def __post_init__(self):
        if not self.std_error >= 0:
            raise DomainError(f"standard error must be nonnegative, got {self.std_error}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["estimate"] = [self.estimate.real, self.estimate.imag]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorReport":
        d = dict(d)
        re, im = d.pop("estimate")
        return cls(estimate=complex(re, im), **d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _summands(s: SampleSet) -> np.ndarray:
    """Per-sample terms ``f |f|**(-rho)``; conjugate pairs are averaged into real terms."""
    f = s.values
    a = np.abs(f)
    if s.rho == 0:
        t = f
    else:
        t = np.divide(f, a**s.rho, out=np.zeros_like(f), where=a > 0)
    if s.augmented:
        # pairs are conjugate (checked on augmentation), so the mean is real
        t = (0.5 * (t[0::2] + t[1::2])).real.astype(np.complex128)
    return t


def _z_of_level(g: FactorGraph, rho: float, guard: int) -> float:
    if rho == 0:
        return float(np.prod([g.size(v) for v in _attached(g)]))
    table, _ = full_table(g, guard)
    return float(_proposal_weights(table.ravel(), rho).sum())


def estimate_Z(
    s: SampleSet,
    g: FactorGraph,
    z_proposal: float | Literal["exact", "reciprocal"] | None = None,
    expect_scheme: Scheme | None = None,
    guard: int = ENUM_GUARD,
) -> EstimatorReport:
    """Estimate the partition sum from a sample set.

    Args:
        s: samples; their scheme determines the estimator.
        g: the graph the samples were drawn from.
        z_proposal: normalizer of the sampling density.  Ignored for the
            uniform scheme (it is the number of configurations).  Otherwise
            ``"exact"`` enumerates it, ``"reciprocal"`` estimates ``Z_|f|``
            from the reciprocal sum ``mean(1/|f|) = |X| / Z_|f|`` (valid when
            ``f`` has no zeros), or a number supplies it.  There is no
            default: the caller chooses.
        expect_scheme: if given, the scheme the caller's estimator requires.

    Raises:
        SchemeMismatchError: the samples do not match ``g`` or
            ``expect_scheme``, or the reciprocal estimator is requested for
            a scheme other than ``abs_f``.
    """
    if expect_scheme is not None and s.scheme != expect_scheme:
        raise SchemeMismatchError(f"estimator requires {expect_scheme!r} samples, got {s.scheme!r}")
    if s.variables != _attached(g):
        raise SchemeMismatchError("samples were not drawn from this graph")
    head = s.configs[:64]
    sizes = np.array([g.size(v) for v in s.variables])
    ref = s.values[:64]
    if np.any(head >= sizes) or max_abs(weights(g, head, s.variables) - ref) > DEFAULT_TOL.bound(max_abs(ref)):
        raise SchemeMismatchError("sample weights do not match this graph")
    t = _summands(s)
    n = t.size
    source = "exact"
    rel_var_z = 0.0
    if s.rho == 0:
        z = _z_of_level(g, 0.0, guard)
    elif z_proposal is None:
        raise ArgumentError("z_proposal must be 'exact', 'reciprocal' or a number for this scheme")
    elif z_proposal == "exact":
        z = _z_of_level(g, s.rho, guard)
    elif z_proposal == "reciprocal":
        if s.rho != 1:
            raise SchemeMismatchError("reciprocal estimate of Z_|f| needs samples from |f|")
        a = np.abs(s.values)
        if np.any(a == 0):
            raise DomainError("reciprocal estimate needs nonzero weights")
        inv = 1.0 / a
        if s.augmented:
            inv = 0.5 * (inv[0::2] + inv[1::2])
        size_x = _z_of_level(g, 0.0, guard)
        z = size_x / inv.mean()
        rel_var_z = inv.var(ddof=1) / (n * inv.mean() ** 2) if n > 1 else 0.0
        source = "reciprocal"
    else:
        z = float(z_proposal)
        source = "given"
    mean = t.mean()
    est = complex(z * mean)
    var_t = (np.var(t.real, ddof=1) + np.var(t.imag, ddof=1)) if n > 1 else 0.0
    se = float(np.sqrt(z**2 * var_t / n + abs(est) ** 2 * rel_var_z))
    real = t.real
    return EstimatorReport(
        estimate=est,
        std_error=se,
        K=int(n),
        scheme=s.scheme,
        seed=s.seed,
        conjugate_augmented=s.augmented,
        rho=s.rho,
        method=s.method,
        burn_in=s.burn_in,
        thin=s.thin,
        z_proposal=float(z),
        z_proposal_source=source,
        positive_sum=float(z * real[real > 0].sum() / n),
        negative_sum=float(z * real[real < 0].sum() / n),
    )


def anneal_ladder(
    g: FactorGraph,
    rho_list: Sequence[float],
    K: int = 10_000,
    seed: int | None = None,
    mirror_pairs: Sequence[tuple[int, int]] | None = None,
    method: Literal["auto", "exact", "metropolis"] = "auto",
    burn_in: int = 1000,
    thin: int = 10,
    guard: int = ENUM_GUARD,
) -> EstimatorReport:
    """Estimate ``Z`` through a ladder of annealed distributions.

    Levels are ``0 < rho_1 < ... < 1`` with 0 and 1 added at the ends.
    ``Z_0`` is the number of configurations; each ratio
    ``Z_{i+1} / Z_i = E_{rho_i}[|f|**(rho_{i+1} - rho_i)]`` is estimated from
    ``K`` samples at level ``i``, and the telescoping product gives
    ``Z_|f|``.  A final phase estimate at ``rho = 1`` turns it into ``Z``.
    Each level draws from its own seed spawned from ``seed``.

    Raises:
        ArgumentError: the ladder is not strictly increasing inside (0, 1).
    """
    rho_list = [float(r) for r in rho_list]
    levels = [0.0] + rho_list + [1.0]
    if any(not b > a for a, b in zip(levels, levels[1:])):
        raise ArgumentError(f"ladder must be strictly increasing inside (0, 1), got {rho_list}")
    seed = _resolve_seed(seed)
    streams = np.random.SeedSequence(seed).spawn(len(levels))
    log_z = np.log(_z_of_level(g, 0.0, guard))
    rel_var = 0.0
    ratios = []
    for i, (a, b) in enumerate(zip(levels, levels[1:])):
        scheme = "uniform" if a == 0 else "abs_f_annealed"
        s = sample(g, scheme, K, seed, rho=a if a else None, method=method,
                   burn_in=burn_in, thin=thin, guard=guard, _seed_seq=streams[i])
        r = np.abs(s.values) ** (b - a)
        if a == 0:
            r = np.where(np.abs(s.values) > 0, r, 0.0)
        m = r.mean()
        if m <= 0:
            raise DomainError(f"ladder ratio at level {a} vanished")
        ratios.append(float(m))
        log_z += np.log(m)
        rel_var += r.var(ddof=1) / (K * m**2) if K > 1 else 0.0
    z_abs = float(np.exp(log_z))
    s = sample(g, "abs_f", K, seed, method=method, burn_in=burn_in, thin=thin,
               guard=guard, _seed_seq=streams[-1])
    if mirror_pairs:
        s = augment_conjugate(s, g, mirror_pairs)
    rep = estimate_Z(s, g, z_proposal=z_abs, guard=guard)
    se = float(np.sqrt(rep.std_error**2 + abs(rep.estimate) ** 2 * rel_var))
    return replace(
        rep,
        std_error=se,
        seed=seed,
        z_proposal_source="ladder",
        levels=levels,
        level_ratios=ratios,
    )


def merge_reports(reports: Sequence[EstimatorReport]) -> EstimatorReport:
    """Pool independent reports of one scheme by sample-count weighting."""
    if not reports:
        raise ArgumentError("nothing to merge")
    first = reports[0]
    if any(r.scheme != first.scheme or r.rho != first.rho for r in reports):
        raise SchemeMismatchError("cannot merge reports of different schemes")
    k = np.array([r.K for r in reports], dtype=float)
    w = k / k.sum()
    est = complex(np.sum(w * np.array([r.estimate for r in reports])))
    se = float(np.sqrt(np.sum((w * np.array([r.std_error for r in reports])) ** 2)))
    return replace(
        first,
        estimate=est,
        std_error=se,
        K=int(k.sum()),
        positive_sum=float(np.sum(w * np.array([r.positive_sum for r in reports]))),
        negative_sum=float(np.sum(w * np.array([r.negative_sum for r in reports]))),
    )
