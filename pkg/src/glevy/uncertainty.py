"""Uncertainty sets of Levy triples and operations on their jump-measure family.

A model is a triple (v, p, Q): a finite discrete Levy measure v (atoms away
from the origin with positive weights), a drift vector p and a covariance root
Q. An uncertainty set is a finite enumeration of such triples, either given
directly or produced by evaluating a parametric rule on a grid over a parameter
box. The worst-case functionals implemented here are suprema over that
enumeration:

    capacity      c^V(A)        = sup_v v(A)
    sup integral  sup_v
                  int_A phi dv  = sup_v sum_{z in A} phi(z) v({z})
    uniform bound sup (int |z| v(dz) + |p| + tr QQ^T)

all of which are exact finite maxima here. The module also builds the
measure-transport map used to realize a target v as the image of a reference
measure mu on (0, infinity): atoms are ranked by decreasing modulus and
assigned nested tail shells of mu whose masses telescope to the atom weights,
so the pushforward is exact by construction and jumps of size >= eps can only
come from reference marks bounded away from zero (the separation property).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import EvaluationError, InvalidInputError, UnsupportedError
from .regions import Region

__all__ = [
    "DiscreteLevyMeasure",
    "LevyTriple",
    "UncertaintySet",
    "ValidationReport",
    "SupResult",
    "InverseSquareTail",
    "TransportMap",
    "Shell",
    "validate",
    "v_capacity",
    "sup_integral",
    "transport_map",
    "uncertainty_set_from_config",
]


# ---------------------------------------------------------------------------
# measures and triples
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiscreteLevyMeasure:
    """Finite discrete measure sum_i w_i delta_{z_i} with z_i != 0, w_i > 0.

    ``atoms`` is an (n, d) array of pairwise distinct locations, ``weights`` a
    matching vector of strictly positive finite masses. The empty measure
    (n = 0) is allowed and represents zero jump activity.
    """

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms.reshape(-1, 1)
        if atoms.ndim != 2:
            raise InvalidInputError("atoms must form an (n, d) array")
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if weights.shape[0] != atoms.shape[0]:
            raise InvalidInputError("atoms and weights must have equal length")
        if not np.all(np.isfinite(atoms)):
            raise InvalidInputError("atom locations must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise InvalidInputError("weights must be finite and strictly positive")
        if atoms.shape[0] and np.any(np.linalg.norm(atoms, axis=1) == 0.0):
            raise InvalidInputError("atoms must avoid the origin")
        if atoms.shape[0] != np.unique(atoms, axis=0).shape[0]:
            raise InvalidInputError("atom locations must be pairwise distinct")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @staticmethod
    def from_pairs(pairs: Sequence[tuple[float, float]]) -> "DiscreteLevyMeasure":
        """One-dimensional constructor from (location, weight) pairs."""
        if len(pairs) == 0:
            return DiscreteLevyMeasure.empty(1)
        zs = np.array([p[0] for p in pairs], dtype=float)
        ws = np.array([p[1] for p in pairs], dtype=float)
        return DiscreteLevyMeasure(zs.reshape(-1, 1), ws)

    @staticmethod
    def delta(z, weight: float = 1.0) -> "DiscreteLevyMeasure":
        a = np.atleast_1d(np.asarray(z, dtype=float)).reshape(1, -1)
        return DiscreteLevyMeasure(a, np.array([weight]))

    @staticmethod
    def empty(dim: int = 1) -> "DiscreteLevyMeasure":
        return DiscreteLevyMeasure(np.empty((0, dim)), np.empty(0))

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @property
    def mean(self) -> np.ndarray:
        """First moment sum_i w_i z_i, a (d,) vector."""
        if self.n_atoms == 0:
            return np.zeros(self.dim)
        return self.weights @ self.atoms

    def mask_in(self, region: Region | None) -> np.ndarray:
        if region is None or self.n_atoms == 0:
            return np.ones(self.n_atoms, dtype=bool)
        return region.contains(self.atoms)

    def mass_in(self, region: Region | None) -> float:
        return float(self.weights[self.mask_in(region)].sum())

    def integrate(self, phi: Callable, region: Region | None = None) -> float:
        """sum over atoms in the region of phi(z) * w, phi scalar-valued.

        For d = 1 the atom is passed to phi as a float. Non-finite values
        raise :class:`EvaluationError`.
        """
        mask = self.mask_in(region)
        total = 0.0
        for z, w in zip(self.atoms[mask], self.weights[mask]):
            arg = float(z[0]) if self.dim == 1 else z
            val = phi(arg)
            v = float(val)
            if not math.isfinite(v):
                raise EvaluationError(f"integrand returned non-finite value {val!r} at atom {arg!r}")
            total += v * w
        return total

    def restrict(self, region: Region | None) -> "DiscreteLevyMeasure":
        mask = self.mask_in(region)
        if not mask.any():
            return DiscreteLevyMeasure.empty(self.dim)
        return DiscreteLevyMeasure(self.atoms[mask], self.weights[mask])

    def same_as(self, other: "DiscreteLevyMeasure", tol: float = 1e-12) -> bool:
        """Equality of atom/weight tables up to reordering and tolerance."""
        if self.dim != other.dim or self.n_atoms != other.n_atoms:
            return False
        order_a = np.lexsort(self.atoms.T[::-1])
        order_b = np.lexsort(other.atoms.T[::-1])
        return bool(
            np.allclose(self.atoms[order_a], other.atoms[order_b], atol=tol, rtol=0.0)
            and np.allclose(self.weights[order_a], other.weights[order_b], atol=tol, rtol=0.0)
        )


def _vec(x, dim: int, name: str) -> np.ndarray:
    a = np.atleast_1d(np.asarray(x, dtype=float))
    if a.shape == (1,) and dim > 1:
        a = np.full(dim, a[0])
    if a.shape != (dim,):
        raise InvalidInputError(f"{name} must be a scalar or a ({dim},) vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be finite")
    return a


def _mat(x, dim: int, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim == 0:
        a = np.eye(dim) * float(a)
    if a.shape != (dim, dim):
        raise InvalidInputError(f"{name} must be a scalar or a ({dim}, {dim}) matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be finite")
    return a


@dataclass(frozen=True)
class LevyTriple:
    """One model (v, p, Q): jump measure, drift vector, covariance root."""

    measure: DiscreteLevyMeasure
    drift: np.ndarray = 0.0
    cov_root: np.ndarray = 0.0

    def __post_init__(self):
        d = self.measure.dim
        object.__setattr__(self, "drift", _vec(self.drift, d, "drift"))
        object.__setattr__(self, "cov_root", _mat(self.cov_root, d, "cov_root"))

    @property
    def dim(self) -> int:
        return self.measure.dim

    @property
    def drift1(self) -> float:
        """Scalar drift, valid for d = 1."""
        return float(self.drift[0])

    @property
    def cov_root1(self) -> float:
        """Scalar covariance root, valid for d = 1."""
        return float(self.cov_root[0, 0])

    @property
    def diffusion_trace(self) -> float:
        return float(np.trace(self.cov_root @ self.cov_root.T))

    @property
    def size_bound(self) -> float:
        """int |z| v(dz) + |p| + tr QQ^T, the summand of the uniform bound."""
        m = self.measure
        jump = float((m.weights * np.linalg.norm(m.atoms, axis=1)).sum()) if m.n_atoms else 0.0
        return jump + float(np.linalg.norm(self.drift)) + self.diffusion_trace


@dataclass(frozen=True)
class UncertaintySet:
    """Finite enumeration of Levy triples.

    The measure family V is the projection onto first components, kept in
    enumeration order (duplicates are harmless for suprema). Construction from
    a parametric rule evaluates the rule on a full grid over the parameter box
    in row-major order over sorted parameter names, so enumeration order is
    reproducible.
    """

    triples: tuple[LevyTriple, ...]

    def __post_init__(self):
        triples = tuple(self.triples)
        if not triples:
            raise InvalidInputError("uncertainty set needs at least one triple")
        dims = {t.dim for t in triples}
        if len(dims) > 1:
            raise InvalidInputError(f"mixed dimensions in uncertainty set: {sorted(dims)}")
        object.__setattr__(self, "triples", triples)

    @staticmethod
    def from_measures(measures: Sequence[DiscreteLevyMeasure], drift=0.0, cov_root=0.0) -> "UncertaintySet":
        return UncertaintySet(tuple(LevyTriple(m, drift, cov_root) for m in measures))

    @staticmethod
    def from_rule(
        param_ranges: dict[str, tuple[float, float]],
        counts: dict[str, int],
        rule: Callable[..., LevyTriple],
    ) -> "UncertaintySet":
        names = sorted(param_ranges)
        axes = []
        for name in names:
            lo, hi = param_ranges[name]
            n = counts[name]
            if n < 1:
                raise InvalidInputError(f"grid count for {name!r} must be >= 1")
            axes.append(np.linspace(lo, hi, n) if n > 1 else np.array([0.5 * (lo + hi)]))
        triples = []
        for combo in itertools.product(*axes):
            triples.append(rule(**dict(zip(names, (float(c) for c in combo)))))
        return UncertaintySet(tuple(triples))

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)

    @property
    def dim(self) -> int:
        if not self.triples:
            raise InvalidInputError("empty uncertainty set has no dimension")
        return self.triples[0].dim

    @property
    def measures(self) -> list[DiscreteLevyMeasure]:
        return [t.measure for t in self.triples]

    @property
    def is_singleton_measure(self) -> bool:
        ms = self.measures
        return len(ms) > 0 and all(m.same_as(ms[0]) for m in ms[1:])


def _measure_family(family) -> list[DiscreteLevyMeasure]:
    if isinstance(family, UncertaintySet):
        ms = family.measures
    elif isinstance(family, DiscreteLevyMeasure):
        ms = [family]
    else:
        ms = list(family)
    if not ms:
        raise InvalidInputError("measure family is empty")
    return ms


# ---------------------------------------------------------------------------
# worst-case functionals
# ---------------------------------------------------------------------------


class SupResult(NamedTuple):
    """Supremum value together with the first attaining enumeration index."""

    value: float
    argmax: int


def v_capacity(family, region: Region) -> SupResult:
    """sup_v v(A) over the measure family, exact; empty region gives 0."""
    ms = _measure_family(family)
    vals = [m.mass_in(region) for m in ms]
    idx = int(np.argmax(vals))
    return SupResult(float(vals[idx]), idx)


def sup_integral(family, phi: Callable, region: Region | None = None) -> SupResult:
    """sup_v sum_{z in A} phi(z) v({z}) over the family, exact finite max."""
    ms = _measure_family(family)
    vals = [m.integrate(phi, region) for m in ms]
    idx = int(np.argmax(vals))
    return SupResult(float(vals[idx]), idx)


@dataclass(frozen=True)
class ValidationReport:
    """Finiteness report for the three standing integrability suprema.

    ``uniform_bound`` is sup over triples of int |z| dv + |p| + tr QQ^T;
    ``small_jump_moment`` is sup_v of the |z|^q mass on 0 < |z| < 1;
    ``large_jump_moment`` is sup_v of the |z|^p mass on |z| >= 1. Non-finite
    values are reported through the flags rather than raised.
    """

    q: float
    p: float
    uniform_bound: float
    small_jump_moment: float
    large_jump_moment: float
    uniform_bound_ok: bool
    small_jump_ok: bool
    large_jump_ok: bool

    @property
    def ok(self) -> bool:
        return self.uniform_bound_ok and self.small_jump_ok and self.large_jump_ok

    def as_dict(self) -> dict:
        return {
            "q": self.q,
            "p": self.p,
            "uniform_bound": self.uniform_bound,
            "small_jump_moment": self.small_jump_moment,
            "large_jump_moment": self.large_jump_moment,
            "uniform_bound_ok": self.uniform_bound_ok,
            "small_jump_ok": self.small_jump_ok,
            "large_jump_ok": self.large_jump_ok,
            "ok": self.ok,
        }


def validate(uset: UncertaintySet, q: float, p: float) -> ValidationReport:
    """Evaluate the three uniform moment suprema and flag non-finite ones.

    q must lie in (0, 1) (small-jump moment exponent) and p must exceed 1
    (large-jump moment exponent). An empty uncertainty set is invalid input.
    """
    if len(uset) == 0:
        raise InvalidInputError("cannot validate an empty uncertainty set")
    if not (0.0 < q < 1.0):
        raise InvalidInputError(f"q must lie in (0, 1), got {q}")
    if not (p > 1.0):
        raise InvalidInputError(f"p must exceed 1, got {p}")

    with np.errstate(over="ignore", invalid="ignore"):
        uniform = max(t.size_bound for t in uset)
        small = 0.0
        large = 0.0
        for m in uset.measures:
            if m.n_atoms == 0:
                continue
            r = np.linalg.norm(m.atoms, axis=1)
            small_mask = r < 1.0
            small = max(small, float((m.weights[small_mask] * r[small_mask] ** q).sum()))
            large_mask = ~small_mask
            large = max(large, float((m.weights[large_mask] * r[large_mask] ** p).sum()))

    return ValidationReport(
        q=q,
        p=p,
        uniform_bound=float(uniform),
        small_jump_moment=float(small),
        large_jump_moment=float(large),
        uniform_bound_ok=bool(math.isfinite(uniform)),
        small_jump_ok=bool(math.isfinite(small)),
        large_jump_ok=bool(math.isfinite(large)),
    )


# ---------------------------------------------------------------------------
# transport from a reference measure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InverseSquareTail:
    """Reference measure on (0, infinity) with density z^-2.

    Infinite total mass near the origin and tail function mu((eta, inf)) =
    1/eta, which is strictly decreasing with the explicit inverse 1/m. This is
    the default base for measure transport.
    """

    def tail(self, eta: float) -> float:
        if eta <= 0.0:
            return math.inf
        return 1.0 / eta

    def inverse_tail(self, mass: float) -> float:
        if mass <= 0.0:
            return math.inf
        return 1.0 / mass

    def describe(self) -> str:
        return "density z^-2 on (0, inf)"


class Shell(NamedTuple):
    """Half-open reference shell (lo, hi] mapped to a single target atom."""

    lo: float
    hi: float
    target: float
    weight: float


@dataclass(frozen=True)
class TransportMap:
    """Map g from (0, infinity) onto the atoms of a target measure.

    Atoms are ranked by decreasing modulus; the k-th atom receives the tail
    shell whose reference mass equals its weight, so shells are nested and the
    preimage of any modulus threshold is again a tail. Points outside every
    shell map to 0 (no jump).
    """

    base: InverseSquareTail
    shells: tuple[Shell, ...]

    def __call__(self, y) -> np.ndarray | float:
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.zeros_like(ys)
        for sh in self.shells:
            mask = (ys > sh.lo) & (ys <= sh.hi)
            out[mask] = sh.target
        return float(out[0]) if np.asarray(y).ndim == 0 else out

    @property
    def inner_radius(self) -> float:
        """Smallest shell bound; reference marks at or below it map to 0."""
        return self.shells[-1].lo if self.shells else math.inf

    def preimage_mass(self, target: float) -> float:
        """Reference mass of g^-1({target}), by exact tail arithmetic."""
        total = 0.0
        for sh in self.shells:
            if sh.target == target:
                total += self.base.tail(sh.lo) - self.base.tail(sh.hi)
        return total

    def separation_radius(self, eps: float) -> float:
        """Largest eta with g^-1({|z| >= eps}) contained in (eta, infinity)."""
        if eps <= 0.0:
            raise InvalidInputError("eps must be positive")
        eta = math.inf
        for sh in self.shells:
            if abs(sh.target) >= eps:
                eta = min(eta, sh.lo)
        return eta

    def pushforward_errors(self, v: DiscreteLevyMeasure) -> np.ndarray:
        """Per-atom |mu(g^-1({z_i})) - w_i|, should vanish to rounding."""
        return np.array(
            [abs(self.preimage_mass(float(z[0])) - w) for z, w in zip(v.atoms, v.weights)]
        )


def transport_map(v: DiscreteLevyMeasure, base: InverseSquareTail | None = None) -> TransportMap:
    """Build the nested-shell transport realizing v as an image of the base.

    Only one-dimensional targets are supported. A zero-mass (empty) target
    yields the constant-zero map. Distinct atoms may not share a location, so
    the map is well defined; ties in modulus between a negative and positive
    atom are broken by signed location for determinism.
    """
    if base is None:
        base = InverseSquareTail()
    if v.dim != 1:
        raise UnsupportedError("transport construction is implemented for d = 1 targets only")
    if v.n_atoms == 0:
        return TransportMap(base, ())

    zs = v.atoms[:, 0]
    order = np.lexsort((zs, -np.abs(zs)))
    shells = []
    hi = math.inf
    cum = 0.0
    for i in order:
        cum += float(v.weights[i])
        lo = base.inverse_tail(cum)
        shells.append(Shell(lo=lo, hi=hi, target=float(zs[i]), weight=float(v.weights[i])))
        hi = lo
    return TransportMap(base, tuple(shells))


# ---------------------------------------------------------------------------
# config loading
# ---------------------------------------------------------------------------


def _measure_from_config(doc) -> DiscreteLevyMeasure:
    if isinstance(doc, dict) and "atoms" in doc:
        pairs = [(float(a[0]), float(a[1])) for a in doc["atoms"]]
        return DiscreteLevyMeasure.from_pairs(pairs)
    if isinstance(doc, dict) and "locations" in doc:
        return DiscreteLevyMeasure(np.asarray(doc["locations"], dtype=float), np.asarray(doc["weights"], dtype=float))
    raise InvalidInputError(f"cannot parse measure config: {doc!r}")


_FAMILY_RULES: dict[str, Callable] = {}


def _family_rule(name: str):
    def deco(fn):
        _FAMILY_RULES[name] = fn
        return fn

    return deco


@_family_rule("scaled_point_mass")
def _rule_scaled_point_mass(*, location: float = 1.0, drift: float = 0.0, cov_root: float = 0.0, intensity: float):
    """intensity * delta_location; the intensity is the grid parameter."""
    return LevyTriple(DiscreteLevyMeasure.delta(location, intensity), drift, cov_root)


@_family_rule("moving_point_mass")
def _rule_moving_point_mass(*, weight: float = 1.0, drift: float = 0.0, cov_root: float = 0.0, location: float):
    """weight * delta_location; the location is the grid parameter."""
    return LevyTriple(DiscreteLevyMeasure.delta(location, weight), drift, cov_root)


@_family_rule("two_point_mixture")
def _rule_two_point_mixture(
    *,
    location_a: float = 1.0,
    location_b: float = 2.0,
    total_mass: float = 1.0,
    drift: float = 0.0,
    cov_root: float = 0.0,
    alpha: float,
):
    """total_mass * (alpha delta_a + (1 - alpha) delta_b); alpha on the grid."""
    return LevyTriple(
        DiscreteLevyMeasure.from_pairs(
            [(location_a, total_mass * alpha), (location_b, total_mass * (1.0 - alpha))]
        ),
        drift,
        cov_root,
    )


def uncertainty_set_from_config(doc: dict) -> UncertaintySet:
    """Build an uncertainty set from a nested config document.

    Two forms are accepted. Explicit enumeration::

        triples:
          - measure: {atoms: [[1.0, 2.0]]}
            drift: 0.0
            cov_root: 0.0

    Parametric family on a grid::

        family:
          rule: scaled_point_mass
          fixed: {location: 1.0}
          params:
            intensity: {min: 1.0, max: 2.0, count: 5}
    """
    if not isinstance(doc, dict):
        raise InvalidInputError("uncertainty config must be a mapping")
    if "triples" in doc:
        triples = []
        for t in doc["triples"]:
            triples.append(
                LevyTriple(
                    _measure_from_config(t["measure"]),
                    t.get("drift", 0.0),
                    t.get("cov_root", 0.0),
                )
            )
        return UncertaintySet(tuple(triples))
    if "family" in doc:
        fam = doc["family"]
        rule_name = fam.get("rule")
        if rule_name not in _FAMILY_RULES:
            raise InvalidInputError(f"unknown family rule {rule_name!r}; known: {sorted(_FAMILY_RULES)}")
        fixed = dict(fam.get("fixed", {}))
        params = fam.get("params", {})
        ranges = {k: (float(v["min"]), float(v["max"])) for k, v in params.items()}
        counts = {k: int(v["count"]) for k, v in params.items()}
        rule = _FAMILY_RULES[rule_name]
        return UncertaintySet.from_rule(ranges, counts, lambda **kw: rule(**fixed, **kw))
    raise InvalidInputError("uncertainty config needs a 'triples' or 'family' section")
