"""Monte Carlo lower bounds for worst-case expectations via control search.

The representation behind this module: the worst-case expectation is a
supremum of classical expectations over admissible controls, each control
choosing at every instant a triple (v, p, Q) from the uncertainty set. The
estimator restricts the search to deterministic piecewise-constant policies,
evaluates each candidate by Monte Carlo on scenarios shared across candidates
(common random numbers) and reports the best candidate mean. The result is a
lower bound up to Monte Carlo error; enlarging the candidate list at a fixed
seed can only increase it, because scenarios depend on the uncertainty set
and the seed alone.

Jump randomness uses a single base jump process for all measures in the set.
Atoms of each measure are ranked by decreasing modulus and laid out on a mass
axis; the union of all cut points defines base segments, and a segment maps
under measure v to the atom of v whose mass interval contains it (segments
beyond the total mass of v produce no jump). Scenario jumps carry a uniform
mass coordinate, so relabeling a scenario to any measure of the set is exact:
the pushforward of the base onto v recovers v atom by atom. This mirrors the
nested-shell transport of :mod:`glevy.uncertainty` in discrete form.

Randomness is drawn from counter-based Philox streams keyed by (master seed,
path index), jump draws before Brownian draws, reductions in fixed index
order; repeated runs with identical inputs are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import AssumptionError, InvalidInputError, PolicyError
from .paths import CadlagPath
from .regions import Region
from .uncertainty import DiscreteLevyMeasure, UncertaintySet

__all__ = [
    "BaseJumpModel",
    "BaseScenario",
    "ExplicitControl",
    "ControlPolicy",
    "EstimateResult",
    "ErlangCheckResult",
    "constant_policies",
    "draw_scenario",
    "simulate_path",
    "estimate_upper_expectation",
    "estimate_capacity",
    "erlang_bound_check",
]


# ---------------------------------------------------------------------------
# base jump model: one mass axis shared by every measure of the set
# ---------------------------------------------------------------------------


def _ranked(measure: DiscreteLevyMeasure) -> np.ndarray:
    """Atom order used on the mass axis: decreasing modulus, ties by location."""
    mags = np.linalg.norm(measure.atoms, axis=1)
    keys = [measure.atoms[:, k] for k in range(measure.dim - 1, -1, -1)]
    return np.lexsort(tuple(keys) + (-mags,))


@dataclass(frozen=True)
class BaseJumpModel:
    """Common refinement of the mass layouts of all measures in the set."""

    cuts: np.ndarray  # (K+1,) cumulative mass cut points, cuts[0] = 0
    locations: np.ndarray  # (K, d) representative base marks
    targets: np.ndarray  # (n_triples, K, d) relabeled jump sizes
    active: np.ndarray  # (n_triples, K) whether the segment jumps at all

    @property
    def budget(self) -> float:
        return float(self.cuts[-1])

    @property
    def n_segments(self) -> int:
        return self.locations.shape[0]

    @staticmethod
    def from_uncertainty(uset: UncertaintySet) -> "BaseJumpModel":
        if len(uset) == 0:
            raise InvalidInputError("uncertainty set is empty")
        d = uset.dim
        layouts = []  # per triple: (cumulative bounds, ranked atoms)
        cut_values = [0.0]
        for t in uset:
            order = _ranked(t.measure)
            cum = np.concatenate([[0.0], np.cumsum(t.measure.weights[order])])
            layouts.append((cum, t.measure.atoms[order]))
            cut_values.extend(cum[1:].tolist())
        cuts = np.unique(np.asarray(cut_values, dtype=float))
        K = cuts.shape[0] - 1
        targets = np.zeros((len(uset), max(K, 0), d))
        active = np.zeros((len(uset), max(K, 0)), dtype=bool)
        locations = np.zeros((max(K, 0), d))
        loc_set = np.zeros(max(K, 0), dtype=bool)
        mids = 0.5 * (cuts[:-1] + cuts[1:]) if K else np.empty(0)
        for j, (cum, atoms) in enumerate(layouts):
            if atoms.shape[0] == 0 or K == 0:
                continue
            idx = np.searchsorted(cum, mids, side="right") - 1
            inside = (mids < cum[-1]) & (idx >= 0) & (idx < atoms.shape[0])
            targets[j, inside] = atoms[idx[inside]]
            active[j, inside] = True
            newly = inside & ~loc_set
            locations[newly] = atoms[idx[newly]]
            loc_set |= inside
        return BaseJumpModel(cuts=cuts, locations=locations, targets=targets, active=active)

    def segments_of(self, mass_coords: np.ndarray) -> np.ndarray:
        return np.clip(np.searchsorted(self.cuts, mass_coords, side="right") - 1, 0, self.n_segments - 1)

    def pushforward(self, triple_index: int) -> DiscreteLevyMeasure:
        """Measure realized by relabeling the base onto the given triple; exact."""
        masses = np.diff(self.cuts)
        act = self.active[triple_index]
        if not act.any():
            return DiscreteLevyMeasure.empty(self.locations.shape[1])
        tgt = self.targets[triple_index][act]
        w = masses[act]
        uniq, inv = np.unique(tgt, axis=0, return_inverse=True)
        weights = np.zeros(uniq.shape[0])
        np.add.at(weights, inv, w)
        return DiscreteLevyMeasure(uniq, weights)


# ---------------------------------------------------------------------------
# scenarios
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaseScenario:
    """One draw of shared randomness: base jumps plus optional Brownian grid."""

    horizon: float
    model: BaseJumpModel
    jump_times: np.ndarray  # (n,) sorted
    jump_mass_coords: np.ndarray  # (n,) uniforms on [0, budget)
    jump_segments: np.ndarray  # (n,) ints
    brownian_times: np.ndarray | None = None  # (M+1,) uniform grid incl. endpoints
    brownian_increments: np.ndarray | None = None  # (M, d) N(0, dt) per coordinate


def draw_scenario(
    model: BaseJumpModel,
    horizon: float,
    rng: np.random.Generator,
    *,
    with_brownian: bool = False,
    brownian_dt: float = 0.01,
    dim: int = 1,
) -> BaseScenario:
    """Draw one scenario; jump randomness first, Brownian last.

    Keeping the draw order fixed means scenarios agree between runs that do
    and do not consume the Brownian block, which preserves determinism when a
    candidate list changes its diffusion needs.
    """
    if horizon <= 0.0:
        raise InvalidInputError("horizon must be positive")
    budget = model.budget
    n = int(rng.poisson(budget * horizon)) if budget > 0.0 else 0
    times = np.sort(rng.uniform(0.0, horizon, n))
    coords = rng.uniform(0.0, budget, n) if n else np.empty(0)
    segments = model.segments_of(coords) if n else np.empty(0, dtype=int)
    bt = bi = None
    if with_brownian:
        m = max(1, int(math.ceil(horizon / brownian_dt - 1e-12)))
        bt = np.linspace(0.0, horizon, m + 1)
        bi = rng.normal(0.0, math.sqrt(horizon / m), size=(m, dim))
    return BaseScenario(
        horizon=float(horizon),
        model=model,
        jump_times=times,
        jump_mass_coords=coords,
        jump_segments=segments,
        brownian_times=bt,
        brownian_increments=bi,
    )


# ---------------------------------------------------------------------------
# control policies
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExplicitControl:
    """Direct mark relabeling: base atom value -> target jump size, d = 1.

    The relabeled measure must coincide with some measure of the uncertainty
    set and the attached (drift, cov_root) must match that triple; this is
    checked when the policy is compiled against the set.
    """

    mark_map: dict
    drift: float = 0.0
    cov_root: float = 0.0


@dataclass(frozen=True)
class ControlPolicy:
    """Piecewise-constant control on (breakpoints[0], breakpoints[-1]].

    ``values[i]`` applies on the half-open-from-the-left interval
    (breakpoints[i], breakpoints[i+1]]; each value is a triple index into the
    uncertainty set or an :class:`ExplicitControl`.
    """

    breakpoints: np.ndarray
    values: tuple

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        if bp.shape[0] < 2 or np.any(np.diff(bp) <= 0.0):
            raise PolicyError("breakpoints must be strictly increasing with at least two entries")
        if len(self.values) != bp.shape[0] - 1:
            raise PolicyError("need exactly one control value per interval")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", tuple(self.values))

    @staticmethod
    def constant(value, start: float, end: float) -> "ControlPolicy":
        return ControlPolicy(np.array([start, end]), (value,))

    def interval_of(self, t: float) -> int:
        bp = self.breakpoints
        if not (bp[0] < t <= bp[-1]):
            raise PolicyError(f"time {t} is not covered by the policy")
        return int(np.searchsorted(bp, t, side="left") - 1)

    def check_covers(self, start: float, end: float) -> None:
        if self.breakpoints[0] > start + 1e-12 or self.breakpoints[-1] < end - 1e-12:
            raise PolicyError(
                f"policy covers ({self.breakpoints[0]}, {self.breakpoints[-1]}] "
                f"but ({start}, {end}] is required"
            )


def constant_policies(uset: UncertaintySet, horizon: float, start: float = 0.0) -> list[ControlPolicy]:
    """One constant policy per enumerated triple, the default candidate grid."""
    return [ControlPolicy.constant(i, start, horizon) for i in range(len(uset))]


class _CompiledValue(NamedTuple):
    targets: np.ndarray  # (K, d)
    active: np.ndarray  # (K,)
    drift: np.ndarray  # (d,)
    cov_root: np.ndarray  # (d, d)


def _compile_value(value, uset: UncertaintySet, model: BaseJumpModel) -> _CompiledValue:
    if isinstance(value, (int, np.integer)):
        i = int(value)
        if not (0 <= i < len(uset)):
            raise PolicyError(f"triple index {i} outside the uncertainty set")
        t = uset.triples[i]
        return _CompiledValue(model.targets[i], model.active[i], t.drift, t.cov_root)
    if isinstance(value, ExplicitControl):
        d = uset.dim
        if d != 1:
            raise PolicyError("explicit mark maps are one-dimensional")
        K = model.n_segments
        targets = np.zeros((K, d))
        active = np.zeros(K, dtype=bool)
        keys = np.array(sorted(value.mark_map), dtype=float)
        vals = np.array([value.mark_map[k] for k in sorted(value.mark_map)], dtype=float)
        for s in range(K):
            loc = model.locations[s, 0]
            hit = np.nonzero(np.abs(keys - loc) <= 1e-12)[0]
            if hit.shape[0] and vals[hit[0]] != 0.0:
                targets[s, 0] = vals[hit[0]]
                active[s] = True
        masses = np.diff(model.cuts)
        if active.any():
            tgt = targets[active]
            uniq, inv = np.unique(tgt, axis=0, return_inverse=True)
            weights = np.zeros(uniq.shape[0])
            np.add.at(weights, inv, masses[active])
            pushed = DiscreteLevyMeasure(uniq, weights)
        else:
            pushed = DiscreteLevyMeasure.empty(d)
        drift = np.atleast_1d(np.asarray(value.drift, dtype=float))
        cov = np.atleast_2d(np.asarray(value.cov_root, dtype=float))
        for t in uset:
            if (
                t.measure.same_as(pushed)
                and np.allclose(t.drift, drift, atol=1e-12, rtol=0.0)
                and np.allclose(t.cov_root, cov, atol=1e-12, rtol=0.0)
            ):
                return _CompiledValue(targets, active, t.drift, t.cov_root)
        raise PolicyError("explicit control does not realize any triple of the uncertainty set")
    raise PolicyError(f"unsupported control value {value!r}")


class _CompiledPolicy(NamedTuple):
    breakpoints: np.ndarray
    values: tuple[_CompiledValue, ...]
    needs_brownian: bool


def _compile_policy(policy: ControlPolicy, uset: UncertaintySet, model: BaseJumpModel) -> _CompiledPolicy:
    values = tuple(_compile_value(v, uset, model) for v in policy.values)
    needs = any(np.any(v.cov_root != 0.0) for v in values)
    return _CompiledPolicy(policy.breakpoints, values, needs)


# ---------------------------------------------------------------------------
# path construction
# ---------------------------------------------------------------------------


def _build_path(scenario: BaseScenario, compiled: _CompiledPolicy, start: float, horizon: float) -> CadlagPath:
    d = scenario.model.locations.shape[1]
    bp = compiled.breakpoints

    # continuous part: exact piecewise-linear drift, plus Euler diffusion when present
    if compiled.needs_brownian:
        if scenario.brownian_times is None:
            raise PolicyError("policy needs Brownian increments but the scenario has none")
        bt = scenario.brownian_times
        inc = scenario.brownian_increments
        times = [0.0]
        vals = [np.zeros(d)]
        if start > 0.0:
            times.append(start)
            vals.append(np.zeros(d))
        x = np.zeros(d)
        for m in range(bt.shape[0] - 1):
            t_lo, t_hi = float(bt[m]), float(bt[m + 1])
            if t_hi <= start:
                continue
            t_lo = max(t_lo, start)
            if t_lo >= horizon:
                break
            t_hi = min(t_hi, horizon)
            v = compiled.values[min(int(np.searchsorted(bp, t_lo, side="right") - 1), len(compiled.values) - 1)]
            dt_cell = t_hi - t_lo
            # partial boundary cells reuse the cell's normal draw, rescaled to
            # the correct variance
            scale = math.sqrt(dt_cell / (bt[m + 1] - bt[m]))
            x = x + v.drift * dt_cell + (v.cov_root @ inc[m]) * scale
            if times[-1] != t_hi:
                times.append(t_hi)
                vals.append(x)
        if times[-1] != horizon:
            times.append(horizon)
            vals.append(x)
        grid_times = np.array(times)
        grid_values = np.vstack(vals)
    else:
        knots = [start] + [float(b) for b in bp if start < b < horizon] + [horizon]
        times = [0.0]
        vals = [np.zeros(d)]
        if start > 0.0:
            times.append(start)
            vals.append(np.zeros(d))
        x = np.zeros(d)
        for lo, hi in zip(knots[:-1], knots[1:]):
            v = compiled.values[min(int(np.searchsorted(bp, lo, side="right") - 1), len(compiled.values) - 1)]
            x = x + v.drift * (hi - lo)
            times.append(hi)
            vals.append(x)
        grid_times = np.array(times)
        grid_values = np.vstack(vals)

    # jumps: relabel scenario marks through the active control value
    jt: list[float] = []
    js: list[np.ndarray] = []
    for t, seg in zip(scenario.jump_times, scenario.jump_segments):
        if not (start < t <= horizon):
            continue
        v = compiled.values[min(int(np.searchsorted(bp, t, side="left") - 1), len(compiled.values) - 1)]
        if v.active[seg]:
            z = v.targets[seg]
            if jt and t == jt[-1]:
                js[-1] = js[-1] + z
            else:
                jt.append(float(t))
                js.append(z)
    jtimes = np.array(jt)
    jsizes = np.vstack(js) if js else np.empty((0, d))
    nz = np.linalg.norm(jsizes, axis=1) > 0.0 if jsizes.shape[0] else np.empty(0, dtype=bool)
    return CadlagPath(horizon, grid_times, grid_values, jtimes[nz] if jtimes.shape[0] else jtimes, jsizes[nz] if jsizes.shape[0] else jsizes)


def simulate_path(
    scenario: BaseScenario,
    policy: ControlPolicy,
    uset: UncertaintySet,
    start: float = 0.0,
    horizon: float | None = None,
) -> CadlagPath:
    """Realize one controlled path from shared scenario randomness.

    The policy must cover (start, horizon]; its values must lie in the
    admissible set (triple indices do by construction, explicit mark maps are
    checked). Drift integrates exactly; diffusion uses the scenario's Euler
    grid with the control frozen at the left endpoint of each cell.
    """
    T = scenario.horizon if horizon is None else float(horizon)
    if not (0.0 <= start < T <= scenario.horizon):
        raise InvalidInputError("need 0 <= start < horizon <= scenario horizon")
    policy.check_covers(start, T)
    compiled = _compile_policy(policy, uset, scenario.model)
    return _build_path(scenario, compiled, start, T)


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


class EstimateResult(NamedTuple):
    value: float
    std_error: float
    argmax: int


def _path_stream(seed: int, path_index: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(path_index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def estimate_upper_expectation(
    xi: Callable[[CadlagPath], float],
    uset: UncertaintySet,
    candidates: Sequence[ControlPolicy],
    n_paths: int,
    seed: int,
    *,
    horizon: float,
    brownian_dt: float = 0.01,
) -> EstimateResult:
    """Best candidate mean of xi under common random numbers; a lower bound.

    The candidate policies are evaluated on identical scenarios drawn from
    per-path Philox streams keyed by (seed, path index); the reported standard
    error is that of the winning candidate. Ties in the maximum go to the
    lowest candidate index. The value estimates the worst-case expectation
    from below (finitely many controls, finitely many paths).
    """
    if n_paths < 2:
        raise InvalidInputError("need at least two paths for a standard error")
    if len(candidates) == 0:
        raise InvalidInputError("need at least one candidate policy")
    for c in candidates:
        c.check_covers(0.0, horizon)
    model = BaseJumpModel.from_uncertainty(uset)
    compiled = [_compile_policy(c, uset, model) for c in candidates]
    needs_brownian = any(c.needs_brownian for c in compiled)
    dim = uset.dim

    sums = np.zeros(len(candidates))
    sumsq = np.zeros(len(candidates))
    for p in range(n_paths):
        rng = _path_stream(seed, p)
        scenario = draw_scenario(
            model, horizon, rng, with_brownian=needs_brownian, brownian_dt=brownian_dt, dim=dim
        )
        for ci, comp in enumerate(compiled):
            val = float(xi(_build_path(scenario, comp, 0.0, horizon)))
            sums[ci] += val
            sumsq[ci] += val * val
    means = sums / n_paths
    winner = int(np.argmax(means))
    var = max(sumsq[winner] / n_paths - means[winner] ** 2, 0.0) * n_paths / (n_paths - 1)
    return EstimateResult(float(means[winner]), float(math.sqrt(var / n_paths)), winner)


def estimate_capacity(
    event: Callable[[CadlagPath], bool],
    uset: UncertaintySet,
    candidates: Sequence[ControlPolicy],
    n_paths: int,
    seed: int,
    *,
    horizon: float,
    brownian_dt: float = 0.01,
) -> EstimateResult:
    """Worst-case probability of a path event, from below; value in [0, 1]."""
    return estimate_upper_expectation(
        lambda path: 1.0 if event(path) else 0.0,
        uset,
        candidates,
        n_paths,
        seed,
        horizon=horizon,
        brownian_dt=brownian_dt,
    )


# ---------------------------------------------------------------------------
# capacity bound for the k-th jump in a region
# ---------------------------------------------------------------------------


class ErlangCheckResult(NamedTuple):
    mc_capacity: float
    std_error: float
    analytic_bound: float
    passes: bool
    horizon: float


def erlang_bound_check(
    uset: UncertaintySet,
    region_a: Region,
    region_b: Region,
    k: int,
    time_window: tuple[float, float],
    n_paths: int,
    seed: int,
) -> ErlangCheckResult:
    """Compare the MC capacity of the k-th region-A jump event to its bound.

    The event is: the k-th jump with size in A exists, its size lies in B and
    its time falls in the window. The analytic lower bound is

        max over v of  v(B intersect A) / v(A) * Erlang_{k, mean k/v(A)}(window),

    requiring v(A) > 0 for every measure. The MC estimate uses one constant
    policy per triple; it passes when it is no more than three standard
    errors below the bound. An unbounded window is truncated at the furthest
    1 - 1e-8 Erlang quantile, far below the statistical slack.
    """
    if k < 1:
        raise InvalidInputError("k must be a positive integer")
    c0, c1 = float(time_window[0]), float(time_window[1])
    if not (0.0 <= c0 < c1):
        raise InvalidInputError("time window must satisfy 0 <= c0 < c1")

    bound = 0.0
    horizon = c1
    for t in uset:
        m = t.measure
        mass_a = m.mass_in(region_a)
        if mass_a <= 0.0:
            raise AssumptionError("every measure must charge region A")
        in_both = m.mask_in(region_a) & m.mask_in(region_b)
        mass_ab = float(m.weights[in_both].sum())
        erl = stats.gamma(a=k, scale=1.0 / mass_a)
        bound = max(bound, (mass_ab / mass_a) * float(erl.cdf(c1) - erl.cdf(c0)))
        if not math.isfinite(c1):
            horizon = max(horizon if math.isfinite(horizon) else 0.0, float(erl.ppf(1.0 - 1e-8)))
    if not math.isfinite(horizon):
        raise InvalidInputError("could not truncate the unbounded time window")

    def event(path: CadlagPath) -> bool:
        if path.n_jumps == 0:
            return False
        hits = region_a.contains(path.jump_sizes)
        idx = np.nonzero(hits)[0]
        if idx.shape[0] < k:
            return False
        j = idx[k - 1]
        tk = float(path.jump_times[j])
        return bool(region_b.contains(path.jump_sizes[j])) and (c0 <= tk <= c1)

    est = estimate_capacity(
        event,
        uset,
        constant_policies(uset, horizon),
        n_paths,
        seed,
        horizon=horizon,
    )
    passes = est.value >= bound - 3.0 * est.std_error
    return ErlangCheckResult(est.value, est.std_error, float(bound), bool(passes), horizon)
