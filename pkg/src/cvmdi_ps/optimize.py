"""Parameter searches over the protocol configuration.

Deterministic coarse-grid plus golden-section maximisation of the key
rate over the subtraction beam-splitter transmittance, bisection for
the tolerable excess noise and for the maximum distance, and the
scheme plumbing (who subtracts, how the relay sits between the
parties) shared by the CLI and the test-suite.

Every evaluation is a pure function of the configuration, so grids can
be farmed out freely; nothing here draws random numbers.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass, replace

from .errors import DomainError, NoPositiveRate
from .keyrate import KeyRateBreakdown, key_rate, plob_bound
from .protocol import AttackModel, LinkParams
from .subtraction import SourceParams

# A configuration is "alive" at a distance if it clears this rate floor.
KEY_RATE_FLOOR = 1e-8

# Transmittance search: coarse grid step, then golden-section refinement
# until the bracket is narrower than the tolerance.
TPS_GRID_STEP = 0.005
TPS_REFINE_TOL = 1e-4

# Bisection brackets.
DISTANCE_TOL_KM = 0.01
NOISE_TOL = 1e-6

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class Scheme(enum.Enum):
    NONE = "none"
    ALICE = "alice"
    BOB = "bob"
    BOTH = "both"


class Geometry(enum.Enum):
    EXTREME_ASYMMETRIC = "extreme-asymmetric"
    SYMMETRIC = "symmetric"


@dataclass(frozen=True)
class Scenario:
    """Full protocol configuration minus the swept variable.

    ``tps_a``/``tps_b`` of None means "optimise at every evaluation".
    Distances handed to the evaluation functions are read per the
    geometry: the Alice-relay span for the extreme asymmetric layout
    (relay at Bob), or the total Alice-Bob span, split evenly, for the
    symmetric layout.
    """

    scheme: Scheme = Scheme.NONE
    k: int = 1
    v_a: float = 40.0
    v_b: float = 40.0
    tps_a: float | None = None
    tps_b: float | None = None
    eps: float = 0.002
    beta: float = 0.95
    loss_db_per_km: float = 0.2
    geometry: Geometry = Geometry.EXTREME_ASYMMETRIC
    attack: AttackModel = AttackModel()

    @property
    def alice_subtracts(self) -> bool:
        return self.scheme in (Scheme.ALICE, Scheme.BOTH)

    @property
    def bob_subtracts(self) -> bool:
        return self.scheme in (Scheme.BOB, Scheme.BOTH)


@dataclass(frozen=True)
class RatePoint:
    """One evaluated operating point, annotated for emission."""

    distance_km: float
    rate: KeyRateBreakdown
    tps_a: float
    tps_b: float
    plob: float


@dataclass(frozen=True)
class ScanRow:
    t_ps: float
    rate: KeyRateBreakdown


@dataclass(frozen=True)
class OptimumReport:
    """Result of a transmittance search.

    ``positive`` is False when the rate is non-positive over the whole
    grid; ``argmax`` is then None and ``value`` 0.
    """

    argmax: float | None
    value: float
    positive: bool
    scan: tuple[ScanRow, ...]


@dataclass(frozen=True)
class SweepResult:
    variable: str
    rows: tuple[RatePoint, ...]


def link_at(scn: Scenario, distance_km: float) -> LinkParams:
    if distance_km < 0.0:
        raise DomainError(f"distance must be >= 0 km, got {distance_km!r}")
    if scn.geometry is Geometry.SYMMETRIC:
        l_ac = l_bc = distance_km / 2.0
    else:
        l_ac, l_bc = distance_km, 0.0
    return LinkParams(
        l_ac_km=l_ac,
        l_bc_km=l_bc,
        loss_db_per_km=scn.loss_db_per_km,
        eps_a=scn.eps,
        eps_b=scn.eps,
    )


def _sources(scn: Scenario, tps_a: float, tps_b: float):
    src_a = SourceParams(
        v=scn.v_a,
        k=scn.k if scn.alice_subtracts else 0,
        t_ps=tps_a if scn.alice_subtracts else 1.0,
    )
    src_b = SourceParams(
        v=scn.v_b,
        k=scn.k if scn.bob_subtracts else 0,
        t_ps=tps_b if scn.bob_subtracts else 1.0,
    )
    return src_a, src_b


def rate_fixed(
    scn: Scenario, distance_km: float, tps_a: float = 1.0, tps_b: float = 1.0
) -> KeyRateBreakdown:
    """Evaluate the rate with explicitly resolved transmittances."""
    src_a, src_b = _sources(scn, tps_a, tps_b)
    return key_rate(src_a, src_b, link_at(scn, distance_km), scn.attack, scn.beta)


def _golden_max(f, lo: float, hi: float, tol: float):
    x1 = hi - _INVPHI * (hi - lo)
    x2 = lo + _INVPHI * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = f(x1)
    xm = 0.5 * (lo + hi)
    return xm, f(xm)


def _tps_grid():
    n = int(round(1.0 / TPS_GRID_STEP))
    return [min(1.0, (i + 1) * TPS_GRID_STEP) for i in range(n)]


def _best_tps(objective):
    """Maximise a smooth objective of t_ps over (0, 1].

    Coarse grid (so multiple local maxima are not silently missed), then
    golden-section refinement around every coarse local maximum; the
    best refined candidate wins, never worse than the grid itself.
    Returns (argmax, value, grid_values).
    """
    grid = _tps_grid()
    vals = [objective(t) for t in grid]
    best_t, best_v = max(zip(grid, vals), key=lambda tv: tv[1])
    candidates = [(best_t, best_v)]
    n = len(grid)
    for i, v in enumerate(vals):
        left = vals[i - 1] if i > 0 else -math.inf
        right = vals[i + 1] if i < n - 1 else -math.inf
        if v >= left and v >= right:
            lo = grid[i - 1] if i > 0 else grid[0] / 2.0
            hi = grid[i + 1] if i < n - 1 else 1.0
            candidates.append(_golden_max(objective, lo, hi, TPS_REFINE_TOL))
    t_star, v_star = max(candidates, key=lambda tv: tv[1])
    return t_star, v_star, list(zip(grid, vals))


def _resolve_tps(scn: Scenario, distance_km: float):
    """Fill in optimal transmittances wherever the scenario leaves them open.

    The objective is the signed raw rate, which coincides with the final
    key rate whenever the latter is positive and still gives bisection a
    usable sign when it is not.
    """
    need_a = scn.alice_subtracts and scn.tps_a is None
    need_b = scn.bob_subtracts and scn.tps_b is None
    tps_a = scn.tps_a if scn.alice_subtracts and scn.tps_a is not None else 1.0
    tps_b = scn.tps_b if scn.bob_subtracts and scn.tps_b is not None else 1.0

    if need_a and need_b:
        # Nested search: coarse outer grid on Bob's tap, full inner search
        # on Alice's, then a golden pass on the outer variable.
        def inner_best(tb):
            t, v, _ = _best_tps(lambda ta: rate_fixed(scn, distance_km, ta, tb).raw_rate)
            return t, v

        outer_step = 0.02
        outer_grid = [min(1.0, (i + 1) * outer_step) for i in range(int(round(1.0 / outer_step)))]
        outer = [(tb,) + inner_best(tb) for tb in outer_grid]
        tb_best, ta_best, v_best = max(outer, key=lambda row: row[2])
        lo = max(outer_step / 2.0, tb_best - outer_step)
        hi = min(1.0, tb_best + outer_step)
        tb_ref, v_ref = _golden_max(lambda tb: inner_best(tb)[1], lo, hi, 1e-3)
        if v_ref > v_best:
            tb_best = tb_ref
            ta_best, _ = inner_best(tb_best)
        return ta_best, tb_best
    if need_a:
        ta, _, _ = _best_tps(lambda t: rate_fixed(scn, distance_km, t, tps_b).raw_rate)
        return ta, tps_b
    if need_b:
        tb, _, _ = _best_tps(lambda t: rate_fixed(scn, distance_km, tps_a, t).raw_rate)
        return tps_a, tb
    return tps_a, tps_b


def plob_at(scn: Scenario, distance_km: float) -> float:
    """PLOB bound over the total Alice-Bob span; +inf for a lossless span."""
    link = link_at(scn, distance_km)
    t_total = 10.0 ** (-scn.loss_db_per_km * (link.l_ac_km + link.l_bc_km) / 10.0)
    if t_total >= 1.0:
        return math.inf
    return plob_bound(t_total)


def rate_at(scn: Scenario, distance_km: float) -> RatePoint:
    """Rate at one distance, optimising open transmittances."""
    tps_a, tps_b = _resolve_tps(scn, distance_km)
    breakdown = rate_fixed(scn, distance_km, tps_a, tps_b)
    return RatePoint(
        distance_km=distance_km,
        rate=breakdown,
        tps_a=tps_a,
        tps_b=tps_b,
        plob=plob_at(scn, distance_km),
    )


def sweep_distances(scn: Scenario, distances, map_fn=None) -> SweepResult:
    """Evaluate a distance grid into a SweepResult.

    ``map_fn`` lets callers substitute a parallel map; points are
    independent and the row order follows ``distances`` either way.
    """
    points = list((map_fn or map)(functools.partial(rate_at, scn), list(distances)))
    return SweepResult(variable="distance_km", rows=tuple(points))


def optimal_tps(scn: Scenario, distance_km: float, k: int, party: str) -> OptimumReport:
    """Search the subtraction transmittance of one party at a fixed distance.

    ``party`` is "alice" or "bob"; the scenario's scheme is overridden so
    that the named party subtracts ``k`` photons.  The other party keeps
    its configuration (its open transmittance, if any, is resolved first
    and then held).
    """
    if party not in ("alice", "bob"):
        raise DomainError(f"party must be 'alice' or 'bob', got {party!r}")
    if k < 1:
        raise DomainError(f"transmittance search needs k >= 1, got {k!r}")
    if party == "alice":
        scheme = Scheme.BOTH if scn.bob_subtracts else Scheme.ALICE
        base = replace(scn, scheme=scheme, k=k, tps_a=None)
        # Resolve Bob's open transmittance, if any, against a plain Alice
        # source so the probe objective is not identically zero.
        probe = replace(base, scheme=Scheme.BOB if scn.bob_subtracts else Scheme.NONE)
        _, other_b = _resolve_tps(probe, distance_km)
        evaluate = lambda t: rate_fixed(base, distance_km, t, other_b)
    else:
        scheme = Scheme.BOTH if scn.alice_subtracts else Scheme.BOB
        base = replace(scn, scheme=scheme, k=k, tps_b=None)
        probe = replace(base, scheme=Scheme.ALICE if scn.alice_subtracts else Scheme.NONE)
        other_a, _ = _resolve_tps(probe, distance_km)
        evaluate = lambda t: rate_fixed(base, distance_km, other_a, t)

    t_star, v_star, grid_vals = _best_tps(lambda t: evaluate(t).raw_rate)
    scan = tuple(ScanRow(t_ps=t, rate=evaluate(t)) for t, _ in grid_vals)
    if v_star <= 0.0:
        return OptimumReport(argmax=None, value=0.0, positive=False, scan=scan)
    return OptimumReport(argmax=t_star, value=v_star, positive=True, scan=scan)


def max_distance(scn: Scenario) -> float:
    """Largest distance with key rate >= KEY_RATE_FLOOR, to 0.01 km.

    Bisection on the signed raw rate; raises NoPositiveRate when the
    configuration is already below the floor at zero distance.
    """
    def margin(d):
        return rate_at(scn, d).rate.raw_rate - KEY_RATE_FLOOR

    if margin(0.0) < 0.0:
        raise NoPositiveRate("key rate below the reporting floor at zero distance")
    lo, hi = 0.0, 10.0
    while margin(hi) > 0.0:
        lo, hi = hi, hi * 2.0
        if hi > 16000.0:
            return math.inf
    while hi - lo > DISTANCE_TOL_KM:
        mid = 0.5 * (lo + hi)
        if margin(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def tolerable_excess_noise(
    scn: Scenario, distance_km: float, reoptimize: bool = True
) -> float:
    """Excess noise (applied to both links) that drives the rate to zero.

    Bisection on the signed raw rate until the bracket is narrower than
    NOISE_TOL.  With ``reoptimize`` (the default) open transmittances are
    re-optimised at every probed noise value; otherwise they are resolved
    once at the scenario's base noise and then held.
    """
    base = scn
    if not reoptimize:
        tps_a, tps_b = _resolve_tps(scn, distance_km)
        base = replace(scn, tps_a=tps_a, tps_b=tps_b)

    def raw(eps):
        return rate_at(replace(base, eps=eps), distance_km).rate.raw_rate

    if raw(0.0) <= 0.0:
        raise NoPositiveRate("rate is non-positive even for noiseless links")
    lo, hi = 0.0, 0.01
    while raw(hi) > 0.0:
        lo, hi = hi, hi * 2.0
        if hi > 64.0:
            return math.inf
    while hi - lo > NOISE_TOL:
        mid = 0.5 * (lo + hi)
        if raw(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
