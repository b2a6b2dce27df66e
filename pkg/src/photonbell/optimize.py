"""Bell-value optimization, loss thresholds and certainty frontiers.

The optimization surface is the frame-averaged Bell value of the
shared-amplitude strategy: every party measures the same two amplitudes
(r, r') at a single local phase, the unknown frame offsets carry the phase
freedom, and the free parameters are the two amplitudes plus (optionally)
the N-1 offset centers.  Amplitudes are searched over signed values: a
negative amplitude flips that setting's displacement (a pi phase advance
on one setting only), which enlarges the reachable Bell values well beyond
the nonnegative quadrant at no extra parameter cost.  The search is a
derivative-free simplex descent restarted from a low-discrepancy set of
starting points inside the bounds.

The objective is evaluated through a closed-form shortcut: averaging over
independent Gaussian offsets factorizes onto each non-reference party's
off-diagonal matrix elements (E[exp(+-i Delta_l)] = exp(+-i c_l - w^2/2)),
so the averaged table equals a numeric correlator table with damped
observables, with no symbolic work inside the hot loop.  The equivalence
with the symbolic-average route is exact and is enforced by tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .experiments import (
    best_pair_values_over_centers,
    pair_symbolic_tables,
    paired_strategy,
)
from .fock_core import (
    TWO_PI,
    ConsistencyError,
    DisplacementSetting,
    ModeObservable,
    correlator,
    displacement_observable,
    lossy_w_state,
)
from .wwzb import CorrelatorTable, wwzb_value

__all__ = [
    "OptimizationSpec",
    "OptimumReport",
    "ThresholdResult",
    "averaged_correlator_table",
    "certainty_frontier",
    "maximize_bell",
    "threshold_efficiency",
]

AMPLITUDE_BOUNDS = (-3.0, 3.0)

# Simplex starts are drawn from |r| <= START_AMPLITUDE: coherence terms
# scale like r*exp(-r^2), so beyond this the surface is an S=1 plateau
# with no slope for a simplex to follow.  The walk itself may still leave
# the start region, up to the amplitude bounds.
START_AMPLITUDE = 1.2

# Slack allowed before the coarse-grid monotonicity check calls a search
# failure: restarts leave residual jitter well below this.
MONOTONICITY_SLACK = 1e-5


@dataclass(frozen=True)
class OptimizationSpec:
    """Free parameters and stopping rules for :func:`maximize_bell`.

    ``optimize_phases`` selects whether the N-1 offset centers are searched
    jointly with the amplitudes or pinned to zero (for the permutation-
    symmetric states used here both give the same optimum; the pinned mode
    is much cheaper for many parties).  ``shared_amplitudes`` is the normal,
    reduced search space (one signed amplitude pair for all parties);
    setting it False gives every party its own signed pair, a 2N-parameter
    spot check that the reduction loses nothing, supported for at most
    three parties.
    """

    n_parties: int
    width: float
    efficiency: float = 1.0
    optimize_phases: bool = True
    shared_amplitudes: bool = True
    amplitude_bounds: tuple = AMPLITUDE_BOUNDS
    restarts: int = 8
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.n_parties < 1:
            raise ValueError("n_parties must be >= 1")
        if not np.isfinite(self.width) or self.width < 0.0:
            raise ValueError("width must be finite and >= 0")
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in [0, 1]")
        if not self.shared_amplitudes and self.n_parties > 3:
            raise ValueError("per-party amplitudes supported for n_parties <= 3")
        lo, hi = self.amplitude_bounds
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError("amplitude bounds must be finite with lo < hi")
        object.__setattr__(self, "amplitude_bounds", (float(lo), float(hi)))
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tolerance <= 0.0:
            raise ValueError("tolerance must be > 0")


@dataclass(frozen=True)
class OptimumReport:
    """Best point found by :func:`maximize_bell`.

    ``r`` and ``r_prime`` are the signed shared amplitudes (party 1's pair
    in the per-party mode, where ``party_amplitudes`` holds every party's
    pair; it is None in the shared mode).
    """

    best_s: float
    r: float
    r_prime: float
    phase_centers: tuple
    converged: bool
    evaluations: int
    party_amplitudes: tuple = None

    def to_json_dict(self) -> dict:
        out = {
            "best_s": float(self.best_s),
            "r": float(self.r),
            "r_prime": float(self.r_prime),
            "phase_centers": [float(c) for c in self.phase_centers],
            "converged": bool(self.converged),
            "evaluations": int(self.evaluations),
        }
        if self.party_amplitudes is not None:
            out["party_amplitudes"] = [
                [float(a), float(b)] for a, b in self.party_amplitudes
            ]
        return out


@dataclass(frozen=True)
class ThresholdResult:
    """Threshold efficiency; violable=False means not even eta=1 violates."""

    efficiency: float
    violable: bool


def _dressed_pair(r0: float, r1: float, center: float, width: float):
    """Two averaged observables for a non-reference party.

    Zero-mean Gaussian frame noise of the given width multiplies both
    off-diagonal entries by exp(-width^2/2); the center shifts their phase.
    Amplitudes are signed (a negative one is a pi-flipped setting).  The
    dressed matrix stays Hermitian with spectrum inside [-1, 1].
    """
    damp = np.exp(-0.5 * width * width)
    dressed = []
    for r in (r0, r1):
        setting = DisplacementSetting.from_signed(r)
        mat = np.array(displacement_observable(setting).matrix)
        mat[0, 1] *= damp * np.exp(-1j * center)
        mat[1, 0] *= damp * np.exp(1j * center)
        dressed.append(ModeObservable(mat))
    return dressed


def _per_party_amplitudes(n_parties: int, r0, r1):
    """Broadcast scalar-or-sequence amplitude arguments to per-party pairs."""
    pairs = []
    for name, value in (("r0", r0), ("r1", r1)):
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            arr = np.full(n_parties, float(arr))
        elif arr.shape != (n_parties,):
            raise ValueError(f"{name} must be a scalar or one value per party")
        pairs.append(arr)
    return pairs[0], pairs[1]


def averaged_correlator_table(
    n_parties: int,
    r0,
    r1,
    centers,
    width: float,
    efficiency: float,
) -> np.ndarray:
    """Frame-averaged correlation table of the single-phase strategy.

    Equals the symbolic table of ``two_setting_strategy(n_parties, r0, r1)``
    on the lossy state, averaged entry-wise over independent Gaussian
    offsets with the given centers and width.  ``r0`` and ``r1`` are signed
    amplitudes, either scalars (every party uses the same pair) or one
    value per party.  When the amplitudes are shared and every center
    coincides, parties 2..N are exchangeable and only 2 N distinct
    correlators are evaluated for the 2^N entries.
    """
    centers = tuple(float(c) for c in centers)
    if len(centers) != n_parties - 1:
        raise ValueError("need one center per non-reference party")
    r0s, r1s = _per_party_amplitudes(n_parties, r0, r1)
    state = lossy_w_state(n_parties, efficiency)
    reference = [
        displacement_observable(DisplacementSetting.from_signed(r))
        for r in (r0s[0], r1s[0])
    ]
    size = 2**n_parties
    table = np.empty(size)
    if n_parties == 1:
        for s in range(2):
            table[s] = correlator(state, [reference[s]])
        return table

    shared = np.ptp(r0s) == 0.0 and np.ptp(r1s) == 0.0
    if shared and len(set(centers)) == 1:
        dressed = _dressed_pair(r0s[0], r1s[0], centers[0], width)
        rest = n_parties - 1
        popcount = np.array([bin(i).count("1") for i in range(2**rest)])
        distinct = np.empty((2, rest + 1))
        for s1 in range(2):
            for ones in range(rest + 1):
                obs = [reference[s1]] + [dressed[1]] * ones + [dressed[0]] * (rest - ones)
                distinct[s1, ones] = correlator(state, obs)
        index = np.arange(size)
        table[:] = distinct[index & 1, popcount[index >> 1]]
        return table

    per_party = [reference] + [
        _dressed_pair(r0s[k], r1s[k], centers[k - 1], width)
        for k in range(1, n_parties)
    ]
    for index in range(size):
        obs = [per_party[p][(index >> p) & 1] for p in range(n_parties)]
        table[index] = correlator(state, obs)
    return table


def maximize_bell(spec: OptimizationSpec) -> OptimumReport:
    """Maximize the frame-averaged Bell value over the strategy parameters.

    A low-discrepancy cloud over the moderate-amplitude start region is
    scored first, and a bounded Nelder-Mead simplex search is run from the
    ``spec.restarts`` best cloud points, keeping the best endpoint (lowest
    restart index on ties).  ``converged`` reports whether the winning
    search terminated by its tolerance rather than by the iteration cap;
    ``evaluations`` counts objective calls including the scan.
    """
    n = spec.n_parties
    n_amp = 2 if spec.shared_amplitudes else 2 * n
    n_phase = (n - 1) if spec.optimize_phases else 0
    dims = n_amp + n_phase
    lo, hi = spec.amplitude_bounds
    bounds = [(lo, hi)] * n_amp + [(0.0, TWO_PI)] * n_phase
    pinned = (0.0,) * (n - 1)

    def unpack(x):
        if spec.shared_amplitudes:
            r0, r1 = x[0], x[1]
        else:
            r0, r1 = np.array(x[:n]), np.array(x[n : 2 * n])
        centers = tuple(x[n_amp:]) if n_phase else pinned
        return r0, r1, centers

    def objective(x):
        r0, r1, centers = unpack(x)
        table = averaged_correlator_table(
            n, r0, r1, centers, spec.width, spec.efficiency
        )
        return -wwzb_value(CorrelatorTable(n, table)).s_value

    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])
    start_lo = lower.copy()
    start_hi = upper.copy()
    start_lo[:n_amp] = np.maximum(start_lo[:n_amp], -START_AMPLITUDE)
    start_hi[:n_amp] = np.minimum(start_hi[:n_amp], START_AMPLITUDE)
    empty = start_hi <= start_lo
    start_lo[empty] = lower[empty]
    start_hi[empty] = upper[empty]
    n_scan = max(64, 24 * dims, spec.restarts)
    cloud = qmc.Halton(d=dims, scramble=False).random(n_scan)
    cloud = start_lo + cloud * (start_hi - start_lo)
    scores = np.array([objective(x) for x in cloud])
    starts = cloud[np.argsort(scores, kind="stable")[: spec.restarts]]

    best = None
    evaluations = n_scan
    for x0 in starts:
        result = minimize(
            objective,
            x0,
            method="Nelder-Mead",
            bounds=bounds,
            options={
                "xatol": spec.tolerance,
                "fatol": spec.tolerance,
                "maxiter": 400 * dims,
                "maxfev": 400 * dims,
            },
        )
        evaluations += result.nfev
        if best is None or result.fun < best.fun:
            best = result
    r0, r1, centers = unpack(best.x)
    if spec.shared_amplitudes:
        party_amplitudes = None
        r, r_prime = float(r0), float(r1)
    else:
        party_amplitudes = tuple((float(a), float(b)) for a, b in zip(r0, r1))
        r, r_prime = party_amplitudes[0]
    return OptimumReport(
        best_s=float(-best.fun),
        r=r,
        r_prime=r_prime,
        phase_centers=tuple(float(c) for c in centers),
        converged=bool(best.success),
        evaluations=evaluations,
        party_amplitudes=party_amplitudes,
    )


def threshold_efficiency(
    n_parties: int,
    width: float,
    tolerance: float = 1e-4,
    restarts: int = 6,
    optimize_phases: bool = False,
) -> ThresholdResult:
    """Smallest transmission at which the optimized Bell value exceeds 1.

    Bisects the efficiency, re-running the amplitude optimization at every
    probe.  Correlators are affine in the efficiency, so the optimized Bell
    value is convex in it and, once above 1, stays above: the bisection
    predicate is monotone.  A coarse grid guards against inner-search
    failures: a clear violation that shrinks at higher efficiency means the
    bracket cannot be trusted and raises ConsistencyError.  (Below the
    threshold the optimum hugs 1 from below and restart jitter carries no
    signal, so decreases there are ignored.)  When even a lossless state
    gives no violation the result carries violable=False and threshold 1.
    """
    if tolerance <= 0.0:
        raise ValueError("tolerance must be > 0")

    def best_s(efficiency: float) -> float:
        report = maximize_bell(
            OptimizationSpec(
                n_parties=n_parties,
                width=width,
                efficiency=efficiency,
                optimize_phases=optimize_phases,
                restarts=restarts,
            )
        )
        return report.best_s

    top = best_s(1.0)
    if top <= 1.0:
        return ThresholdResult(efficiency=1.0, violable=False)

    probes = (0.25, 0.5, 0.75)
    values = [best_s(p) for p in probes]
    sequence = values + [top]
    for earlier, later in zip(sequence, sequence[1:]):
        if earlier > 1.0 + MONOTONICITY_SLACK and later < earlier - MONOTONICITY_SLACK:
            raise ConsistencyError(
                "optimized Bell value decreased from a clear violation at "
                "higher efficiency; inner search is unreliable"
            )

    lo, hi = 0.0, 1.0
    for eta, s in zip(probes, values):
        if s > 1.0:
            hi = min(hi, eta)
        else:
            lo = max(lo, eta)
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        if best_s(mid) > 1.0:
            hi = mid
        else:
            lo = mid
    return ThresholdResult(efficiency=0.5 * (lo + hi), violable=True)


def certainty_frontier(
    n_parties: int,
    efficiency: float,
    pair_counts,
    grid_density: int = 720,
    width_tolerance: float = 0.01,
    width_max: float = 2.0,
    restarts: int = 6,
):
    """Largest noise width with a violation certain for every frame center.

    For each pair count m, bisects the width at which the best-pair Bell
    value stays above 1 on a uniform grid of frame centers (``grid_density``
    points per relative phase, at least 360).  Amplitudes are re-optimized
    for centered frames at every probed width, matching a laboratory that
    knows its noise level but not the frame.  Returns a list of
    (m, width) pairs; width is NaN when not even zero width is certain, and
    capped at ``width_max``.  Restricted to n_parties <= 3 to keep the
    center grid tractable.
    """
    if grid_density < 360:
        raise ValueError("grid_density must be >= 360")
    if n_parties > 3:
        raise ValueError("center grid only tractable for n_parties <= 3")
    if width_tolerance <= 0.0:
        raise ValueError("width_tolerance must be > 0")

    axis = np.arange(grid_density) * TWO_PI / grid_density
    centers = np.array(list(product(axis, repeat=n_parties - 1)))
    state = lossy_w_state(n_parties, efficiency)

    def certain(width: float, pair_count: int) -> bool:
        report = maximize_bell(
            OptimizationSpec(
                n_parties=n_parties,
                width=width,
                efficiency=efficiency,
                optimize_phases=False,
                restarts=restarts,
            )
        )
        strategy = paired_strategy(n_parties, report.r, report.r_prime, pair_count)
        tables = pair_symbolic_tables(state, strategy)
        values = best_pair_values_over_centers(tables, centers, width)
        return bool(np.all(values > 1.0))

    results = []
    for pair_count in pair_counts:
        if not certain(0.0, pair_count):
            results.append((pair_count, float("nan")))
            continue
        lo = 0.0
        hi = 0.2
        while certain(hi, pair_count):
            lo = hi
            hi *= 2.0
            if hi >= width_max:
                hi = width_max
                if certain(hi, pair_count):
                    lo = hi
                break
        if lo >= width_max:
            results.append((pair_count, float(width_max)))
            continue
        while hi - lo > width_tolerance:
            mid = 0.5 * (lo + hi)
            if certain(mid, pair_count):
                lo = mid
            else:
                hi = mid
        results.append((pair_count, float(lo)))
    return results
