"""Measurement strategies and Bell values with unknown reference frames.

Every party measures displaced click/no-click observables on its mode of a
(possibly lossy) shared single photon.  Party k's setting list holds its
displacement choices; in a run, the phase of party k's displacement is
shifted by the unknown frame offset Delta_{k-1} (party 1 is the reference
and has no offset).  Correlators therefore become phase polynomials in the
offsets, built once per strategy (:func:`symbolic_correlators`) and then
either evaluated at fixed offsets (:func:`bell_value_static`) or averaged
over a wrapped-Gaussian offset model (:func:`bell_value_averaged`).  The
absolute values inside the Bell functional are applied after averaging,
matching an experiment that accumulates correlators across runs before
computing the Bell value.

To fight frame noise, party 1 may hold m pairs of settings that repeat the
same two amplitudes with pair phases stepped by 2*pi/m.  Each pair alone is
a complete two-setting-per-party Bell test, so the best pair may be chosen
after the data is taken (:func:`best_pair_bell_value`).  The resulting
distribution of Bell values over uniformly random frame centers is
estimated by :func:`violation_distribution`.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fock_core import (
    TWO_PI,
    DisplacementSetting,
    SettingVector,
    SubspaceState,
    displacement_observable,
    lossy_w_state,
)
from .phase_noise import (
    PhaseModel,
    PhasePolynomial,
    average_polynomial,
    damped_polynomial,
)
from .wwzb import BellResult, CorrelatorTable, _walsh_hadamard, wwzb_value

__all__ = [
    "MeasurementStrategy",
    "SymbolicCorrelatorTable",
    "ViolationHistogram",
    "bell_value_averaged",
    "bell_value_static",
    "best_pair_bell_value",
    "best_pair_values_over_centers",
    "pair_setting_indices",
    "pair_symbolic_tables",
    "paired_strategy",
    "symbolic_correlators",
    "two_setting_strategy",
    "violation_distribution",
]

# Slack used when checking the stepped phases of paired settings.
PAIR_PHASE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MeasurementStrategy:
    """Per-party displacement settings, optionally with paired structure.

    settings[k] is the tuple of party k+1's :class:`DisplacementSetting`
    choices.  When ``pair_count`` is m (not None), party 1's list must hold
    2m settings forming m pairs: pair j occupies slots (2j, 2j+1), every
    pair repeats the amplitudes of pair 0, and pair j's phases are those of
    pair 0 advanced by j * 2*pi / m.
    """

    settings: tuple
    pair_count: Optional[int] = None

    def __post_init__(self):
        settings = tuple(tuple(party) for party in self.settings)
        if not settings:
            raise ValueError("strategy needs at least one party")
        for party, choices in enumerate(settings):
            if not choices:
                raise ValueError(f"party {party + 1} has no settings")
            if any(not isinstance(s, DisplacementSetting) for s in choices):
                raise ValueError("settings must be DisplacementSetting instances")
        object.__setattr__(self, "settings", settings)
        if self.pair_count is not None:
            m = int(self.pair_count)
            if m < 1:
                raise ValueError("pair_count must be >= 1")
            object.__setattr__(self, "pair_count", m)
            self._check_pairs()

    def _check_pairs(self):
        m = self.pair_count
        first = self.settings[0]
        if len(first) != 2 * m:
            raise ValueError(
                f"party 1 needs {2 * m} settings for {m} pairs, has {len(first)}"
            )
        for j in range(m):
            step = j * TWO_PI / m
            for slot in range(2):
                base = first[slot]
                current = first[2 * j + slot]
                if abs(current.amplitude - base.amplitude) > 1e-12:
                    raise ValueError(
                        f"pair {j} slot {slot} amplitude differs from pair 0"
                    )
                diff = (current.phase - base.phase - step) % TWO_PI
                if min(diff, TWO_PI - diff) > PAIR_PHASE_TOL:
                    raise ValueError(
                        f"pair {j} slot {slot} phase is not stepped by 2*pi/m"
                    )

    @property
    def n_parties(self) -> int:
        return len(self.settings)

    def observables(self, vector: SettingVector):
        """Observables selected by one setting vector, validated."""
        vector.validate_for([len(party) for party in self.settings])
        return [
            displacement_observable(party[i])
            for party, i in zip(self.settings, vector.entries)
        ]


def two_setting_strategy(
    n_parties: int, r0: float, r1: float, phases: Optional[Sequence[float]] = None
) -> MeasurementStrategy:
    """Every party measures amplitudes (r0, r1) at a single local phase.

    ``phases`` gives one phase per party (default all zero); both settings
    of a party share its phase.  The amplitudes may be signed: a negative
    value flips that setting's displacement (phase advanced by pi), which
    costs no extra phase reference and is where the optimum sits for the
    states considered here.
    """
    if phases is None:
        phases = [0.0] * n_parties
    if len(phases) != n_parties:
        raise ValueError("need one phase per party")
    parties = tuple(
        (
            DisplacementSetting.from_signed(r0, phi),
            DisplacementSetting.from_signed(r1, phi),
        )
        for phi in phases
    )
    return MeasurementStrategy(parties)


def paired_strategy(
    n_parties: int,
    r0: float,
    r1: float,
    pair_count: int,
    phases: Optional[Sequence[float]] = None,
) -> MeasurementStrategy:
    """Like :func:`two_setting_strategy`, but party 1 holds m stepped pairs.

    Pair j repeats party 1's two (possibly signed) amplitudes with its
    phase advanced by j * 2*pi / pair_count, covering the circle so that
    some pair nearly cancels any frame offset.
    """
    if pair_count < 1:
        raise ValueError("pair_count must be >= 1")
    if phases is None:
        phases = [0.0] * n_parties
    if len(phases) != n_parties:
        raise ValueError("need one phase per party")
    first = tuple(
        DisplacementSetting.from_signed(r, phases[0] + j * TWO_PI / pair_count)
        for j in range(pair_count)
        for r in (r0, r1)
    )
    rest = tuple(
        (
            DisplacementSetting.from_signed(r0, phi),
            DisplacementSetting.from_signed(r1, phi),
        )
        for phi in phases[1:]
    )
    return MeasurementStrategy((first,) + rest, pair_count=pair_count)


@dataclass(frozen=True, eq=False)
class SymbolicCorrelatorTable:
    """Correlation table whose entries are polynomials in the frame offsets."""

    n_parties: int
    values: tuple

    def __post_init__(self):
        if len(self.values) != 2**self.n_parties:
            raise ValueError(
                f"table for {self.n_parties} parties needs "
                f"{2 ** self.n_parties} entries"
            )
        object.__setattr__(self, "values", tuple(self.values))

    def evaluate(self, offsets) -> CorrelatorTable:
        """Numeric table at fixed offsets Delta (length N-1)."""
        vals = np.array([poly.evaluate_real(offsets) for poly in self.values])
        return CorrelatorTable(self.n_parties, vals)

    def averaged(self, model: PhaseModel) -> CorrelatorTable:
        """Numeric table with every entry averaged over the offset model."""
        zero = np.zeros(self.n_parties - 1)
        vals = np.array(
            [
                average_polynomial(poly, model).evaluate_real(zero)
                for poly in self.values
            ]
        )
        return CorrelatorTable(self.n_parties, vals)


def _symbolic_correlator(rho: np.ndarray, matrices, n: int) -> PhasePolynomial:
    """Closed-form correlator with frame factors kept symbolic.

    Identical walk to fock_core.correlator, but each off-diagonal use of
    party p's observable contributes the frequency +-1 in offset slot p-1
    (party 1, p = 0, contributes no frequency).  Frequencies therefore have
    at most two nonzero entries, each +-1.
    """
    m00 = np.array([m[0, 0] for m in matrices])
    m01 = np.array([m[0, 1] for m in matrices])
    m10 = np.array([m[1, 0] for m in matrices])
    m11 = np.array([m[1, 1] for m in matrices])

    pre = np.ones(n + 1, dtype=complex)
    for k in range(n):
        pre[k + 1] = pre[k] * m00[k]
    suf = np.ones(n + 1, dtype=complex)
    for k in range(n - 1, -1, -1):
        suf[k] = suf[k + 1] * m00[k]
    hole = pre[:n] * suf[1:]

    zero = (0,) * (n - 1)
    terms: dict = {}

    def add(freq, value):
        if value != 0.0:
            terms[freq] = terms.get(freq, 0.0j) + value

    def unit(party, sign):
        if party == 0:
            return zero
        freq = [0] * (n - 1)
        freq[party - 1] = sign
        return tuple(freq)

    constant = rho[0, 0] * pre[n]
    constant += sum(rho[k + 1, k + 1] * m11[k] * hole[k] for k in range(n))
    terms[zero] = constant

    for k in range(n):
        add(unit(k, +1), rho[0, k + 1] * m10[k] * hole[k])
        add(unit(k, -1), rho[k + 1, 0] * m01[k] * hole[k])

    for j in range(n):
        mid = 1.0 + 0.0j
        for k in range(j + 1, n):
            two_hole = pre[j] * mid * suf[k + 1]
            freq = [0] * (n - 1)
            if k > 0:
                freq[k - 1] += 1
            if j > 0:
                freq[j - 1] -= 1
            up = tuple(freq)
            down = tuple(-f for f in freq)
            add(up, rho[j + 1, k + 1] * m10[k] * m01[j] * two_hole)
            add(down, rho[k + 1, j + 1] * m10[j] * m01[k] * two_hole)
            mid *= m00[k]

    return PhasePolynomial(n - 1, tuple(terms.items()))


def symbolic_correlators(
    state: SubspaceState,
    strategy: MeasurementStrategy,
    setting_indices: Optional[Sequence[Sequence[int]]] = None,
) -> SymbolicCorrelatorTable:
    """Offset-symbolic correlation table for a two-setting Bell test.

    Parameters
    ----------
    state : SubspaceState
        Shared state, one mode per party.
    strategy : MeasurementStrategy
        Setting lists; each party contributes two of them to the table.
    setting_indices : optional
        For each party, the pair of indices used as table settings 0 and 1
        (default the party's first two settings).  Table index bit k-1
        selects party k's entry of that pair.
    """
    n = strategy.n_parties
    if state.n_modes != n:
        raise ValueError(
            f"state has {state.n_modes} modes but strategy has {n} parties"
        )
    if setting_indices is None:
        setting_indices = [(0, 1)] * n
    if len(setting_indices) != n or any(len(pair) != 2 for pair in setting_indices):
        raise ValueError("setting_indices needs one index pair per party")
    counts = [len(party) for party in strategy.settings]
    chosen = []
    for bit in range(2):
        vector = SettingVector(tuple(pair[bit] for pair in setting_indices))
        vector.validate_for(counts)
        chosen.append(
            [
                displacement_observable(party[i]).matrix
                for party, i in zip(strategy.settings, vector.entries)
            ]
        )
    values = []
    for index in range(2**n):
        mats = [chosen[(index >> p) & 1][p] for p in range(n)]
        values.append(_symbolic_correlator(state.matrix, mats, n))
    return SymbolicCorrelatorTable(n, tuple(values))


def bell_value_static(
    state: SubspaceState,
    strategy: MeasurementStrategy,
    offsets,
    setting_indices=None,
) -> BellResult:
    """Bell value at fixed frame offsets (length N-1 vector)."""
    table = symbolic_correlators(state, strategy, setting_indices)
    return wwzb_value(table.evaluate(offsets))


def bell_value_averaged(
    state: SubspaceState,
    strategy: MeasurementStrategy,
    model: PhaseModel,
    setting_indices=None,
) -> BellResult:
    """Bell value of the frame-averaged correlation table.

    Correlators are averaged first and the Bell functional's absolute
    values taken afterwards, so this is the value an experiment sees when
    correlators are estimated across many runs with drifting frames.
    """
    table = symbolic_correlators(state, strategy, setting_indices)
    return wwzb_value(table.averaged(model))


def pair_setting_indices(strategy: MeasurementStrategy, pair: int):
    """Setting-index pairs selecting party 1's pair ``pair`` for the table."""
    if strategy.pair_count is None:
        raise ValueError("strategy has no pair structure")
    if not 0 <= pair < strategy.pair_count:
        raise ValueError(f"pair must lie in [0, {strategy.pair_count})")
    return [(2 * pair, 2 * pair + 1)] + [(0, 1)] * (strategy.n_parties - 1)


def pair_symbolic_tables(state: SubspaceState, strategy: MeasurementStrategy):
    """One symbolic table per pair of party 1's settings."""
    if strategy.pair_count is None:
        raise ValueError("strategy has no pair structure")
    return [
        symbolic_correlators(state, strategy, pair_setting_indices(strategy, j))
        for j in range(strategy.pair_count)
    ]


def best_pair_bell_value(
    state: SubspaceState,
    strategy: MeasurementStrategy,
    model: Optional[PhaseModel] = None,
    offsets=None,
):
    """Largest Bell value over party 1's setting pairs.

    Exactly one of ``model`` (averaged correlators) and ``offsets`` (fixed
    frame) must be given.  Each pair is a complete Bell test on its own, so
    reporting the best pair after the fact is legitimate.  Returns
    (BellResult, pair_index); ties go to the lowest pair index.
    """
    if (model is None) == (offsets is None):
        raise ValueError("give exactly one of model or offsets")
    tables = pair_symbolic_tables(state, strategy)
    best = None
    best_pair = 0
    for j, table in enumerate(tables):
        numeric = table.averaged(model) if model is not None else table.evaluate(offsets)
        result = wwzb_value(numeric)
        if best is None or result.s_value > best.s_value:
            best = result
            best_pair = j
    return best, best_pair


def best_pair_values_over_centers(tables, centers, width: float) -> np.ndarray:
    """Best-pair Bell values for a whole batch of frame centers at once.

    Vectorized equivalent of calling :func:`best_pair_bell_value` with a
    :class:`PhaseModel` built from each row of ``centers`` (shape
    (count, N-1)) at the common ``width``: zero-centered noise damps each
    polynomial coefficient, after which the damped polynomials are
    evaluated on the center batch and pushed through the Bell transform.

    ``tables`` is the output of :func:`pair_symbolic_tables`.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    best = None
    for table in tables:
        size = 2**table.n_parties
        damped = [damped_polynomial(poly, width) for poly in table.values]
        vals = np.stack([poly.evaluate_real(centers) for poly in damped], axis=-1)
        s = np.abs(_walsh_hadamard(vals)).sum(axis=-1) / size
        best = s if best is None else np.maximum(best, s)
    return best


@dataclass(frozen=True, eq=False)
class ViolationHistogram:
    """Histogram of best-pair Bell values over random frame centers."""

    bin_edges: np.ndarray
    counts: np.ndarray
    n_samples: int
    fraction_violating: float
    min_s: float
    max_s: float
    metadata: dict

    def __post_init__(self):
        edges = np.array(self.bin_edges, dtype=float)
        counts = np.array(self.counts, dtype=int)
        if edges.ndim != 1 or counts.shape != (edges.size - 1,):
            raise ValueError("counts must have one entry per bin")
        if counts.sum() != self.n_samples:
            raise ValueError("histogram counts must sum to n_samples")
        if not 0.0 <= self.fraction_violating <= 1.0:
            raise ValueError("fraction_violating must lie in [0, 1]")
        edges.setflags(write=False)
        counts.setflags(write=False)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    def to_json_dict(self) -> dict:
        return {
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "n_samples": int(self.n_samples),
            "fraction_violating": float(self.fraction_violating),
            "min_s": float(self.min_s),
            "max_s": float(self.max_s),
            "metadata": self.metadata,
        }


def violation_distribution(
    n_parties: int,
    amplitudes,
    width: float,
    efficiency: float,
    pair_count: int,
    n_samples: int,
    seed: int,
    n_bins: int = 60,
    threads: int = 1,
) -> ViolationHistogram:
    """Distribution of best-pair Bell values over uniform frame centers.

    Each sample draws the N-1 frame centers uniformly from [0, 2*pi),
    averages the correlators over a wrapped Gaussian of width ``width``
    around those centers, and records the best Bell value over party 1's
    ``pair_count`` stepped setting pairs.  ``amplitudes`` is the (r0, r1)
    pair every party uses, normally the optimizer's output for centered
    frames; pass the values actually used so they are recorded in the
    histogram metadata.

    The sample order is fixed by ``seed`` alone, and the histogram is
    accumulated from the ordered results, so the outcome is identical for
    any ``threads`` value.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    r0, r1 = (float(a) for a in amplitudes)
    state = lossy_w_state(n_parties, efficiency)
    strategy = paired_strategy(n_parties, r0, r1, pair_count)
    tables = pair_symbolic_tables(state, strategy)

    rng = np.random.default_rng(seed)
    centers = rng.uniform(0.0, TWO_PI, size=(n_samples, n_parties - 1))

    def sample_value(center_row) -> float:
        model = PhaseModel(tuple(center_row), width)
        return max(wwzb_value(t.averaged(model)).s_value for t in tables)

    if threads == 1:
        s_values = np.array([sample_value(row) for row in centers])
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            s_values = np.array(list(pool.map(sample_value, centers, chunksize=64)))

    min_s = float(s_values.min())
    max_s = float(s_values.max())
    span = max_s - min_s
    edges = np.linspace(min_s, max_s if span > 0 else min_s + 1e-12, n_bins + 1)
    counts, edges = np.histogram(s_values, bins=edges)
    fraction = float(np.count_nonzero(s_values > 1.0) / n_samples)
    metadata = {
        "n_parties": int(n_parties),
        "r0": r0,
        "r1": r1,
        "width": float(width),
        "efficiency": float(efficiency),
        "pair_count": int(pair_count),
        "n_samples": int(n_samples),
        "seed": int(seed),
    }
    return ViolationHistogram(
        bin_edges=edges,
        counts=counts,
        n_samples=n_samples,
        fraction_violating=fraction,
        min_s=min_s,
        max_s=max_s,
        metadata=metadata,
    )
