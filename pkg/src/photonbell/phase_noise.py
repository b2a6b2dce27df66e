"""Wrapped-Gaussian frame noise and exact phase averaging.

Parties that share no phase reference see their local-oscillator phases
drift between runs.  With party 1 as the reference, the N-1 relative
offsets Delta_l (party l+1 minus party 1) are modelled as independent
Gaussians of common width delta centred at phibar_l, wrapped onto
[0, 2*pi).

Correlators of displacement measurements depend on the offsets only through
finite sums of complex exponentials c * exp(i n . Delta) with small integer
frequency vectors n; :class:`PhasePolynomial` represents exactly that.
Averaging over the frame noise then reduces to the Gaussian characteristic
function

    E[exp(i n_l Delta_l)] = exp(i n_l phibar_l - n_l^2 delta^2 / 2),

which coincides with the wrapped distribution's Fourier coefficients for
integer n_l, so the analytic average is exact.  Monte Carlo sampling of the
offsets (:func:`sample_offsets`) is kept as the independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .fock_core import TWO_PI, ConsistencyError

__all__ = [
    "PhaseModel",
    "PhasePolynomial",
    "average_polynomial",
    "child_seed",
    "damped_polynomial",
    "sample_offsets",
    "wrapped_gaussian_pdf",
]

# Drop theta-series terms once q^{n^2} falls below this.
SERIES_TRUNCATION = 1e-16

# Residue allowed when a conjugate-symmetric polynomial is evaluated.
EVAL_IMAG_TOL = 1e-10

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class PhaseModel:
    """Independent wrapped-Gaussian offsets for parties 2..N.

    Parameters
    ----------
    centers : sequence of float
        Mean offsets phibar_l, one per relative phase (length N-1, possibly
        empty for a single party).  Stored reduced to [0, 2*pi).
    width : float
        Common standard deviation delta >= 0 of the unwrapped Gaussians.
        Zero width means static, perfectly known offsets.
    """

    centers: tuple
    width: float

    def __post_init__(self):
        centers = tuple(float(c) % TWO_PI for c in self.centers)
        if any(not np.isfinite(c) for c in centers):
            raise ValueError("phase centers must be finite")
        if not np.isfinite(self.width) or self.width < 0.0:
            raise ValueError("width must be finite and >= 0")
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "width", float(self.width))

    @property
    def n_relative(self) -> int:
        return len(self.centers)


def _canonical_terms(terms, n_offsets: int):
    merged: dict = {}
    for freq, coeff in terms:
        freq = tuple(int(f) for f in freq)
        if len(freq) != n_offsets:
            raise ValueError(
                f"frequency {freq} has length {len(freq)}, expected {n_offsets}"
            )
        coeff = complex(coeff)
        merged[freq] = merged.get(freq, 0.0j) + coeff
    return tuple(
        (freq, merged[freq]) for freq in sorted(merged) if merged[freq] != 0.0
    )


@dataclass(frozen=True)
class PhasePolynomial:
    """Finite sum of terms c * exp(i n . Delta) over the relative offsets.

    Terms are kept in a canonical merged form (unique sorted frequency
    vectors, zero coefficients dropped), so equality is structural.
    Supports addition and scalar multiplication; averaging over a
    :class:`PhaseModel` is :func:`average_polynomial`.
    """

    n_offsets: int
    terms: tuple

    def __post_init__(self):
        if self.n_offsets < 0:
            raise ValueError("n_offsets must be >= 0")
        object.__setattr__(
            self, "terms", _canonical_terms(self.terms, self.n_offsets)
        )

    @classmethod
    def constant(cls, value: complex, n_offsets: int) -> "PhasePolynomial":
        return cls(n_offsets, (((0,) * n_offsets, complex(value)),))

    @classmethod
    def from_dict(
        cls, mapping: Mapping[tuple, complex], n_offsets: int
    ) -> "PhasePolynomial":
        return cls(n_offsets, tuple(mapping.items()))

    @property
    def is_constant(self) -> bool:
        return all(all(f == 0 for f in freq) for freq, _ in self.terms)

    def constant_value(self) -> complex:
        """Coefficient of the zero frequency; requires a constant polynomial."""
        if not self.is_constant:
            raise ValueError("polynomial is not constant")
        return self.terms[0][1] if self.terms else 0.0j

    def evaluate(self, offsets) -> Union[complex, np.ndarray]:
        """Value at offsets Delta; a leading batch axis is broadcast over."""
        offsets = np.asarray(offsets, dtype=float)
        if offsets.shape[-1:] != (self.n_offsets,):
            # An empty offset vector is fine for 0 offsets.
            if not (self.n_offsets == 0 and offsets.size == 0):
                raise ValueError(
                    f"offsets must have trailing dimension {self.n_offsets}"
                )
            offsets = offsets.reshape(offsets.shape[:-1] + (0,))
        if not self.terms:
            return np.zeros(offsets.shape[:-1], dtype=complex) if offsets.ndim > 1 else 0.0j
        freqs = np.array([freq for freq, _ in self.terms], dtype=float)
        coeffs = np.array([coeff for _, coeff in self.terms])
        values = np.exp(1j * (offsets @ freqs.T)) @ coeffs
        if offsets.ndim <= 1:
            return complex(values)
        return values

    def evaluate_real(self, offsets, imag_tol: float = EVAL_IMAG_TOL):
        """Evaluate a physically real polynomial, checking the residue."""
        values = np.asarray(self.evaluate(offsets))
        residue = np.max(np.abs(values.imag)) if values.size else 0.0
        if residue > imag_tol:
            raise ConsistencyError(
                f"polynomial evaluation has imaginary residue {residue:.3e}"
            )
        real = values.real
        return float(real) if real.ndim == 0 else real

    def __add__(self, other: "PhasePolynomial") -> "PhasePolynomial":
        if not isinstance(other, PhasePolynomial):
            return NotImplemented
        if other.n_offsets != self.n_offsets:
            raise ValueError("cannot add polynomials over different offset spaces")
        return PhasePolynomial(self.n_offsets, self.terms + other.terms)

    def __mul__(self, scalar) -> "PhasePolynomial":
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        return PhasePolynomial(
            self.n_offsets,
            tuple((freq, coeff * scalar) for freq, coeff in self.terms),
        )

    __rmul__ = __mul__


def wrapped_gaussian_pdf(phi, center: float, width: float):
    """Density of a Gaussian of mean ``center`` and sd ``width`` wrapped to 2*pi.

    Evaluated through the rapidly converging Fourier form

        pdf(phi) = (1/2pi) * [1 + 2 * sum_{n>=1} q^{n^2} cos(n (phi - center))]

    with q = exp(-width^2 / 2); the series is truncated once
    q^{n^2} < SERIES_TRUNCATION.  Zero width is rejected: the density
    degenerates to a delta spike, and callers handle that case by using the
    center directly.

    Parameters
    ----------
    phi : float or array_like
        Angles at which to evaluate (any real values; the density has
        period 2*pi).
    center, width : float
        Mean and standard deviation of the unwrapped Gaussian; width > 0.

    Returns
    -------
    float or ndarray
        Density values, nonnegative, integrating to 1 over one period.
    """
    if not np.isfinite(width) or width <= 0.0:
        raise ValueError("width must be > 0 (zero width has no density)")
    phi_arr = np.asarray(phi, dtype=float)
    n_max = int(np.floor(np.sqrt(-2.0 * np.log(SERIES_TRUNCATION)) / width)) + 1
    n = np.arange(1, n_max + 1)
    weights = np.exp(-0.5 * (n * width) ** 2)
    angles = np.multiply.outer(phi_arr - center, n)
    series = 1.0 + 2.0 * (np.cos(angles) @ weights)
    density = np.maximum(series / TWO_PI, 0.0)  # clip roundoff in far tails
    return float(density) if np.isscalar(phi) or phi_arr.ndim == 0 else density


def average_polynomial(poly: PhasePolynomial, model: PhaseModel) -> PhasePolynomial:
    """Average a phase polynomial over the wrapped-Gaussian offsets.

    Each term c * exp(i n . Delta) averages to
    c * prod_l exp(i n_l phibar_l - n_l^2 width^2 / 2), exactly, because the
    characteristic function of a wrapped Gaussian equals the unwrapped one
    at integer frequencies.  Width 0 therefore reduces to evaluating the
    polynomial at the centers.  The result is a constant polynomial on the
    same offset space.
    """
    if poly.n_offsets != model.n_relative:
        raise ValueError(
            f"polynomial over {poly.n_offsets} offsets cannot be averaged "
            f"with a model of {model.n_relative} relative phases"
        )
    centers = np.asarray(model.centers, dtype=float)
    damping = 0.5 * model.width**2
    total = 0.0j
    for freq, coeff in poly.terms:
        f = np.asarray(freq, dtype=float)
        total += coeff * np.exp(1j * (f @ centers) - damping * (f @ f))
    return PhasePolynomial.constant(total, poly.n_offsets)


def damped_polynomial(poly: PhasePolynomial, width: float) -> PhasePolynomial:
    """Average over zero-centered offset noise, keeping the centers symbolic.

    Each coefficient is damped by exp(-|n|^2 width^2 / 2) while frequencies
    are kept, so evaluating the result at the centers reproduces the full
    average:

        damped_polynomial(p, w).evaluate(c)
            == average_polynomial(p, PhaseModel(c, w)).constant_value()

    This lets one polynomial be averaged over many center vectors at once.
    """
    if not np.isfinite(width) or width < 0.0:
        raise ValueError("width must be finite and >= 0")
    damping = 0.5 * width * width
    return PhasePolynomial(
        poly.n_offsets,
        tuple(
            (freq, coeff * np.exp(-damping * sum(f * f for f in freq)))
            for freq, coeff in poly.terms
        ),
    )


def sample_offsets(model: PhaseModel, rng_seed: int, count: int) -> np.ndarray:
    """Draw ``count`` offset vectors from the model, deterministically.

    Returns an array of shape (count, n_relative) with each component drawn
    from a Gaussian of the model's center and width, reduced mod 2*pi.
    A zero-width model is rejected; callers use the centers directly in
    that degenerate case.
    """
    if model.width == 0.0:
        raise ValueError("zero-width model has no randomness to sample")
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(rng_seed)
    draws = rng.normal(
        loc=model.centers, scale=model.width, size=(count, model.n_relative)
    )
    return draws % TWO_PI


def child_seed(seed: int, index: int) -> int:
    """Derive a decorrelated 64-bit child seed for Monte Carlo shard ``index``.

    Splitmix-style mixing: advance the root seed by the 64-bit golden-ratio
    increment per shard, then apply the splitmix64 finalizer.  Deterministic
    and collision-free across shard indices for a fixed root seed.
    """
    if index < 0:
        raise ValueError("index must be >= 0")
    z = (int(seed) + 0x9E3779B97F4A7C15 * (index + 1)) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64
