"""Double-pass stimulated emission of entangled pairs.

The pump crosses the crystal twice.  Pairs from the first pass are fed back
so that they overlap the second-pass emission with a scalar mode overlap
``overlap``: the second-pass pair operator is split as

    K2+ = overlap * K1+ + sqrt(1 - overlap**2) * Kperp+

where ``Kperp+`` creates pairs in a mode orthogonal to (distinguishable from)
the first-pass mode.  Detectors cannot tell the two apart, so probabilities
for a detected occupation are summed over how its photons split between the
two modes.  ``overlap = 1`` is ideal stimulated emission; ``overlap = 0``
gives independent passes, including the accidental four-fold events built
from one pair of each pass.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import OutOfValidity
from .fock import ModeOccupation, StateVector, vacuum
from .pdc import PdcParams, apply_K_dagger, evolve
from .polarization import PolarizationUnitary, rotate

PUMP_WAVELENGTH_UM = 0.39
DOWN_CONVERTED_WAVELENGTH_UM = 0.78
FILTER_BANDWIDTH_UM = 0.005
# lambda^2 / delta-lambda for 5 nm filters at 780 nm
COHERENCE_LENGTH_UM = DOWN_CONVERTED_WAVELENGTH_UM**2 / FILTER_BANDWIDTH_UM
MAX_PERTURBATIVE_TAU = 0.3

TWO_PHOTON_TERMS = ("|1,0;0,1>", "|0,1;1,0>")
FOUR_PHOTON_TERMS = ("|2,0;0,2>", "|1,1;1,1>", "|0,2;2,0>")
TERMS = TWO_PHOTON_TERMS + FOUR_PHOTON_TERMS

# Measured values (value, one-sigma error) for comparison tables.
MEASURED_RATIOS = {
    "|1,0;0,1>": (1.95, 0.10),
    "|2,0;0,2>": (5.3, 0.6),
    "|1,1;1,1>": (4.1, 0.3),
}
MEASURED_SECOND_PASS_GAIN = {2: (3.95, 0.10), 4: (17.0, 2.0)}
MEASURED_MIN_VISIBILITY = 0.97


@dataclass(frozen=True)
class DoublePassConfig:
    tau1: float = 0.05
    tau2: float = 0.05
    theta: float = 0.0
    overlap: float = 1.0
    pump_wavelength_um: float = PUMP_WAVELENGTH_UM
    coherence_length_um: float = COHERENCE_LENGTH_UM
    cutoff: int = 8

    def __post_init__(self):
        if not 0.0 <= self.overlap <= 1.0:
            raise ValueError(f"overlap must lie in [0, 1], got {self.overlap}")
        if not (self.tau1 >= 0 and self.tau2 >= 0):
            raise ValueError("tau1 and tau2 must be >= 0")
        if not (self.pump_wavelength_um > 0 and self.coherence_length_um > 0):
            raise ValueError("wavelength and coherence length must be positive")
        if self.cutoff < 1:
            raise ValueError("cutoff must be >= 1")


@dataclass(frozen=True)
class ScanResult:
    """One scanned curve.

    ``x`` is the delay in micrometres (optical path) or the phase in radians;
    ``value`` the probability per pulse.  Delay scans also fill the fringe
    envelope (``rate_max``/``rate_min``) and the phase at each point.
    """

    x: np.ndarray
    value: np.ndarray
    term: str
    basis: str
    x_label: str
    rate_max: np.ndarray | None = None
    rate_min: np.ndarray | None = None
    theta: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if len(self.x) != len(self.value):
            raise ValueError("x and value lengths differ")
        if len(self.x) > 1 and not np.all(np.diff(self.x) > 0):
            raise ValueError("scan abscissa must be strictly increasing")
        if np.any(self.value < 0):
            raise ValueError("scan values must be non-negative")


@dataclass(frozen=True)
class FringeFit:
    amplitude: float
    contrast: float
    visibility: float
    relative_residual: float


def resolve_basis(basis) -> tuple[PolarizationUnitary, str]:
    if basis is None or basis == "hv":
        return PolarizationUnitary.identity(), "hv"
    if basis == "diag":
        return PolarizationUnitary.diagonal(), "diag"
    if isinstance(basis, PolarizationUnitary):
        return basis, "custom"
    raise ValueError(f"unknown basis {basis!r}; use 'hv', 'diag' or a PolarizationUnitary")


def _photons(label: str) -> int:
    return ModeOccupation.parse(label).total


class _Expansion:
    """Second-order expansion of U2 U1 |0> over two distinguishable pair modes.

    Component ``(j, k)`` is ``K1+^j Kperp+^k |0>`` in the analysis basis.
    For every detected occupation the class keeps the matrix mapping the six
    expansion coefficients to the amplitudes of the underlying two-mode kets,
    so probabilities are ``|M c|^2`` summed over rows.
    """

    ORDERS = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

    def __init__(self, basis_a: PolarizationUnitary, basis_b: PolarizationUnitary):
        pairs = [vacuum(2)]
        for _ in range(2):
            pairs.append(apply_K_dagger(pairs[-1]))
        pairs = [rotate(rotate(p, "a", basis_a), "b", basis_b) for p in pairs]
        rows: dict[ModeOccupation, dict[tuple, np.ndarray]] = {}
        for col, (j, k) in enumerate(self.ORDERS):
            for o1, a1 in pairs[j].items():
                for o2, a2 in pairs[k].items():
                    detected = ModeOccupation(*(x + y for x, y in zip(o1, o2)))
                    row = rows.setdefault(detected, {}).setdefault((o1, o2), np.zeros(6, complex))
                    row[col] += a1 * a2
        self.matrices = {ket: np.array(list(r.values())) for ket, r in rows.items()}

    def probabilities(self, coeffs: np.ndarray, ket: ModeOccupation) -> np.ndarray:
        """Probabilities for coefficient rows ``coeffs`` (shape (..., 6))."""
        m = self.matrices.get(ket)
        if m is None:
            return np.zeros(coeffs.shape[:-1])
        amps = coeffs @ m.T
        return np.sum(np.abs(amps) ** 2, axis=-1)


@lru_cache(maxsize=64)
def _expansion(key_a, key_b) -> _Expansion:
    return _Expansion(PolarizationUnitary(*key_a), PolarizationUnitary(*key_b))


def _coefficients(tau1: float, tau2: float, overlap, theta) -> np.ndarray:
    """Expansion coefficients c_jk of 1 + t1 K1 + t2 e^{i theta} K2 + ... (second order)."""
    overlap = np.asarray(overlap, dtype=float)
    theta = np.asarray(theta, dtype=float)
    overlap, theta = np.broadcast_arrays(overlap, theta)
    perp = np.sqrt(1.0 - overlap**2)
    e1 = np.exp(1j * theta)
    coherent = tau1 + tau2 * overlap * e1
    c = np.empty(overlap.shape + (6,), dtype=complex)
    c[..., 0] = 1.0
    c[..., 1] = coherent
    c[..., 2] = tau2 * perp * e1
    c[..., 3] = 0.5 * coherent**2
    c[..., 4] = coherent * tau2 * perp * e1
    c[..., 5] = 0.5 * (tau2 * perp * e1) ** 2
    return c


def _check_validity(cfg: DoublePassConfig) -> None:
    if cfg.tau1 > MAX_PERTURBATIVE_TAU or cfg.tau2 > MAX_PERTURBATIVE_TAU:
        raise OutOfValidity(
            f"perturbative model needs tau <= {MAX_PERTURBATIVE_TAU}, got ({cfg.tau1}, {cfg.tau2})"
        )


def _term_curve(cfg: DoublePassConfig, term: str, overlap, theta, basis_a, basis_b) -> np.ndarray:
    _check_validity(cfg)
    exp = _expansion(basis_a._key(), basis_b._key())
    coeffs = _coefficients(cfg.tau1, cfg.tau2, overlap, theta)
    return exp.probabilities(coeffs, ModeOccupation.parse(term))


def perturbative_probabilities(cfg: DoublePassConfig, basis_a=None, basis_b=None) -> dict[str, float]:
    """Leading-order detection probabilities of the two- and four-photon terms.

    ``basis_b`` defaults to ``basis_a``.  Probabilities follow the unnormalized
    expansion (vacuum coefficient 1), so a single pass gives tau^2 per
    two-photon term and tau^4 per four-photon term.
    """
    ua, _ = resolve_basis(basis_a)
    ub, _ = resolve_basis(basis_b if basis_b is not None else basis_a)
    return {
        term: float(_term_curve(cfg, term, cfg.overlap, cfg.theta, ua, ub))
        for term in TERMS
    }


def amplification_ratios(cfg: DoublePassConfig, basis_a=None, basis_b=None) -> dict[str, float]:
    """Stimulated (overlap 1, theta 0) over distinguishable (overlap 0) probability, per term."""
    if cfg.tau1 != cfg.tau2:
        raise ValueError("amplification ratios are defined for equal pass strengths")
    if cfg.tau1 == 0:
        raise ValueError("tau must be > 0")
    stim = perturbative_probabilities(replace(cfg, overlap=1.0, theta=0.0), basis_a, basis_b)
    dist = perturbative_probabilities(replace(cfg, overlap=0.0), basis_a, basis_b)
    return {term: stim[term] / dist[term] for term in TERMS}


def _order_totals(probs: dict[str, float]) -> tuple[float, float]:
    return (
        sum(probs[t] for t in TWO_PHOTON_TERMS),
        sum(probs[t] for t in FOUR_PHOTON_TERMS),
    )


def second_pass_gain(cfg: DoublePassConfig) -> tuple[float, float]:
    """Two- and four-photon probability with the second pass over the first pass alone."""
    if cfg.tau1 == 0:
        raise ValueError("tau1 must be > 0")
    double = _order_totals(perturbative_probabilities(cfg))
    single = _order_totals(perturbative_probabilities(replace(cfg, tau2=0.0)))
    return double[0] / single[0], double[1] / single[1]


def _order_term(order: int, term: str | None) -> str:
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    if term is None:
        return "|1,0;0,1>" if order == 2 else "|1,1;1,1>"
    if _photons(term) != order:
        raise ValueError(f"{term} is not a {order}-photon term")
    return term


def fringe_scan(
    cfg: DoublePassConfig,
    thetas: Sequence[float],
    order: int,
    term: str | None = None,
    basis="hv",
) -> ScanResult:
    """Term probability versus the relative pump phase, in the coherent regime."""
    if cfg.overlap != 1.0:
        raise ValueError("phase fringes need overlap = 1")
    term = _order_term(order, term)
    u, label = resolve_basis(basis)
    thetas = np.asarray(thetas, dtype=float)
    values = _term_curve(cfg, term, 1.0, thetas, u, u)
    return ScanResult(thetas, values, term, label, "theta_rad")


def fit_fringe(thetas, values, order: int) -> FringeFit:
    """Fit ``A (1 + V cos theta)^k`` with k = order / 2 (1 for pairs, 2 for double pairs).

    Linear least squares on ``values**(1/k)``; the residual is reported on the
    original scale, relative to the data norm.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    k = order // 2
    thetas = np.asarray(thetas, dtype=float)
    values = np.asarray(values, dtype=float)
    root = values ** (1.0 / k)
    design = np.column_stack([np.ones_like(thetas), np.cos(thetas)])
    (c0, c1), *_ = np.linalg.lstsq(design, root, rcond=None)
    contrast = c1 / c0
    amplitude = c0**k
    model = amplitude * (1 + contrast * np.cos(thetas)) ** k
    residual = np.linalg.norm(model - values) / np.linalg.norm(values)
    v = min(abs(contrast), 1.0)
    hi, lo = (1 + v) ** k, (1 - v) ** k
    return FringeFit(float(amplitude), float(contrast), float((hi - lo) / (hi + lo)), float(residual))


def coherence_envelope(delay_um, coherence_length_um: float):
    """Gaussian overlap between first-pass photons and second-pass emission."""
    d = np.asarray(delay_um, dtype=float)
    return np.exp(-(d**2) / (2.0 * coherence_length_um**2))


def delay_to_phase(delay_um, pump_wavelength_um: float, offset: float = 0.0):
    return offset + 2.0 * np.pi * np.asarray(delay_um, dtype=float) / pump_wavelength_um


_PHASE_SAMPLES = 2.0 * np.pi * np.arange(8) / 8


def _phase_extrema(curve_coeffs: np.ndarray) -> tuple[float, float]:
    """Max and min over theta of a degree-2 trigonometric polynomial.

    ``curve_coeffs`` are its values at the eight sample phases; the extrema
    are found from the roots of the derivative polynomial.
    """
    c = np.fft.fft(curve_coeffs) / 8.0
    ks = np.array([-2, -1, 0, 1, 2])
    ck = c[ks % 8]
    deriv = 1j * ks * ck  # coefficients of z^k, k=-2..2
    poly = deriv[::-1]  # highest power first after multiplying by z^2
    candidates = list(np.linspace(0, 2 * np.pi, 16, endpoint=False))
    if np.any(np.abs(poly) > 1e-300):
        roots = np.roots(np.trim_zeros(poly, "f"))
        candidates.extend(np.angle(r) for r in roots if np.isfinite(r) and abs(abs(r) - 1) < 1e-6)
    th = np.asarray(candidates)
    values = np.real(np.exp(1j * np.outer(th, ks)) @ ck)
    return float(values.max()), float(max(values.min(), 0.0))


def delay_scan(cfg: DoublePassConfig, delays_um: Sequence[float], term: str, basis="hv") -> ScanResult:
    """Term probability across the pump-delay scan.

    At each delay the overlap follows the coherence envelope and the phase
    advances by 2 pi per pump wavelength of optical delay.  Returns the
    fringe envelope (max and min over phase) and the value at the local phase.
    """
    if term not in TERMS:
        raise ValueError(f"unknown term {term!r}")
    u, label = resolve_basis(basis)
    d = np.asarray(delays_um, dtype=float)
    overlaps = coherence_envelope(d, cfg.coherence_length_um)
    thetas = delay_to_phase(d, cfg.pump_wavelength_um, cfg.theta)
    at_theta = _term_curve(cfg, term, overlaps, thetas, u, u)
    samples = _term_curve(cfg, term, overlaps[:, None], _PHASE_SAMPLES[None, :], u, u)
    extrema = np.array([_phase_extrema(row) for row in samples]).reshape(-1, 2)
    hi = np.maximum(extrema[:, 0], at_theta)
    lo = np.minimum(extrema[:, 1], at_theta)
    return ScanResult(d, at_theta, term, label, "delay_um", rate_max=hi, rate_min=lo, theta=thetas)


def exact_double_pass(cfg: DoublePassConfig) -> StateVector:
    """Sequential exact evolution: first pass at phase 0, second at phase theta.

    The feedback loop is the identity on the pair modes, so this only covers
    the fully overlapping case.
    """
    if cfg.overlap != 1.0:
        raise ValueError("exact double pass requires overlap = 1")
    # truncation adequacy for the combined strength
    PdcParams(cfg.tau1 + cfg.tau2, cutoff=cfg.cutoff)
    state = evolve(vacuum(cfg.cutoff), cfg.tau1, 0.0)
    return evolve(state, cfg.tau2, cfg.theta)


def vacuum_relative_probabilities(state: StateVector, basis_a=None, basis_b=None) -> dict[str, float]:
    """Term probabilities divided by the vacuum probability.

    This puts an exact state on the same footing as the perturbative
    expansion, whose vacuum coefficient is 1.
    """
    ua, _ = resolve_basis(basis_a)
    ub, _ = resolve_basis(basis_b if basis_b is not None else basis_a)
    rotated = rotate(rotate(state, "a", ua), "b", ub)
    p0 = abs(rotated[ModeOccupation(0, 0, 0, 0)]) ** 2
    return {t: abs(rotated[ModeOccupation.parse(t)]) ** 2 / p0 for t in TERMS}


def exact_second_pass_gain(cfg: DoublePassConfig) -> tuple[float, float]:
    """Second-pass gains from exact evolution (vacuum-relative probabilities)."""
    double = _order_totals(vacuum_relative_probabilities(exact_double_pass(cfg)))
    single_state = evolve(vacuum(cfg.cutoff), cfg.tau1, 0.0)
    single = _order_totals(vacuum_relative_probabilities(single_state))
    return double[0] / single[0], double[1] / single[1]
