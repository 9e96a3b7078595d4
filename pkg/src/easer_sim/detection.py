"""Post-selection: term projections, click-pattern probabilities, single-photon
measurement, Schmidt analysis and Monte-Carlo counting."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Mapping

import numpy as np

from .errors import InvalidPattern, ZeroProbabilityOutcome
from .fock import MODE_SLOTS, SLOT_INDEX, SLOTS, ModeOccupation, StateVector
from .polarization import PolarizationUnitary, rotate


def _as_unitary(u) -> PolarizationUnitary:
    if u is None:
        return PolarizationUnitary.identity()
    if isinstance(u, PolarizationUnitary):
        return u
    return PolarizationUnitary.from_matrix(u)


def to_analysis_basis(state: StateVector, basis_a=None, basis_b=None) -> StateVector:
    state = rotate(state, "a", _as_unitary(basis_a))
    return rotate(state, "b", _as_unitary(basis_b))


def term_probability(state: StateVector, ket, basis_a=None, basis_b=None) -> float:
    """|<ket|state>|^2 after rotating each spatial mode into its analysis basis."""
    if not isinstance(ket, ModeOccupation):
        ket = ModeOccupation(*ket)
    return abs(to_analysis_basis(state, basis_a, basis_b)[ket]) ** 2


@dataclass(frozen=True)
class DetectionConfig:
    """Analysis bases and detector layout.

    Every slot ends on a detector labelled by the slot name (``"aH"``...).
    Slots listed in ``splitter_modes`` first cross a 50/50 beam splitter and
    end on two detectors, ``"<slot>1"`` and ``"<slot>2"``.  A polarizer in
    front of a single detector is modelled by leaving the blocked slot's
    detector out of the pattern.
    """

    basis_a: PolarizationUnitary = field(default_factory=PolarizationUnitary.identity)
    basis_b: PolarizationUnitary = field(default_factory=PolarizationUnitary.identity)
    splitter_modes: frozenset = frozenset()
    efficiency: float = 1.0
    number_resolving: bool = False

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in [0, 1], got {self.efficiency}")
        object.__setattr__(self, "splitter_modes", frozenset(self.splitter_modes))
        unknown = self.splitter_modes - set(SLOTS)
        if unknown:
            raise ValueError(f"unknown splitter slots {sorted(unknown)}")
        object.__setattr__(self, "basis_a", _as_unitary(self.basis_a))
        object.__setattr__(self, "basis_b", _as_unitary(self.basis_b))

    @property
    def detectors(self) -> tuple[str, ...]:
        labels = []
        for slot in SLOTS:
            if slot in self.splitter_modes:
                labels.extend((slot + "1", slot + "2"))
            else:
                labels.append(slot)
        return tuple(labels)


@dataclass(frozen=True)
class CoincidencePattern:
    """Detectors that must click, detectors that must stay silent, and
    (number-resolving detectors only) exact photon counts."""

    required: frozenset = frozenset()
    forbidden: frozenset = frozenset()
    counts: Mapping[str, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "required", frozenset(self.required))
        object.__setattr__(self, "forbidden", frozenset(self.forbidden))
        if self.required & self.forbidden:
            raise InvalidPattern(f"detectors both required and forbidden: {sorted(self.required & self.forbidden)}")

    def detectors(self) -> set[str]:
        return set(self.required) | set(self.forbidden) | set(self.counts or {})


@lru_cache(maxsize=None)
def splitter_output(n: int) -> dict[tuple[int, int], float]:
    """Amplitudes of |k, n-k> when |n> enters a 50/50 splitter with vacuum in the other port.

    Obtained by expanding ((c+ + d+)/sqrt 2)^n / sqrt(n!) over the output modes.
    """
    out = {}
    for k in range(n + 1):
        coef = math.comb(n, k) / 2 ** (n / 2)
        out[(k, n - k)] = coef * math.sqrt(math.factorial(k) * math.factorial(n - k) / math.factorial(n))
    return out


def _detector_factor(m: int, eta: float, want: str | int | None) -> float:
    if want is None:
        return 1.0
    if want == "click":
        return 1.0 - (1.0 - eta) ** m
    if want == "silent":
        return (1.0 - eta) ** m
    c = int(want)
    if c > m:
        return 0.0
    return math.comb(m, c) * eta**c * (1.0 - eta) ** (m - c)


def click_pattern_probability(state: StateVector, cfg: DetectionConfig, pattern: CoincidencePattern) -> float:
    """Probability that the detector response matches ``pattern``.

    Photons at a splitter are routed at amplitude level; distinct input kets
    cannot reach the same output, so the result is a sum of |amplitude|^2.
    Each photon is detected with probability ``cfg.efficiency``.
    """
    detectors = set(cfg.detectors)
    unknown = pattern.detectors() - detectors
    if unknown:
        raise InvalidPattern(f"pattern references undefined detectors {sorted(unknown)}")
    if pattern.counts and not cfg.number_resolving:
        raise InvalidPattern("exact counts need number-resolving detectors")
    want: dict[str, str | int] = {d: "click" for d in pattern.required}
    want.update({d: "silent" for d in pattern.forbidden})
    for d, c in (pattern.counts or {}).items():
        if d in want:
            raise InvalidPattern(f"detector {d} constrained twice")
        want[d] = c

    rotated = to_analysis_basis(state, cfg.basis_a, cfg.basis_b)
    eta = cfg.efficiency
    total = 0.0
    for ket, amp in rotated.items():
        weight = abs(amp) ** 2
        per_slot = []
        for slot in SLOTS:
            n = ket[SLOT_INDEX[slot]]
            if slot in cfg.splitter_modes:
                options = [
                    a**2 * _detector_factor(k1, eta, want.get(slot + "1"))
                    * _detector_factor(k2, eta, want.get(slot + "2"))
                    for (k1, k2), a in splitter_output(n).items()
                ]
                per_slot.append(sum(options))
            else:
                per_slot.append(_detector_factor(n, eta, want.get(slot)))
        total += weight * math.prod(per_slot)
    return total


def exclusive_patterns(cfg: DetectionConfig, max_photons: int | None = None) -> Iterator[CoincidencePattern]:
    """Every mutually exclusive full pattern over the configured detectors.

    Click/no-click patterns by default; with number-resolving detectors and
    ``max_photons`` given, every assignment of counts 0..max_photons.
    """
    dets = cfg.detectors
    if cfg.number_resolving and max_photons is not None:
        for counts in itertools.product(range(max_photons + 1), repeat=len(dets)):
            yield CoincidencePattern(counts=dict(zip(dets, counts)))
        return
    for flags in itertools.product((True, False), repeat=len(dets)):
        yield CoincidencePattern(
            required={d for d, f in zip(dets, flags) if f},
            forbidden={d for d, f in zip(dets, flags) if not f},
        )


PROJECTION_RULES = ("unit", "bosonic")


def project_and_renormalize(
    state: StateVector,
    spatial_mode: str,
    outcome: str,
    basis=None,
    rule: str = "unit",
) -> tuple[float, StateVector]:
    """Detect one photon of polarization ``outcome`` in ``spatial_mode``.

    The mode is first rotated into ``basis``.  Two rules are available:

    ``"unit"``
        every component with at least one photon in the detected slot loses
        one photon there with unchanged amplitude.  This reproduces the
        textbook three-photon remainder of the spin-1 singlet,
        (|1,0;0,2> - |0,1;1,1>)/sqrt 2.
    ``"bosonic"``
        a photon picked at random from the mode is measured: Kraus operator
        a_slot / sqrt(N_mode).  Components gain the bosonic sqrt(n) weight,
        and outcome probabilities over H and V add up to the probability of
        the mode being occupied.

    Returns the outcome probability and the normalized remaining state.
    """
    if spatial_mode not in MODE_SLOTS:
        raise ValueError(f"spatial_mode must be 'a' or 'b', got {spatial_mode!r}")
    if outcome not in ("H", "V"):
        raise ValueError(f"outcome must be 'H' or 'V', got {outcome!r}")
    if rule not in PROJECTION_RULES:
        raise ValueError(f"rule must be one of {PROJECTION_RULES}")
    slot = spatial_mode + outcome
    idx = SLOT_INDEX[slot]
    rotated = rotate(state, spatial_mode, _as_unitary(basis))
    out = {}
    for ket, amp in rotated.items():
        n = ket[idx]
        if n == 0:
            continue
        if rule == "unit":
            out[ket.shifted(slot, -1)] = amp
        else:
            out[ket.shifted(slot, -1)] = amp * math.sqrt(n / ket.mode_total(spatial_mode))
    remainder = StateVector(state.cutoff, out)
    probability = remainder.norm() ** 2
    if probability == 0:
        raise ZeroProbabilityOutcome(f"no {outcome} photon can be found in mode {spatial_mode}")
    return probability, remainder.normalized()


def _mode_key(ket: ModeOccupation, mode: str) -> tuple[int, int]:
    return tuple(ket[SLOT_INDEX[s]] for s in MODE_SLOTS[mode])


def amplitude_matrix(state: StateVector) -> tuple[np.ndarray, list, list]:
    """Amplitudes arranged as (mode-a occupation) x (mode-b occupation)."""
    rows = sorted({_mode_key(k, "a") for k in state})
    cols = sorted({_mode_key(k, "b") for k in state})
    ri = {r: i for i, r in enumerate(rows)}
    ci = {c: i for i, c in enumerate(cols)}
    m = np.zeros((len(rows), len(cols)), dtype=complex)
    for ket, amp in state.items():
        m[ri[_mode_key(ket, "a")], ci[_mode_key(ket, "b")]] = amp
    return m, rows, cols


def schmidt_coefficients(state: StateVector, tol: float = 1e-14) -> list[float]:
    """Schmidt coefficients across the mode-a | mode-b cut, descending."""
    m, _, _ = amplitude_matrix(state)
    if m.size == 0:
        return []
    s = np.linalg.svd(m, compute_uv=False)
    return [float(x) for x in s if x > tol]


def entanglement_entropy(state: StateVector) -> float:
    """Von Neumann entropy (bits) of the reduced state of mode a."""
    p = np.array(schmidt_coefficients(state)) ** 2
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def monte_carlo_counts(probabilities: Mapping[str, float], pulses: int, seed: int) -> dict[str, int]:
    """Counts of each pattern over ``pulses`` independent pulses.

    Each pattern fires on each pulse with its own probability, independent of
    the others; patterns are drawn in sorted-name order so a seed fixes the
    whole table.
    """
    if pulses < 0:
        raise ValueError("pulses must be >= 0")
    for name, p in probabilities.items():
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability for {name!r} outside [0, 1]: {p}")
    rng = np.random.default_rng(seed)
    return {name: int(rng.binomial(pulses, probabilities[name])) for name in sorted(probabilities)}
