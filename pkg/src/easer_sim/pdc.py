"""Type-II down-conversion: pair operators, exact evolution and the analytic output state."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import norm as sparse_norm

from .errors import ConvergenceFailure, CutoffExceeded, UnsupportedState
from .fock import ModeOccupation, StateVector, apply_ladder, vacuum

SERIES_TOLERANCE = 1e-12
MAX_SERIES_TERMS = 200


@dataclass(frozen=True)
class PdcParams:
    """Single-pass parameters.

    ``tau`` is the dimensionless interaction parameter (coupling times
    interaction time over hbar); ``pump_phase`` is the pump phase in radians;
    ``cutoff`` is the maximum number of pairs kept.  ``tolerance`` bounds the
    truncation estimate ``tanh(tau)**(cutoff+1) * (cutoff+2)``.
    """

    tau: float
    pump_phase: float = 0.0
    cutoff: int = 12
    tolerance: float = 1e-5

    def __post_init__(self):
        if not self.tau >= 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.cutoff < 0 or (self.tau > 0 and self.cutoff < 1):
            raise ValueError(f"cutoff must be >= 1 when tau > 0, got {self.cutoff}")
        err = truncation_error(self.tau, self.cutoff)
        if err > self.tolerance:
            raise CutoffExceeded(
                f"cutoff {self.cutoff} too small for tau={self.tau}: "
                f"truncation estimate {err:.3g} > tolerance {self.tolerance:.3g}"
            )

    @classmethod
    def from_mean_pairs(cls, mean_pairs: float, **kwargs) -> "PdcParams":
        """Choose tau so that the untruncated mean pair number is ``mean_pairs``."""
        return cls(tau=math.asinh(math.sqrt(mean_pairs / 2.0)), **kwargs)


def truncation_error(tau: float, cutoff: int) -> float:
    return math.tanh(tau) ** (cutoff + 1) * (cutoff + 2)


def pair_number(ket: ModeOccupation) -> int:
    return ket.total // 2


def apply_K_dagger(state: StateVector) -> StateVector:
    """Create one polarization-entangled pair: a_H+ b_V+ - a_V+ b_H+."""
    hv = apply_ladder(apply_ladder(state, "bV", "raise"), "aH", "raise")
    vh = apply_ladder(apply_ladder(state, "bH", "raise"), "aV", "raise")
    return hv - vh


def apply_K(state: StateVector) -> StateVector:
    """Annihilate one pair: a_H b_V - a_V b_H."""
    hv = apply_ladder(apply_ladder(state, "bV", "lower"), "aH", "lower")
    vh = apply_ladder(apply_ladder(state, "bH", "lower"), "aV", "lower")
    return hv - vh


def _generator_matrix(seed: StateVector, phase: float):
    """Matrix of e^{i phase} K+ + e^{-i phase} K on the subspace reachable from ``seed``.

    The subspace is closed under K and K+ except at the truncation edge, where
    K+ is projected out explicitly.
    """
    cutoff = seed.cutoff
    index: dict[ModeOccupation, int] = {}
    queue = deque()
    for ket in seed:
        index[ket] = len(index)
        queue.append(ket)
    rows, cols, vals = [], [], []
    up = np.exp(1j * phase)
    while queue:
        ket = queue.popleft()
        single = StateVector(cutoff, {ket: 1.0})
        images = [(np.conj(up), apply_K(single))]
        try:
            images.append((up, apply_K_dagger(single)))
        except CutoffExceeded:
            pass
        for factor, image in images:
            for target, amp in image.items():
                if target not in index:
                    index[target] = len(index)
                    queue.append(target)
                rows.append(index[target])
                cols.append(index[ket])
                vals.append(factor * amp)
    dim = len(index)
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim), dtype=complex)
    return matrix, list(index)


def _expm_multiply(matrix, vector: np.ndarray, scale: complex) -> np.ndarray:
    """exp(scale * matrix) @ vector by a step-split Taylor series with residual tracking."""
    norm1 = abs(scale) * sparse_norm(matrix, 1) if matrix.nnz else 0.0
    steps = max(1, int(math.ceil(norm1)))
    h = scale / steps
    v = vector.astype(complex)
    for _ in range(steps):
        term = v
        total = v.copy()
        for k in range(1, MAX_SERIES_TERMS + 1):
            term = (h / k) * (matrix @ term)
            total += term
            if np.linalg.norm(term) <= 1e-17 * np.linalg.norm(total):
                break
        else:
            residual = np.linalg.norm(term) / np.linalg.norm(total)
            if residual > SERIES_TOLERANCE:
                raise ConvergenceFailure(
                    f"series residual {residual:.3g} after {MAX_SERIES_TERMS} terms"
                )
        v = total
    return v


def evolve(state: StateVector, tau: float, phase: float = 0.0) -> StateVector:
    """Apply exp(i tau (e^{i phase} K+ + e^{-i phase} K)) to ``state``.

    The result is renormalized, so whatever leaks past the truncation is
    absorbed in the normalization; keep the cutoff adequate for ``tau``.
    """
    if tau == 0:
        return state
    matrix, basis = _generator_matrix(state, phase)
    vec = np.zeros(len(basis), dtype=complex)
    for i, ket in enumerate(basis):
        vec[i] = state[ket]
    out = _expm_multiply(matrix, vec, 1j * tau)
    result = StateVector(state.cutoff, dict(zip(basis, out)))
    return result.normalized()


def evolve_exact(params: PdcParams) -> StateVector:
    """Down-converted state from vacuum by exact (truncated) evolution.

    Uses U = exp(+i H t / hbar) as written for this model.  The n-pair block
    then carries the factor (i e^{i phi})^n relative to :func:`state_analytic`;
    see :func:`with_block_phases`.
    """
    return evolve(vacuum(params.cutoff), params.tau, params.pump_phase)


def state_analytic(params: PdcParams) -> StateVector:
    """Closed-form output: amplitude (tanh tau)^n (-1)^m on |n-m,m;m,n-m>, normalized."""
    t = math.tanh(params.tau)
    amps = {}
    for n in range(params.cutoff + 1):
        weight = t**n
        if weight == 0 and n > 0:
            break
        for m in range(n + 1):
            amps[ModeOccupation(n - m, m, m, n - m)] = (-1) ** m * weight
    return StateVector(params.cutoff, amps).normalized()


def with_block_phases(state: StateVector, factor: complex) -> StateVector:
    """Multiply each n-pair block by ``factor**n``."""
    return StateVector(state.cutoff, {k: a * factor ** pair_number(k) for k, a in state.items()})


def evolution_phase_factor(pump_phase: float) -> complex:
    """Per-pair phase that :func:`evolve_exact` adds on top of the analytic state."""
    return 1j * np.exp(1j * pump_phase)


def _is_pair_ket(ket: ModeOccupation) -> bool:
    return ket.aH == ket.bV and ket.aV == ket.bH


def pair_distribution(state: StateVector) -> list[tuple[int, float]]:
    """Photon-pair number distribution P(n), n = 0..cutoff."""
    bad = [k for k in state if not _is_pair_ket(k)]
    if bad:
        raise UnsupportedState(f"{bad[0].label()} is not of the form |n-m,m;m,n-m>")
    norm = state.norm()
    if abs(norm - 1) > 1e-10:
        raise UnsupportedState(f"state must be normalized, norm={norm!r}")
    probs = [0.0] * (state.cutoff + 1)
    for ket, amp in state.items():
        probs[pair_number(ket)] += abs(amp) ** 2
    return list(enumerate(probs))


def mean_pair_number(state: StateVector) -> float:
    return sum(n * p for n, p in pair_distribution(state))


def pair_distribution_closed_form(tau: float, n: int) -> float:
    """(n+1) tanh^{2n} tau (1 - tanh^2 tau)^2, the untruncated P(n)."""
    t2 = math.tanh(tau) ** 2
    return (n + 1) * t2**n * (1 - t2) ** 2


def singlet_term(n: int, cutoff: int | None = None) -> StateVector:
    """Normalized n-pair term, the rotationally invariant spin-n/2 singlet."""
    if n < 0:
        raise ValueError("n must be >= 0")
    cutoff = n if cutoff is None else cutoff
    if n > cutoff:
        raise CutoffExceeded(f"n={n} exceeds cutoff {cutoff}")
    c = 1 / math.sqrt(n + 1)
    return StateVector(cutoff, {ModeOccupation(n - m, m, m, n - m): (-1) ** m * c for m in range(n + 1)})
