"""Polarization basis changes on the (H, V) slots of each spatial mode."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CutoffExceeded, NotUnitary
from .fock import MODE_SLOTS, SLOT_INDEX, ModeOccupation, StateVector

UNITARITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PolarizationUnitary:
    """2x2 unitary acting on the (H, V) pair of one spatial mode.

    Creation operators are transported as
    ``h+ -> u_hh h+ + u_vh v+`` and ``v+ -> u_hv h+ + u_vv v+``.
    """

    u_hh: complex
    u_hv: complex
    u_vh: complex
    u_vv: complex

    def __post_init__(self):
        m = self.matrix
        err = np.max(np.abs(m @ m.conj().T - np.eye(2)))
        if not err <= UNITARITY_TOLERANCE:
            raise NotUnitary(f"U U^dagger deviates from identity by {err:.3g}")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.u_hh, self.u_hv], [self.u_vh, self.u_vv]], dtype=complex)

    @classmethod
    def from_matrix(cls, m) -> "PolarizationUnitary":
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @classmethod
    def identity(cls) -> "PolarizationUnitary":
        return cls(1, 0, 0, 1)

    @classmethod
    def rotation(cls, angle: float) -> "PolarizationUnitary":
        """Real rotation with rows (cos, sin; -sin, cos)."""
        c, s = math.cos(angle), math.sin(angle)
        return cls(c, s, -s, c)

    @classmethod
    def diagonal(cls) -> "PolarizationUnitary":
        """The 45/-45 degree analysis basis."""
        return cls.rotation(math.pi / 4)

    def __matmul__(self, other: "PolarizationUnitary") -> "PolarizationUnitary":
        return PolarizationUnitary.from_matrix(self.matrix @ other.matrix)

    def _key(self):
        return (complex(self.u_hh), complex(self.u_hv), complex(self.u_vh), complex(self.u_vv))


def random_unitary(rng: np.random.Generator) -> PolarizationUnitary:
    """Haar-random 2x2 unitary (QR of a complex Gaussian matrix)."""
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    # re-orthonormalize once more so the 1e-12 unitarity check is never marginal
    q, _ = np.linalg.qr(q)
    return PolarizationUnitary.from_matrix(q)


@lru_cache(maxsize=4096)
def _mode_image(n_h: int, n_v: int, key) -> dict[tuple[int, int], complex]:
    """Image of |n_h, n_v> under the mode transformation, as {(h, v): amplitude}."""
    u_hh, u_hv, u_vh, u_vv = key
    norm = math.sqrt(math.factorial(n_h) * math.factorial(n_v))
    out: dict[tuple[int, int], complex] = {}
    for j in range(n_h + 1):
        cj = math.comb(n_h, j) * u_hh**j * u_vh ** (n_h - j)
        if cj == 0:
            continue
        for k in range(n_v + 1):
            ck = math.comb(n_v, k) * u_hv**k * u_vv ** (n_v - k)
            if ck == 0:
                continue
            h = j + k
            v = n_h + n_v - h
            amp = cj * ck * math.sqrt(math.factorial(h) * math.factorial(v)) / norm
            out[(h, v)] = out.get((h, v), 0j) + amp
    return out


def _modes(spatial_mode: str) -> tuple[str, ...]:
    if spatial_mode == "both":
        return ("a", "b")
    if spatial_mode in MODE_SLOTS:
        return (spatial_mode,)
    raise ValueError(f"spatial_mode must be 'a', 'b' or 'both', got {spatial_mode!r}")


def _rotate_mode(state: StateVector, mode: str, U: PolarizationUnitary) -> StateVector:
    ih, iv = (SLOT_INDEX[s] for s in MODE_SLOTS[mode])
    key = U._key()
    out: dict[ModeOccupation, complex] = {}
    for ket, amp in state.items():
        for (h, v), coef in _mode_image(ket[ih], ket[iv], key).items():
            counts = list(ket)
            counts[ih], counts[iv] = h, v
            new = ModeOccupation(*counts)
            out[new] = out.get(new, 0j) + amp * coef
    for ket, amp in out.items():
        if amp != 0 and not ket.fits(state.cutoff):
            raise CutoffExceeded(f"rotation populates {ket.label()} beyond cutoff {state.cutoff}")
    return StateVector(state.cutoff, {k: a for k, a in out.items() if a != 0})


def rotate(state: StateVector, spatial_mode: str, U: PolarizationUnitary) -> StateVector:
    """Apply the polarization unitary ``U`` to spatial mode ``a``, ``b`` or ``both``."""
    if not isinstance(U, PolarizationUnitary):
        U = PolarizationUnitary.from_matrix(U)
    for mode in _modes(spatial_mode):
        state = _rotate_mode(state, mode, U)
    return state


def half_wave_swap(state: StateVector, spatial_mode: str) -> StateVector:
    """Exchange the H and V occupations (a half-wave plate at 45 degrees)."""
    swaps = [tuple(SLOT_INDEX[s] for s in MODE_SLOTS[m]) for m in _modes(spatial_mode)]
    out = {}
    for ket, amp in state.items():
        counts = list(ket)
        for ih, iv in swaps:
            counts[ih], counts[iv] = counts[iv], counts[ih]
        out[ModeOccupation(*counts)] = amp
    return StateVector(state.cutoff, out)
