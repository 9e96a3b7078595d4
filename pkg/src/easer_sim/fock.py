"""Truncated four-mode Fock space.

The four bosonic slots are the horizontal and vertical polarizations of the
two spatial modes ``a`` and ``b``, ordered ``(aH, aV, bH, bV)``.  Kets are
written ``|aH,aV;bH,bV>``.

The truncation is counted in photon *pairs*: with ``cutoff = c`` every slot
holds at most ``c`` photons and the total photon number is at most ``2c``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import CutoffExceeded

SLOTS = ("aH", "aV", "bH", "bV")
SLOT_INDEX = {name: i for i, name in enumerate(SLOTS)}
MODE_SLOTS = {"a": ("aH", "aV"), "b": ("bH", "bV")}


class _Counts(NamedTuple):
    aH: int
    aV: int
    bH: int
    bV: int


class ModeOccupation(_Counts):
    """Photon counts per slot, e.g. ``ModeOccupation(1, 0, 0, 1)``."""

    __slots__ = ()

    def __new__(cls, aH: int = 0, aV: int = 0, bH: int = 0, bV: int = 0):
        counts = (aH, aV, bH, bV)
        for n in counts:
            if int(n) != n or n < 0:
                raise ValueError(f"photon counts must be non-negative integers, got {counts}")
        return super().__new__(cls, *(int(n) for n in counts))

    @property
    def total(self) -> int:
        return sum(self)

    def mode_total(self, mode: str) -> int:
        return sum(self[SLOT_INDEX[s]] for s in MODE_SLOTS[mode])

    def shifted(self, slot: str, delta: int) -> "ModeOccupation":
        counts = list(self)
        counts[SLOT_INDEX[slot]] += delta
        return ModeOccupation(*counts)

    def fits(self, cutoff: int) -> bool:
        return max(self) <= cutoff and self.total <= 2 * cutoff

    def label(self) -> str:
        return f"|{self.aH},{self.aV};{self.bH},{self.bV}>"

    @classmethod
    def parse(cls, text: str) -> "ModeOccupation":
        """Parse ``"|1,0;0,1>"`` or ``"1,0,0,1"``."""
        cleaned = text.strip().strip("|<>").replace(";", ",")
        try:
            counts = [int(c) for c in cleaned.split(",")]
        except ValueError:
            raise ValueError(f"cannot parse ket {text!r}") from None
        if len(counts) != 4:
            raise ValueError(f"ket {text!r} must have four slots")
        return cls(*counts)


def _check_slot(slot: str) -> None:
    if slot not in SLOT_INDEX:
        raise ValueError(f"unknown slot {slot!r}; expected one of {SLOTS}")


@dataclass(frozen=True)
class StateVector:
    """Sparse complex amplitudes over :class:`ModeOccupation` kets.

    Instances are immutable; every operation returns a new state.  Exact zero
    amplitudes are dropped on construction.
    """

    cutoff: int
    amplitudes: Mapping[ModeOccupation, complex] = field(default_factory=dict)

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError("cutoff must be >= 0")
        clean = {}
        for ket, amp in self.amplitudes.items():
            ket = ket if isinstance(ket, ModeOccupation) else ModeOccupation(*ket)
            if not ket.fits(self.cutoff):
                raise CutoffExceeded(f"{ket.label()} exceeds cutoff {self.cutoff}")
            amp = complex(amp)
            if amp != 0:
                clean[ket] = amp
        object.__setattr__(self, "amplitudes", MappingProxyType(clean))

    def __getitem__(self, ket) -> complex:
        if not isinstance(ket, ModeOccupation):
            ket = ModeOccupation(*ket)
        return self.amplitudes.get(ket, 0j)

    def __iter__(self) -> Iterator[ModeOccupation]:
        return iter(self.amplitudes)

    def __len__(self) -> int:
        return len(self.amplitudes)

    def items(self):
        return self.amplitudes.items()

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise ZeroDivisionError("cannot normalize the zero vector")
        return self.scaled(1.0 / nrm)

    def scaled(self, factor: complex) -> "StateVector":
        return StateVector(self.cutoff, {k: factor * a for k, a in self.items()})

    def __add__(self, other: "StateVector") -> "StateVector":
        cutoff = max(self.cutoff, other.cutoff)
        out = dict(self.amplitudes)
        for k, a in other.items():
            out[k] = out.get(k, 0j) + a
        return StateVector(cutoff, out)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + other.scaled(-1)

    def __mul__(self, factor: complex) -> "StateVector":
        return self.scaled(factor)

    __rmul__ = __mul__

    def with_cutoff(self, cutoff: int) -> "StateVector":
        return StateVector(cutoff, self.amplitudes)

    def project(self, predicate) -> "StateVector":
        """Keep only the kets for which ``predicate(ket)`` is true."""
        return StateVector(self.cutoff, {k: a for k, a in self.items() if predicate(k)})

    def pair_block(self, n: int) -> "StateVector":
        return self.project(lambda k: k.total == 2 * n)

    def is_zero(self) -> bool:
        return not self.amplitudes


def vacuum(cutoff: int) -> StateVector:
    if cutoff < 0:
        raise ValueError("cutoff must be >= 0")
    return StateVector(cutoff, {ModeOccupation(0, 0, 0, 0): 1.0})


def basis_state(ket, cutoff: int) -> StateVector:
    if not isinstance(ket, ModeOccupation):
        ket = ModeOccupation(*ket)
    return StateVector(cutoff, {ket: 1.0})


def superposition(terms: Iterable[tuple[complex, tuple]], cutoff: int) -> StateVector:
    out: dict[ModeOccupation, complex] = {}
    for amp, ket in terms:
        ket = ModeOccupation(*ket)
        out[ket] = out.get(ket, 0j) + amp
    return StateVector(cutoff, out)


def apply_ladder(state: StateVector, slot: str, direction: str) -> StateVector:
    """Apply a single-slot creation (``"raise"``) or annihilation (``"lower"``) operator.

    Raising a ket past the truncation raises :class:`CutoffExceeded`; nothing
    is dropped silently.
    """
    _check_slot(slot)
    idx = SLOT_INDEX[slot]
    out = {}
    if direction == "raise":
        for ket, amp in state.items():
            new = ket.shifted(slot, +1)
            if not new.fits(state.cutoff):
                raise CutoffExceeded(
                    f"raising {slot} on {ket.label()} leaves cutoff {state.cutoff}"
                )
            out[new] = amp * math.sqrt(ket[idx] + 1)
    elif direction == "lower":
        for ket, amp in state.items():
            if ket[idx] > 0:
                out[ket.shifted(slot, -1)] = amp * math.sqrt(ket[idx])
    else:
        raise ValueError(f"direction must be 'raise' or 'lower', got {direction!r}")
    return StateVector(state.cutoff, out)


def inner_product(s1: StateVector, s2: StateVector) -> complex:
    """<s1|s2>, conjugate-linear in ``s1``."""
    if len(s1) > len(s2):
        return sum(s1[k].conjugate() * a for k, a in s2.items())
    return sum(a.conjugate() * s2[k] for k, a in s1.items())


def fidelity(s1: StateVector, s2: StateVector) -> float:
    """Overlap magnitude |<s1|s2>| / (|s1| |s2|); 1 means equal up to a global phase."""
    return abs(inner_product(s1, s2)) / (s1.norm() * s2.norm())


def enumerate_basis(cutoff: int) -> list[ModeOccupation]:
    """All kets within the truncation, in lexicographic slot order."""
    rng = range(cutoff + 1)
    return [
        ModeOccupation(*c)
        for c in ((i, j, k, l) for i in rng for j in rng for k in rng for l in rng)
        if sum(c) <= 2 * cutoff
    ]
