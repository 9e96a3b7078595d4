import math

import numpy as np
import pytest

from easer_sim.errors import CutoffExceeded, NotUnitary
from easer_sim.fock import basis_state, fidelity, inner_product
from easer_sim.pdc import singlet_term
from easer_sim.polarization import PolarizationUnitary, half_wave_swap, random_unitary, rotate

from conftest import random_state


def close_states(s1, s2, tol=1e-12):
    keys = set(s1) | set(s2)
    return all(abs(s1[k] - s2[k]) <= tol for k in keys)


def test_unitarity_enforced():
    with pytest.raises(NotUnitary):
        PolarizationUnitary(1, 1, 0, 1)
    PolarizationUnitary.rotation(0.3)


def test_identity_rotation(rng):
    s = random_state(rng, 3)
    assert close_states(rotate(s, "both", PolarizationUnitary.identity()), s)


def test_single_photon_transport():
    u = PolarizationUnitary.diagonal()
    s = rotate(basis_state((1, 0, 0, 0), 1), "a", u)
    # h+ -> u_hh h+ + u_vh v+
    assert s[(1, 0, 0, 0)] == pytest.approx(u.u_hh)
    assert s[(0, 1, 0, 0)] == pytest.approx(u.u_vh)


def test_two_photon_transport_oracle():
    # (c h+ - s v+)^2 / sqrt 2 |0> for the real rotation
    c = s_ = math.sqrt(0.5)
    out = rotate(basis_state((2, 0, 0, 0), 2), "a", PolarizationUnitary.diagonal())
    assert out[(2, 0, 0, 0)] == pytest.approx(c * c)
    assert out[(1, 1, 0, 0)] == pytest.approx(-2 * c * s_ / math.sqrt(2))
    assert out[(0, 2, 0, 0)] == pytest.approx(s_ * s_)


@pytest.mark.parametrize("n", [1, 2])
def test_diagonal_basis_leaves_singlet_invariant(n):
    s = singlet_term(n)
    assert fidelity(rotate(s, "both", PolarizationUnitary.diagonal()), s) == pytest.approx(1, abs=1e-12)


def test_norm_preserved_for_random_unitaries(rng):
    for _ in range(100):
        s = random_state(rng, 3, nnz=5, max_total=3)
        u = random_unitary(rng)
        out = rotate(s, rng.choice(["a", "b", "both"]), u)
        assert out.norm() == pytest.approx(s.norm(), rel=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_singlet_invariant_under_common_unitaries(rng, n):
    s = singlet_term(n)
    for _ in range(50):
        out = rotate(s, "both", random_unitary(rng))
        assert abs(abs(inner_product(s, out)) - 1) <= 1e-10


def test_composition(rng):
    for _ in range(20):
        s = random_state(rng, 3, nnz=5, max_total=3)
        u1, u2 = random_unitary(rng), random_unitary(rng)
        lhs = rotate(rotate(s, "both", u1), "both", u2)
        rhs = rotate(s, "both", u2 @ u1)
        assert close_states(lhs, rhs)


def test_rotation_past_cutoff_raises():
    s = basis_state((1, 1, 0, 0), 1)
    with pytest.raises(CutoffExceeded):
        rotate(s, "a", PolarizationUnitary.diagonal())


def test_half_wave_swap():
    s = basis_state((1, 0, 0, 1), 1)
    assert close_states(half_wave_swap(s, "both"), basis_state((0, 1, 1, 0), 1))
    assert close_states(half_wave_swap(s, "a"), basis_state((0, 1, 0, 1), 1))


def test_half_wave_swap_involutive(rng):
    s = random_state(rng, 3)
    assert close_states(half_wave_swap(half_wave_swap(s, "both"), "both"), s)


def test_half_wave_on_singlet_flips_sign():
    s = singlet_term(1)
    assert close_states(half_wave_swap(s, "both"), s.scaled(-1))


def test_half_wave_swap_equals_exchange_unitary(rng):
    s = random_state(rng, 3, nnz=5, max_total=3)
    swap = PolarizationUnitary.from_matrix(np.array([[0, 1], [1, 0]]))
    assert close_states(half_wave_swap(s, "a"), rotate(s, "a", swap))


def test_bad_mode():
    with pytest.raises(ValueError):
        rotate(singlet_term(1), "c", PolarizationUnitary.identity())
