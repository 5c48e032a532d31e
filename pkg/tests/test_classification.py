import numpy as np
import pytest

from conftest import E12, I2, random_frame
from logconn.classification import (
    act,
    datum_invariants,
    equivalent,
    functor_R,
    random_group_element,
    random_valid_datum,
    validate_datum,
)
from logconn.datum import MonodromyDatum
from logconn.errors import Singular, ValidationFailure
from logconn.local import functor_L, monodromy
from logconn.matrix_core import conjugacy_test, mat_exp
from oracles import unipotent_orbit_scale

A10 = np.diag([1.0, 0.0])
RESONANT = MonodromyDatum(I2 + 2j * np.pi * E12, I2, A10)


def trivial(A0):
    return MonodromyDatum(mat_exp(2j * np.pi * np.asarray(A0, complex)), np.eye(len(A0)), A0)


def test_validate_examples(rng):
    A0 = 0.4 * rng.standard_normal((3, 3))
    rep = validate_datum(trivial(A0))
    assert rep.passed and max(rep.residuals.values()) < 1e-10

    assert validate_datum(RESONANT).passed

    rep = validate_datum(MonodromyDatum(np.diag([2.0, 3.0]), I2, A10))
    assert not rep.passed
    assert "chi" in rep.failed()


def test_validate_singular_input():
    with pytest.raises(Singular):
        validate_datum(MonodromyDatum(np.diag([1.0, 0.0]), I2, A10))


def test_validate_wrong_support():
    # lower-triangular entry sits at weight -1
    rep = validate_datum(MonodromyDatum(I2 + E12.T, I2, A10))
    assert not rep.passed and "support" in rep.failed()


def test_functor_R_examples():
    A0 = np.diag([1 / 3, -0.2])
    conn = functor_R(trivial(A0))
    assert conn.degree == 0
    assert conn.coeffs[0] is not None and np.array_equal(conn.coeffs[0], A0)

    conn = functor_R(RESONANT)
    assert conn.degree == 1
    np.testing.assert_array_equal(conn.coeffs[0], A10)
    np.testing.assert_allclose(conn.coeffs[1], E12, atol=1e-12)

    with pytest.raises(ValidationFailure):
        functor_R(MonodromyDatum(np.diag([2.0, 3.0]), I2, A10))


def test_functor_R_residue_is_bitwise(rng):
    d = random_valid_datum(3, rng)
    conn = functor_R(d, tol=1e-7)
    assert conn.coeffs[0] is d.A


def test_functor_R_monodromy_round_trip(rng):
    for _ in range(4):
        d = random_valid_datum(3, rng, max_weight=2)
        conn = functor_R(d, tol=1e-7)
        assert conjugacy_test(monodromy(conn), d.M, tol=1e-6).same_class


def test_invariants_examples(rng):
    A0 = np.diag([0.25, -0.3])
    inv = datum_invariants(trivial(A0))
    assert all(r == 0 for w, r in inv.weight_dims().items() if w > 0)

    assert datum_invariants(RESONANT).weight_dims() == {0: 0, 1: 1}

    d = random_valid_datum(4, rng)
    g = random_group_element(d.A, rng)
    assert datum_invariants(d).matches(datum_invariants(act(d, g)))


def test_act_stays_valid(rng):
    d = random_valid_datum(3, rng)
    g = random_group_element(d.A, rng)
    moved = act(d, g)
    assert validate_datum(moved, tol=1e-7).passed
    np.testing.assert_array_equal(moved.M, d.M)


def test_equivalent_examples():
    v = equivalent(RESONANT, RESONANT)
    assert v.equivalent
    np.testing.assert_allclose(v.witness, I2)

    other = MonodromyDatum(I2 + 4j * np.pi * E12, I2, A10)
    v = equivalent(RESONANT, other)
    assert v.equivalent
    X = v.witness
    np.testing.assert_allclose(X @ RESONANT.M @ np.linalg.inv(X), other.M, atol=1e-8)
    # a witness lies in C(A) x| U_N(S): upper triangular with ratio of diagonal 2
    assert abs(X[1, 0]) < 1e-10
    assert abs(X[0, 0] / X[1, 1] - 2) < 1e-8

    v = equivalent(RESONANT, MonodromyDatum(I2, I2, A10))
    assert v.verdict == "inequivalent-certified"


def test_equivalent_detects_different_residues():
    v = equivalent(trivial(np.diag([0.1, 0.2])), trivial(np.diag([0.1, 0.3])))
    assert v.verdict == "inequivalent-certified"


def test_equivalence_matches_hand_orbits():
    # orbits of c under [[p, q], [0, r]] are {0} and C \ {0}
    cs = [0, 1, -2, 1j, 0.5 + 0.5j]
    for c1 in cs:
        for c2 in cs:
            d1 = MonodromyDatum(I2 + 2j * np.pi * c1 * E12, I2, A10)
            d2 = MonodromyDatum(I2 + 2j * np.pi * c2 * E12, I2, A10)
            v = equivalent(d1, d2)
            assert v.verdict != "undecided"
            assert v.equivalent == unipotent_orbit_scale(c1, c2)


def test_non_resonant_family_has_no_freedom():
    # with A = diag(1/3, 0) no unipotent twist is allowed, so the datum is rigid
    A = np.diag([1 / 3, 0.0])
    d = trivial(A)
    Q = random_frame(np.random.default_rng(7), 2)
    moved = MonodromyDatum(Q @ d.M @ np.linalg.inv(Q), Q, A)
    assert validate_datum(moved).passed
    assert equivalent(d, moved).equivalent


def test_equivalence_under_group_action(rng):
    for _ in range(6):
        d = random_valid_datum(3, rng)
        g = random_group_element(d.A, rng)
        v = equivalent(d, act(d, g))
        assert v.equivalent, v.reason


def test_L_after_R_preserves_invariants(rng):
    d = random_valid_datum(3, rng, max_weight=2)
    back = functor_L(functor_R(d, tol=1e-7))
    assert validate_datum(back, tol=1e-6).passed
    assert datum_invariants(back).matches(datum_invariants(d), tol=1e-6)
