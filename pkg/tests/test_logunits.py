import itertools

import numpy as np
import pytest

from modcdpr.cyclotomic import RingElement, field_norm_exact, galois_embed
from modcdpr.logunits import (
    canonical_torsion,
    cdpr_decode,
    cyclotomic_unit,
    error_matrix,
    fold,
    folded_log,
    is_unit,
    log_sine,
    orbit_table,
    short_generator,
    unfold,
    unit_from_exponents,
    unit_log_basis,
)
from modcdpr.signopt import SignProblem, solve_exhaustive, tower_greedy


def test_orbit_tables():
    assert orbit_table(4).reps == (1, 5, 7, 3)
    assert orbit_table(3).reps == (1, 3)
    for k in range(3, 13):
        reps = orbit_table(k).reps
        assert len(reps) == 2 ** (k - 2) == len(set(reps))
        assert all(r % 2 == 1 and 0 < r < 2 ** (k - 1) for r in reps)


def test_log_sine_values():
    z = log_sine(3)
    assert np.allclose(z, [np.log(2 * np.sin(np.pi / 8)), np.log(2 * np.sin(3 * np.pi / 8))])
    for k in range(3, 13):
        assert log_sine(k).sum() == pytest.approx(0.5 * np.log(2), abs=1e-9)
    assert all(log_sine(k)[0] < 0 for k in range(4, 10))


def brute_min(M):
    N = M.shape[1]
    return min(np.abs(M @ np.array(s)).max() for s in itertools.product([-1, 1], repeat=N) if abs(sum(s)) == 1)


@pytest.mark.parametrize("k", [4, 5])
def test_error_matrix_anchor(k):
    em = error_matrix(k)
    assert em.M.shape == (2 ** (k - 2), 2 ** (k - 2) - 1)
    assert np.all(np.isfinite(em.M))
    assert brute_min(em.M) == pytest.approx(0.4407, abs=5e-4)


def test_offset_zero_has_a_null_column():
    M0 = error_matrix(5, offset=0).M
    assert np.allclose(M0[:, 0], 0.0)


def test_error_matrix_closed_form():
    z = log_sine(6)
    M = error_matrix(6).M
    G = z.size
    for j in range(G - 1):
        assert np.allclose(M[:, j], 0.5 * (np.roll(z, j + 1) - z))


def test_error_matrix_csv_header():
    assert error_matrix(4).to_csv().splitlines()[0] == "k,|G|,N_s"


def test_unit_rows():
    for k in (3, 4, 5, 6):
        B = unit_log_basis(k)
        assert np.abs(B.rows.sum(axis=1)).max() < 1e-9
        assert np.linalg.matrix_rank(B.rows) == 2 ** (k - 2) - 1
        assert B.gram_det() > 0
    B = unit_log_basis(5)
    for m, a in enumerate(B.unit_indices, start=1):
        assert np.allclose(folded_log(cyclotomic_unit(a, 5)), B.rows[m - 1])


def test_units_are_units():
    for a in (3, 5, 7):
        xi = cyclotomic_unit(a, 4)
        assert abs(field_norm_exact(xi)) == 1
        assert is_unit(xi)


def test_fold_unfold():
    v = np.arange(4.0)
    assert np.allclose(unfold(fold(unfold(v, 4), 4), 4), unfold(v, 4))


def test_decode_lattice_point_exactly():
    B = unit_log_basis(5)
    e = np.array([2, -1, 0, 3, -2, 1, 0])
    dec = cdpr_decode(e @ B.rows, B)
    assert np.array_equal(dec.exponents, e)
    assert dec.residual_inf < 1e-9


def test_decode_with_noise():
    B = unit_log_basis(5)
    rng = np.random.default_rng(0)
    for _ in range(50):
        e = rng.integers(-5, 6, 7)
        noise = rng.uniform(-0.1, 0.1, 8)
        assert np.array_equal(cdpr_decode(e @ B.rows + noise, B).exponents, e)


def test_decode_signs_on_all_ties():
    B = unit_log_basis(5)
    M = error_matrix(5).M
    target = np.array([1, 0, -2, 0, 0, 1, 0]) @ B.rows + 0.5 * B.rows.sum(axis=0)
    for s in (solve_exhaustive(SignProblem(M)).s, tower_greedy(SignProblem(M)).s):
        dec = cdpr_decode(target, B, s)
        assert np.allclose(dec.residual, M @ s)


def test_decode_sign_monotone_on_tie_targets():
    B = unit_log_basis(5)
    prob = SignProblem.for_k(5)
    best, greedy = solve_exhaustive(prob), tower_greedy(prob)
    rng = np.random.default_rng(1)
    r_best, r_greedy = [], []
    for _ in range(100):
        t = rng.integers(-4, 5, 7) @ B.rows + 0.5 * B.rows.sum(axis=0)
        r_best.append(cdpr_decode(t, B, best).residual_inf)
        r_greedy.append(cdpr_decode(t, B, greedy).residual_inf)
    assert np.mean(r_best) <= np.mean(r_greedy)


def test_decode_rejects_nonfinite():
    with pytest.raises(ValueError):
        cdpr_decode(np.array([np.inf, 0, 0, 0]), unit_log_basis(4))


def test_short_generator_balanced_input():
    a = RingElement.scalar(3, 5)
    res = short_generator(a)
    assert res.alpha == a
    assert np.all(res.unit_exponents == 0)


def test_short_generator_planted():
    rng = np.random.default_rng(3)
    k = 5
    for _ in range(10):
        g = RingElement.from_int_array(rng.integers(-2, 3, 16), k)
        if g.is_zero():
            continue
        u = unit_from_exponents(rng.integers(-3, 4, 7), k)
        a0 = g * u
        res = short_generator(a0)
        assert galois_embed(res.alpha, 53).norm_inf() <= galois_embed(a0, 53).norm_inf()
        assert field_norm_exact(res.alpha) == field_norm_exact(a0) or field_norm_exact(res.alpha) == -field_norm_exact(a0)
        assert is_unit(res.alpha / a0)


def test_canonical_torsion():
    a = RingElement.from_int_array([1, 2, 3, 4], 3)
    c = canonical_torsion(a)
    for m in range(8):
        assert canonical_torsion(a * RingElement.zeta(m, 3)) == c
