"""Design assembly and regularized least squares."""

import numpy as np
import pytest

from arffkit.exceptions import SingularGramWarning, SingularSystemError
from arffkit.lsq import (
    COMPLEX_EXP,
    COSINE_BIAS,
    assemble_design,
    data_residual,
    normal_residual,
    normal_system,
    residual_metric,
    solve_normal_system,
    solve_regularized,
)


def test_design_entry_complex_exp():
    # single frequency 1.5 at x = 1.0: entry is exp(1.5i)
    d = assemble_design(np.array([[1.5]]), np.array([[1.0]]), COMPLEX_EXP)
    assert d.shape == (1, 1)
    assert d.dtype == np.complex128
    assert d[0, 0] == pytest.approx(0.0707372016677029 + 0.9974949866040544j,
                                    abs=1e-15)


def test_design_entry_cosine_bias():
    # frequency row carries (w, b); entry is cos(w.x + b)
    d = assemble_design(np.array([[1.5, 0.25]]), np.array([[1.0]]), COSINE_BIAS)
    assert d.dtype == np.float64
    assert d[0, 0] == np.cos(1.75)


def test_design_shapes():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((7, 3))
    w = rng.standard_normal((4, 3))
    assert assemble_design(w, x, COMPLEX_EXP).shape == (7, 4)
    wb = rng.standard_normal((4, 4))  # 3 weights + bias
    assert assemble_design(wb, x, COSINE_BIAS).shape == (7, 4)


def test_design_rejects_dimension_mismatch():
    with pytest.raises(ValueError):
        assemble_design(np.zeros((2, 3)), np.zeros((5, 4)), COMPLEX_EXP)
    with pytest.raises(ValueError):
        # cosine rows need one extra bias column
        assemble_design(np.zeros((2, 4)), np.zeros((5, 4)), COSINE_BIAS)


def test_unregularized_matches_lstsq():
    """lam = 0 reduces to plain least squares (tall well-conditioned system)."""
    for seed in range(20):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 9))
        m = int(rng.integers(k + 4, 64))
        s = assemble_design(rng.standard_normal((k, 2)),
                            rng.standard_normal((m, 2)), COMPLEX_EXP)
        y = rng.standard_normal(m)
        a = solve_regularized(s, y, 0.0)
        ref, *_ = np.linalg.lstsq(s, y.astype(complex), rcond=None)
        assert np.allclose(a, ref, rtol=1e-8, atol=1e-10)


def test_ridge_matches_direct_solve():
    """Regularized amplitudes solve (S^H S + lam M I) a = S^H y exactly."""
    for seed in range(20):
        rng = np.random.default_rng(100 + seed)
        k = int(rng.integers(1, 10))
        m = int(rng.integers(k + 1, 80))
        lam = float(rng.choice([1e-3, 0.1, 10.0]))
        for act in (COMPLEX_EXP, COSINE_BIAS):
            cols = 2 if act == COMPLEX_EXP else 3
            s = assemble_design(rng.standard_normal((k, cols)),
                                rng.standard_normal((m, 2)), act)
            y = rng.standard_normal(m)
            a = solve_regularized(s, y, lam)
            lhs = s.conj().T @ s + lam * m * np.eye(k)
            ref = np.linalg.solve(lhs, s.conj().T @ y)
            rel = np.linalg.norm(a - ref) / max(np.linalg.norm(ref), 1e-30)
            assert rel < 1e-8


def test_multichannel_targets_share_factorization():
    rng = np.random.default_rng(42)
    s = assemble_design(rng.standard_normal((5, 3)),
                        rng.standard_normal((40, 2)), COSINE_BIAS)
    y = rng.standard_normal((40, 3))
    a = solve_regularized(s, y, 0.01)
    assert a.shape == (5, 3)
    for c in range(3):
        ac = solve_regularized(s, y[:, c], 0.01)
        assert np.allclose(a[:, c], ac, rtol=1e-12, atol=1e-14)


def test_residual_metric_is_regularization_gauge():
    """At the regularized minimizer the normal-equation residual equals
    -lam * M * a, so the metric collapses to (lam M)^2 ||a||^2 / M."""
    rng = np.random.default_rng(7)
    s = assemble_design(rng.standard_normal((5, 2)),
                        rng.standard_normal((40, 2)), COMPLEX_EXP)
    y = rng.standard_normal(40)
    lam = 0.1
    a = solve_regularized(s, y, lam)
    metric = residual_metric(s, a, y)
    expected = (lam * 40) ** 2 * float(np.vdot(a, a).real) / 40
    assert metric == pytest.approx(expected, rel=1e-10)


def test_data_residual_mean_over_all_entries():
    s = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    a = np.array([2.0, 3.0])
    y = np.array([2.0, 3.0, 0.0])  # residuals 0, 0, 5
    assert data_residual(s, a, y) == pytest.approx(25.0 / 3.0)
    # multichannel output averages across samples and channels jointly
    y2 = np.stack([y, y], axis=1)
    a2 = np.stack([a, a], axis=1)
    assert data_residual(s, a2, y2) == pytest.approx(25.0 / 3.0)


def test_singular_gram_warns_and_still_solves():
    # duplicated frequency rows make the unregularized Gram exactly singular
    w = np.array([[1.0, 2.0], [1.0, 2.0]])
    x = np.random.default_rng(3).standard_normal((10, 2))
    s = assemble_design(w, x, COMPLEX_EXP)
    y = np.ones(10)
    with pytest.warns(SingularGramWarning):
        a = solve_regularized(s, y, 0.0)
    ref, *_ = np.linalg.lstsq(s, y.astype(complex), rcond=None)
    assert np.allclose(s @ a, s @ ref, atol=1e-8)


def test_singular_gram_raises_when_fallback_disabled():
    w = np.array([[1.0, 2.0], [1.0, 2.0]])
    x = np.random.default_rng(3).standard_normal((10, 2))
    s = assemble_design(w, x, COMPLEX_EXP)
    with pytest.raises(SingularSystemError):
        solve_regularized(s, np.ones(10), 0.0, allow_singular_fallback=False)


def test_normal_system_path_matches_direct_path():
    rng = np.random.default_rng(11)
    s = assemble_design(rng.standard_normal((4, 2)),
                        rng.standard_normal((30, 2)), COMPLEX_EXP)
    y = rng.standard_normal(30)
    gram, rhs = normal_system(s, y)
    a1 = solve_normal_system(gram, rhs, 0.5, 30)
    a2 = solve_regularized(s, y, 0.5)
    assert np.allclose(a1, a2, rtol=1e-12, atol=1e-14)
    assert residual_metric(s, a1, y) == pytest.approx(
        normal_residual(gram, rhs, a1, 30), rel=1e-12)
