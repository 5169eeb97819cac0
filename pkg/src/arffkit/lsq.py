"""Regularized least squares for random Fourier feature expansions.

A feature expansion x -> sum_k a_k phi(omega_k, x) is fit to data
{(x_j, y_j)}_{j=1..M_B} through the normal equations

    (S^H S + lambda * M_B * I) a = S^H y,

where S is the M_B-by-K design matrix S[j, k] = phi(omega_k, x_j). Two feature
maps are supported:

    complex_exp   phi(omega, x) = exp(i omega . x),           omega in R^d
    cosine_bias   phi(omegab, x) = cos(omega . x + b),        omegab = (omega, b)

The Gram matrix is Hermitian (symmetric in the cosine case) positive
semi-definite, so the solve goes through a Cholesky factorization; one
factorization is shared across right-hand-side columns when y has several
channels. Fit quality is measured on the normal-equation residual

    r = (S^H S) a - S^H y,      metric = ||r||^2 / M_B,

with the plain data-space mean squared error available as a companion
diagnostic.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.linalg import get_lapack_funcs

from .exceptions import SingularGramWarning, SingularSystemError

COMPLEX_EXP = "complex_exp"
COSINE_BIAS = "cosine_bias"
ACTIVATIONS = (COMPLEX_EXP, COSINE_BIAS)


def assemble_design(freqs, points, activation):
    """Evaluate the design matrix S[j, k] = phi(omega_k, x_j).

    Parameters
    ----------
    freqs : (K, d) or (K, d+1) ndarray
        Frequency vectors, one per row. For ``cosine_bias`` the last column
        is the phase offset b.
    points : (M, d) ndarray
        Input points, one per row.
    activation : str
        ``"complex_exp"`` or ``"cosine_bias"``.

    Returns
    -------
    (M, K) ndarray, complex128 for ``complex_exp`` and float64 otherwise.
    """
    freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
    points = np.atleast_2d(np.asarray(points, dtype=float))
    if not np.isfinite(freqs).all():
        raise ValueError("non-finite frequency vector")
    if not np.isfinite(points).all():
        raise ValueError("non-finite input point")
    if activation == COMPLEX_EXP:
        if freqs.shape[1] != points.shape[1]:
            raise ValueError(
                f"frequency dimension {freqs.shape[1]} does not match "
                f"input dimension {points.shape[1]}"
            )
        return np.exp(1j * (points @ freqs.T))
    if activation == COSINE_BIAS:
        if freqs.shape[1] != points.shape[1] + 1:
            raise ValueError(
                f"cosine_bias frequencies need {points.shape[1] + 1} columns "
                f"(last one is the bias), got {freqs.shape[1]}"
            )
        return np.cos(points @ freqs[:, :-1].T + freqs[:, -1])
    raise ValueError(f"unknown activation {activation!r}, expected one of {ACTIVATIONS}")


def normal_system(design, targets):
    """Gram matrix S^H S and right-hand side S^H y for a design and targets."""
    design = np.asarray(design)
    targets = np.asarray(targets)
    if targets.shape[0] != design.shape[0]:
        raise ValueError(
            f"targets have {targets.shape[0]} rows, design has {design.shape[0]}"
        )
    sh = design.conj().T
    return sh @ design, sh @ targets


def solve_normal_system(gram, rhs, lam, n_rows, allow_singular_fallback=True):
    """Solve (gram + lam * n_rows * I) a = rhs via Cholesky.

    All right-hand-side columns share one factorization. When lam == 0 and the
    Gram matrix is numerically singular, falls back to a pivoted least-squares
    solve and emits a :class:`SingularGramWarning`, unless the fallback is
    disabled, in which case :class:`SingularSystemError` carries the 1-based
    index of the first failing pivot.
    """
    gram = np.asarray(gram)
    rhs = np.asarray(rhs)
    k = gram.shape[0]
    if gram.shape != (k, k):
        raise ValueError(f"gram must be square, got {gram.shape}")
    if lam < 0:
        raise ValueError(f"regularization parameter must be >= 0, got {lam}")
    reg = gram.copy()
    if lam > 0:
        reg.flat[:: k + 1] += lam * n_rows

    potrf, potrs = get_lapack_funcs(("potrf", "potrs"), (reg, rhs))
    chol, info = potrf(reg, lower=0, clean=0, overwrite_a=1)
    if info == 0:
        rhs_2d = rhs if rhs.ndim == 2 else rhs[:, None]
        sol, solve_info = potrs(chol, rhs_2d.astype(chol.dtype), lower=0)
        if solve_info != 0:
            raise SingularSystemError(f"triangular solve failed (info={solve_info})")
        return sol if rhs.ndim == 2 else sol[:, 0]
    if info < 0:
        raise SingularSystemError(f"illegal factorization argument (info={info})")
    if lam > 0 or not allow_singular_fallback:
        raise SingularSystemError(
            f"Gram factorization failed at leading minor {info}", pivot=int(info)
        )
    warnings.warn(
        f"singular Gram matrix with lam=0 (pivot {info}), using least-squares fallback",
        SingularGramWarning,
        stacklevel=2,
    )
    sol, _, _, _ = np.linalg.lstsq(gram, rhs, rcond=None)
    return sol


def solve_regularized(design, targets, lam, allow_singular_fallback=True):
    """Amplitudes minimizing ||S a - y||^2 + lam * M_B * ||a||^2.

    Parameters
    ----------
    design : (M_B, K) ndarray
        Design matrix from :func:`assemble_design`.
    targets : (M_B,) or (M_B, C) ndarray
        Target values; several channels solve against one factorization.
    lam : float
        Tikhonov parameter; the diagonal shift is lam * M_B.

    Returns
    -------
    (K,) or (K, C) ndarray of amplitudes, complex when the design is complex.
    """
    gram, rhs = normal_system(design, targets)
    return solve_normal_system(
        gram, rhs, lam, design.shape[0], allow_singular_fallback=allow_singular_fallback
    )


def normal_residual(gram, rhs, amplitudes, n_rows):
    """||gram @ a - rhs||^2 / n_rows on a precomputed normal system."""
    r = gram @ amplitudes - rhs
    return float(np.vdot(r, r).real) / n_rows


def residual_metric(design, amplitudes, targets):
    """Normal-equation residual metric ||(S^H S) a - S^H y||^2 / M_B.

    This is the fit metric used throughout training traces. Note it is not
    the data-space mean squared error; see :func:`data_residual` for that.
    """
    design = np.asarray(design)
    gram, rhs = normal_system(design, targets)
    return normal_residual(gram, rhs, amplitudes, design.shape[0])


def data_residual(design, amplitudes, targets):
    """Data-space mean squared error ||S a - y||^2 / size(y).

    For single-channel targets the divisor is the number of rows M_B; for
    multi-channel targets (RGB amplitudes) the mean runs over samples and
    channels jointly.
    """
    design = np.asarray(design)
    r = design @ amplitudes - targets
    return float(np.vdot(r, r).real) / r.size
