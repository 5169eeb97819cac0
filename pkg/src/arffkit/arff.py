"""Adaptive random Fourier feature training.

The K frequencies of a feature expansion are treated as interacting particles
and evolved so that their empirical distribution tracks the amplitude mass of
the current least-squares fit. One training iteration, given the amplitudes
``a`` from the previous iteration:

1. form the normalized amplitude mass  p_k = |a_k| / sum_j |a_j|,
2. draw a fresh data batch of size M_B,
3. compute the effective sample size  K_ess = 1 / sum_k p_k^2,
4. if K_ess <= R(n) * K: multinomial-resample the frequencies from p
   (and re-solve the amplitudes when the Metropolis rule is active),
5. draw Gaussian increments nu_1..nu_K,
6. Metropolis rule active: propose omega' = omega + delta * nu, solve the
   proposal amplitudes a', and accept node k iff |a'_k|^gamma / |a_k|^gamma
   exceeds an independent uniform draw (strict comparison);
   otherwise: plain random walk  omega <- omega + delta * nu,
7. re-solve the amplitudes on the updated frequencies.

Steps 4 and 6 are governed by two per-iteration rules: the resampling
threshold fraction R(n) in [0, 1], and the boolean Metropolis rule A(n).
The named variants used throughout the experiments are

    am      R = 0,    A = true      (Metropolis only)
    am-r    R = 0.75, A = true      (Metropolis + resampling)
    am-r1   R = 1,    A = true      (resampling in every iteration)
    rw-r    R = 1,    A = false     (random walk + resampling)

Normal-equation solves are the unit of cost: a plain random-walk iteration
solves once, a Metropolis iteration twice, and a Metropolis iteration that
also resampled solves three times. The per-iteration trace records the solve
count together with both fit metrics, so the accounting is testable.

Randomness is split into four named Philox streams (batch, proposal,
acceptance, resampling) derived from the run seed; see :mod:`arffkit.rng`.
Runs are bitwise deterministic for a fixed (config, data, seed).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as rngmod
from .exceptions import ConfigError
from .lsq import (
    COMPLEX_EXP,
    ACTIVATIONS,
    assemble_design,
    data_residual,
    normal_residual,
    normal_system,
    solve_normal_system,
)

__all__ = [
    "ArffConfig",
    "ResampleRule",
    "SweepResult",
    "TrainResult",
    "TrainTrace",
    "VARIANTS",
    "acceptance_ratios",
    "amplitude_norms",
    "effective_sample_size",
    "metropolis_sweep",
    "probability_mass",
    "resample",
    "resample_indices",
    "sample_batch",
    "train",
    "variant_rules",
]


def amplitude_norms(amplitudes):
    """Per-node amplitude magnitude: |a_k| for one channel, row 2-norm for several."""
    a = np.asarray(amplitudes)
    if a.ndim == 1:
        return np.abs(a)
    if a.ndim == 2:
        return np.sqrt(np.sum(np.abs(a) ** 2, axis=1))
    raise ValueError(f"amplitudes must be 1-D or 2-D, got shape {a.shape}")


def probability_mass(norms):
    """Normalize nonnegative norms to a probability vector.

    Returns ``(mass, degenerate)``; an all-zero input yields the uniform
    mass with the degenerate flag set.
    """
    norms = np.asarray(norms, dtype=float)
    if norms.ndim != 1:
        raise ValueError(f"norms must be 1-D, got shape {norms.shape}")
    if (norms < 0).any():
        raise ValueError("amplitude norms must be nonnegative")
    total = norms.sum()
    if total == 0.0:
        return np.full(norms.shape, 1.0 / norms.size), True
    return norms / total, False


def effective_sample_size(mass):
    """K_ess = 1 / sum_k p_k^2, clamped into the algebraic range [1, K].

    The bounds hold exactly in real arithmetic; the clamp only absorbs
    a few ulp of roundoff from the mass normalization.
    """
    mass = np.asarray(mass, dtype=float)
    ess = 1.0 / float(mass @ mass)
    return min(max(ess, 1.0), float(mass.size))


def resample_indices(mass, size, rng):
    """``size`` independent multinomial index draws j ~ mass, with replacement."""
    return rng.choice(mass.size, size=size, replace=True, p=mass)


def resample(freqs, mass, rng):
    """Particle-filter resampling of frequency rows.

    Every output slot independently draws a row index from ``mass``, so the
    output rows form a sub-multiset of the input rows.
    """
    freqs = np.asarray(freqs)
    if freqs.shape[0] != np.asarray(mass).size:
        raise ValueError(
            f"{freqs.shape[0]} frequencies but {np.asarray(mass).size} mass entries"
        )
    idx = resample_indices(np.asarray(mass, dtype=float), freqs.shape[0], rng)
    return freqs[idx], idx


def acceptance_ratios(current_norms, proposed_norms, exponent):
    """Metropolis ratios (|a'_k| / |a_k|)^gamma with zero-amplitude conventions.

    A proposal with zero amplitude is never accepted (ratio 0, covering the
    0/0 case); a zero current amplitude against a positive proposal is always
    accepted (ratio +inf). Overflow saturates to +inf, which accepts.
    """
    cur = np.asarray(current_norms, dtype=float)
    prop = np.asarray(proposed_norms, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        raw = (prop / cur) ** exponent
    return np.where(prop == 0.0, 0.0, np.where(cur == 0.0, np.inf, raw))


def sample_batch(n_total, batch_size, rng):
    """Distinct uniform indices without replacement; the full range when
    batch_size == n_total (no randomness consumed in that case)."""
    if not 1 <= batch_size <= n_total:
        raise ValueError(f"batch_size {batch_size} not in [1, {n_total}]")
    if batch_size == n_total:
        return np.arange(n_total)
    return rng.choice(n_total, size=batch_size, replace=False)


@dataclass(frozen=True)
class ResampleRule:
    """Threshold rule R(n): resample when K_ess <= R(n) * K.

    ``fraction`` is the steady-state threshold; iterations 1..warmup use
    R = 1 regardless, which forces early resampling when wanted.
    """

    fraction: float = 0.0
    warmup: int = 0

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ConfigError(f"resample fraction must be in [0, 1], got {self.fraction}")
        if self.warmup < 0:
            raise ConfigError(f"warmup must be >= 0, got {self.warmup}")

    def value(self, iteration):
        return 1.0 if iteration <= self.warmup else self.fraction


#: (resample_rule, adaptive_metropolis) pairs for the named algorithm variants.
VARIANTS = {
    "am": (ResampleRule(0.0), True),
    "am-r": (ResampleRule(0.75), True),
    "am-r1": (ResampleRule(1.0), True),
    "rw-r": (ResampleRule(1.0), False),
}


def variant_rules(name):
    try:
        return VARIANTS[name]
    except KeyError:
        raise ConfigError(f"unknown variant {name!r}, expected one of {sorted(VARIANTS)}")


@dataclass
class ArffConfig:
    """Training parameters.

    batch_size None means full-batch. ``init_spread`` is the standard
    deviation of the Gaussian initial frequency draw; 0 starts all
    frequencies at the origin. ``adaptive`` is the Metropolis rule A.
    """

    n_features: int
    n_iterations: int
    proposal_step: float
    exponent: float = 10.0
    batch_size: int | None = None
    regularization: float = 0.1
    activation: str = COMPLEX_EXP
    resample_rule: ResampleRule = field(default_factory=ResampleRule)
    adaptive: bool = True
    init_spread: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_features < 1:
            raise ConfigError(f"n_features must be >= 1, got {self.n_features}")
        if self.n_iterations < 0:
            raise ConfigError(f"n_iterations must be >= 0, got {self.n_iterations}")
        if not self.proposal_step > 0:
            raise ConfigError(f"proposal_step must be > 0, got {self.proposal_step}")
        if not self.exponent >= 1:
            raise ConfigError(f"exponent must be >= 1, got {self.exponent}")
        if self.batch_size is not None and self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if self.regularization < 0:
            raise ConfigError(
                f"regularization must be >= 0, got {self.regularization}"
            )
        if self.activation not in ACTIVATIONS:
            raise ConfigError(
                f"unknown activation {self.activation!r}, expected one of {ACTIVATIONS}"
            )
        if self.init_spread < 0:
            raise ConfigError(f"init_spread must be >= 0, got {self.init_spread}")

    def with_variant(self, name):
        rule, adaptive = variant_rules(name)
        return replace(self, resample_rule=rule, adaptive=adaptive)


@dataclass
class SweepResult:
    """One Metropolis sweep: the updated frequencies plus the proposal pieces
    (kept so callers can reuse already-assembled design columns)."""

    frequencies: np.ndarray
    accepted: np.ndarray
    proposed: np.ndarray
    proposed_amplitudes: np.ndarray
    proposed_design: np.ndarray


def metropolis_sweep(
    freqs,
    amplitudes,
    increments,
    points,
    targets,
    *,
    proposal_step,
    exponent,
    regularization,
    activation,
    accept_rng,
):
    """Propose omega + delta * nu, solve the proposal amplitudes on the given
    batch, and accept per node via the strict ratio test.

    ``amplitudes`` are the current amplitudes for ``freqs``; one uniform draw
    is consumed per node, in node order.
    """
    freqs = np.asarray(freqs, dtype=float)
    proposed = freqs + proposal_step * np.asarray(increments, dtype=float)
    design_prop = assemble_design(proposed, points, activation)
    gram_p, rhs_p = normal_system(design_prop, targets)
    a_prop = solve_normal_system(gram_p, rhs_p, regularization, points.shape[0])
    ratios = acceptance_ratios(
        amplitude_norms(amplitudes), amplitude_norms(a_prop), exponent
    )
    accepted = ratios > accept_rng.random(freqs.shape[0])
    updated = freqs.copy()
    updated[accepted] = proposed[accepted]
    return SweepResult(
        frequencies=updated,
        accepted=accepted,
        proposed=proposed,
        proposed_amplitudes=a_prop,
        proposed_design=design_prop,
    )


@dataclass
class TrainTrace:
    """Per-iteration training record; every field has one entry per iteration.

    ``train_err`` / ``test_err`` are mean squared errors in data space,
    ``|S a - y|^2 / rows``.  The ``*_normal`` twins apply the same formula to
    the normal-equation residual ``(S^H S) a - S^H y`` instead.  On the batch
    the solve itself ran on, that residual is identically ``-lam * rows * a``,
    so the normal-gauge column degenerates to ``lam^2 * rows * |a|^2`` there;
    it is kept for diagnostics, while the data-space columns are the ones that
    track fit quality and carry the 1/K convergence behaviour.

    ``wall_time`` holds monotonic seconds since the start of the run. It is
    machine-dependent and never serialized into the deterministic CSVs.
    """

    iteration: np.ndarray
    train_err: np.ndarray
    test_err: np.ndarray
    ess: np.ndarray
    resampled: np.ndarray
    accepts: np.ndarray
    solves: np.ndarray
    train_err_normal: np.ndarray
    test_err_normal: np.ndarray
    wall_time: np.ndarray

    def __len__(self):
        return self.iteration.size

    def summary(self):
        """Minima, their (1-based) iterations, and run totals."""
        out = {
            "iterations": int(len(self)),
            "total_solves": int(self.solves.sum()),
            "total_accepts": int(self.accepts.sum()),
            "total_resamples": int(self.resampled.sum()),
        }
        if len(self):
            i = int(np.argmin(self.train_err))
            out["min_train_err"] = float(self.train_err[i])
            out["argmin_train_err"] = int(self.iteration[i])
            out["final_train_err"] = float(self.train_err[-1])
            out["final_ess"] = float(self.ess[-1])
            if np.isfinite(self.test_err).any():
                j = int(np.nanargmin(self.test_err))
                out["min_test_err"] = float(self.test_err[j])
                out["argmin_test_err"] = int(self.iteration[j])
                out["final_test_err"] = float(self.test_err[-1])
        return out


@dataclass
class TrainResult:
    """Final sampler state plus the per-iteration trace.

    ``snapshots`` maps requested iteration numbers to copies of the
    frequency matrix taken at the end of those iterations.
    """

    config: ArffConfig
    trace: TrainTrace
    frequencies: np.ndarray
    amplitudes: np.ndarray
    snapshots: dict = field(default_factory=dict)


def _initial_frequencies(config, dim, proposal_rng):
    cols = dim + 1 if config.activation != COMPLEX_EXP else dim
    if config.init_spread == 0.0:
        return np.zeros((config.n_features, cols))
    return config.init_spread * proposal_rng.standard_normal((config.n_features, cols))


def train(config, data, initial_freqs=None, test_data=None, snapshot_iterations=()):
    """Run the frequency sampler on a dataset.

    Parameters
    ----------
    config : ArffConfig
    data : targets.Dataset
        Training points; the batch rule draws M_B of them per iteration.
    initial_freqs : ndarray, optional
        Starting frequencies, shape (n_features, dim) for the complex
        exponential activation and (n_features, dim + 1) for the cosine one.
        Defaults to the config's ``init_spread`` initialization.
    test_data : targets.Dataset, optional
        When given, the per-iteration test metrics are evaluated on it;
        otherwise the test columns hold NaN.
    snapshot_iterations : iterable of int, optional
        Iteration numbers whose end-of-iteration frequencies are copied
        into the result's ``snapshots`` dict (0 gives the initial state).

    Returns
    -------
    TrainResult with exactly ``config.n_iterations`` trace records.
    """
    x, y = data.inputs, data.outputs
    n_data = x.shape[0]
    m_batch = config.batch_size if config.batch_size is not None else n_data
    if not config.n_features < m_batch <= n_data:
        raise ConfigError(
            f"need n_features < batch_size <= data size, got "
            f"K={config.n_features}, M_B={m_batch}, M={n_data}"
        )
    streams = rngmod.streams(config.rng_seed)
    k = config.n_features
    lam = config.regularization
    act = config.activation
    rule = config.resample_rule

    cols = x.shape[1] + (0 if act == COMPLEX_EXP else 1)
    if initial_freqs is None:
        freqs = _initial_frequencies(config, x.shape[1], streams["proposal"])
    else:
        freqs = np.array(initial_freqs, dtype=float)
        if freqs.shape != (k, cols):
            raise ConfigError(
                f"initial frequencies must have shape {(k, cols)}, "
                f"got {freqs.shape}"
            )

    def solve_on(f, xb, yb):
        design = assemble_design(f, xb, act)
        gram, rhs = normal_system(design, yb)
        amps = solve_normal_system(gram, rhs, lam, xb.shape[0])
        return design, gram, rhs, amps

    batch = sample_batch(n_data, m_batch, streams["batch"])
    _, _, _, amps = solve_on(freqs, x[batch], y[batch])

    records = {name: [] for name in (
        "train_err", "test_err", "ess", "resampled", "accepts", "solves",
        "train_err_normal", "test_err_normal", "wall_time",
    )}
    wanted = {int(n) for n in snapshot_iterations}
    snapshots = {}
    if 0 in wanted:
        snapshots[0] = freqs.copy()
    t_start = time.monotonic()

    for n in range(1, config.n_iterations + 1):
        mass, _ = probability_mass(amplitude_norms(amps))
        batch = sample_batch(n_data, m_batch, streams["batch"])
        xb, yb = x[batch], y[batch]
        ess = effective_sample_size(mass)
        solves = 0

        resampled = ess <= rule.value(n) * k
        if resampled:
            freqs, _ = resample(freqs, mass, streams["resampling"])
            if config.adaptive:
                _, _, _, amps = solve_on(freqs, xb, yb)
                solves += 1

        increments = streams["proposal"].standard_normal(freqs.shape)
        accepts = 0
        if config.adaptive:
            sweep = metropolis_sweep(
                freqs, amps, increments, xb, yb,
                proposal_step=config.proposal_step,
                exponent=config.exponent,
                regularization=lam,
                activation=act,
                accept_rng=streams["acceptance"],
            )
            freqs = sweep.frequencies
            accepts = int(sweep.accepted.sum())
            solves += 1
            # the end-of-iteration design shares accepted columns with the
            # proposal design; only rejected columns need assembling
            design = sweep.proposed_design
            rejected = ~sweep.accepted
            if rejected.any():
                design = design.copy()
                design[:, rejected] = assemble_design(freqs[rejected], xb, act)
        else:
            freqs = freqs + config.proposal_step * increments
            design = assemble_design(freqs, xb, act)

        gram, rhs = normal_system(design, yb)
        amps = solve_normal_system(gram, rhs, lam, m_batch)
        solves += 1

        records["train_err"].append(data_residual(design, amps, yb))
        records["train_err_normal"].append(normal_residual(gram, rhs, amps, m_batch))
        if test_data is not None:
            design_t = assemble_design(freqs, test_data.inputs, act)
            gram_t, rhs_t = normal_system(design_t, test_data.outputs)
            records["test_err"].append(
                data_residual(design_t, amps, test_data.outputs)
            )
            records["test_err_normal"].append(
                normal_residual(gram_t, rhs_t, amps, test_data.size)
            )
        else:
            records["test_err"].append(np.nan)
            records["test_err_normal"].append(np.nan)
        records["ess"].append(ess)
        records["resampled"].append(resampled)
        records["accepts"].append(accepts)
        records["solves"].append(solves)
        records["wall_time"].append(time.monotonic() - t_start)
        if n in wanted:
            snapshots[n] = freqs.copy()

    trace = TrainTrace(
        iteration=np.arange(1, config.n_iterations + 1),
        train_err=np.array(records["train_err"], dtype=float),
        test_err=np.array(records["test_err"], dtype=float),
        ess=np.array(records["ess"], dtype=float),
        resampled=np.array(records["resampled"], dtype=bool),
        accepts=np.array(records["accepts"], dtype=int),
        solves=np.array(records["solves"], dtype=int),
        train_err_normal=np.array(records["train_err_normal"], dtype=float),
        test_err_normal=np.array(records["test_err_normal"], dtype=float),
        wall_time=np.array(records["wall_time"], dtype=float),
    )
    return TrainResult(
        config=config, trace=trace, frequencies=freqs, amplitudes=amps,
        snapshots=snapshots,
    )
