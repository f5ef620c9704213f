"""Stochastic cross-check of the post-selection closed forms.

The equivalence claim under test: filtering Gaussian heterodyne data
(x, p) with the Poisson-shaped acceptance of
``selection_probability`` leaves an ensemble whose acceptance rate and
covariance matrix match the closed-form k-photon-subtraction results
(``success_probability`` / ``subtracted_covariance``).

Sampling model, per sample:

  1. draw (x, p) i.i.d. normal with per-quadrature variance (V+1)/2;
  2. accept with probability e^-w w^k / k!,  w = (1-t) lambda^2 (x^2+p^2) / 2;
  3. for accepted samples draw the transmitted-mode x quadrature from
     the coherent state left by the measurement:
     A4x ~ Normal(sqrt(2 t) lambda x, 1);
  4. estimate a = 2 E[x^2] - 1,  c = sqrt(2) E[x A4x],  b = E[A4x^2].

The sqrt(2 t) lambda mean coefficient is fixed by requiring the
k = 0, t = 1 run to reproduce the plain TMSV matrix; with it, step 4
reproduces ``subtracted_covariance`` for every (k, t).

Randomness is organised in fixed-size blocks, each seeded from
(seed, block index): results depend only on (config, seed), never on
how blocks are scheduled, and re-runs are bit-identical.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .errors import DomainError, InsufficientAcceptance
from .gaussian import TwoModeCovariance
from .subtraction import SourceParams, subtracted_covariance, success_probability

BLOCK_SIZE = 1 << 17
MIN_SAMPLES = 10_000
MAX_SAMPLES = 1_000_000_000
MIN_ACCEPTED = 100


@dataclass(frozen=True)
class McConfig:
    src: SourceParams
    n_samples: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not MIN_SAMPLES <= self.n_samples <= MAX_SAMPLES:
            raise DomainError(
                f"n_samples must be in [{MIN_SAMPLES}, {MAX_SAMPLES}], got {self.n_samples!r}"
            )
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")


@dataclass(frozen=True)
class EstimateCheck:
    """One empirical estimate against its closed form."""

    empirical: float
    stderr: float
    closed: float
    z: float


@dataclass(frozen=True)
class McReport:
    """Empirical-vs-closed-form comparison for one source configuration.

    ``cov_a``/``cov_c``/``cov_b`` are the three covariance entries
    (retained-mode variance, cross correlation, transmitted-mode
    variance); ``p_success`` the acceptance rate.
    """

    config: McConfig
    p_success: EstimateCheck
    cov_a: EstimateCheck
    cov_c: EstimateCheck
    cov_b: EstimateCheck
    n_accepted: int
    runtime_ms: float

    @property
    def max_abs_z(self) -> float:
        return max(
            abs(self.p_success.z), abs(self.cov_a.z), abs(self.cov_c.z), abs(self.cov_b.z)
        )

    @property
    def closed_cov(self) -> TwoModeCovariance:
        return subtracted_covariance(self.config.src)

    def to_json_dict(self) -> dict:
        src = self.config.src
        return {
            "config": {
                "v": src.v,
                "k": src.k,
                "t_ps": src.t_ps,
                "n_samples": self.config.n_samples,
                "seed": self.config.seed,
            },
            "empirical": {
                "p_success": self.p_success.empirical,
                "p_success_stderr": self.p_success.stderr,
                "cov_a": self.cov_a.empirical,
                "cov_a_stderr": self.cov_a.stderr,
                "cov_c": self.cov_c.empirical,
                "cov_c_stderr": self.cov_c.stderr,
                "cov_b": self.cov_b.empirical,
                "cov_b_stderr": self.cov_b.stderr,
                "n_accepted": self.n_accepted,
            },
            "closed_form": {
                "p_success": self.p_success.closed,
                "cov_a": self.cov_a.closed,
                "cov_c": self.cov_c.closed,
                "cov_b": self.cov_b.closed,
            },
            "z_scores": {
                "p_success": self.p_success.z,
                "cov_a": self.cov_a.z,
                "cov_c": self.cov_c.z,
                "cov_b": self.cov_b.z,
            },
            "runtime_ms": self.runtime_ms,
        }


def _block_rng(seed: int, block: int) -> Generator:
    # Counter-based bit generator keyed on (seed, block): any scheduling of
    # the blocks reproduces the same total stream.
    return Generator(Philox(SeedSequence(entropy=seed, spawn_key=(block,))))


def _z_value(empirical: float, closed: float, stderr: float) -> float:
    if stderr == 0.0:
        return 0.0 if empirical == closed else math.inf
    return (empirical - closed) / stderr


def run_equivalence_check(cfg: McConfig) -> McReport:
    """Sample, filter, and score the four empirical quantities.

    Raises InsufficientAcceptance when fewer than MIN_ACCEPTED samples
    survive the filter.
    """
    start = time.perf_counter()
    src = cfg.src
    sigma = math.sqrt((src.v + 1.0) / 2.0)
    weight_coef = 0.5 * (1.0 - src.t_ps) * src.lambda_sq
    mean_coef = math.sqrt(2.0 * src.t_ps * src.lambda_sq)
    k_factorial = math.factorial(src.k)

    n_accepted = 0
    # Pooled raw moments over accepted samples: for q in (x^2, x*A4x, A4x^2)
    # keep sum(q) and sum(q^2) so stderr of each mean is available.
    moments = np.zeros(6)

    remaining = cfg.n_samples
    block = 0
    while remaining > 0:
        m = min(BLOCK_SIZE, remaining)
        rng = _block_rng(cfg.seed, block)
        x = rng.standard_normal(m) * sigma
        p = rng.standard_normal(m) * sigma
        u = rng.random(m)
        noise = rng.standard_normal(m)
        w = weight_coef * (x * x + p * p)
        accept_prob = np.exp(-w) * w ** src.k / k_factorial
        keep = u < accept_prob
        xk = x[keep]
        yk = mean_coef * xk + noise[keep]
        n_accepted += xk.size
        x2 = xk * xk
        xy = xk * yk
        y2 = yk * yk
        moments += np.array(
            [x2.sum(), (x2 * x2).sum(), xy.sum(), (xy * xy).sum(), y2.sum(), (y2 * y2).sum()]
        )
        remaining -= m
        block += 1

    if n_accepted < MIN_ACCEPTED:
        raise InsufficientAcceptance(
            f"only {n_accepted} of {cfg.n_samples} samples accepted; statistics unusable"
        )

    closed = subtracted_covariance(src)
    p_closed = success_probability(src)

    n = cfg.n_samples
    m = float(n_accepted)
    p_hat = n_accepted / n
    p_se = math.sqrt(max(p_hat * (1.0 - p_hat), 0.0) / n)

    def mean_and_se(total, total_sq):
        mean = total / m
        var = max(total_sq / m - mean * mean, 0.0)
        return mean, math.sqrt(var / m)

    mx2, se_x2 = mean_and_se(moments[0], moments[1])
    mxy, se_xy = mean_and_se(moments[2], moments[3])
    my2, se_y2 = mean_and_se(moments[4], moments[5])

    a_hat, a_se = 2.0 * mx2 - 1.0, 2.0 * se_x2
    c_hat, c_se = math.sqrt(2.0) * mxy, math.sqrt(2.0) * se_xy
    b_hat, b_se = my2, se_y2

    runtime_ms = (time.perf_counter() - start) * 1e3
    return McReport(
        config=cfg,
        p_success=EstimateCheck(p_hat, p_se, p_closed, _z_value(p_hat, p_closed, p_se)),
        cov_a=EstimateCheck(a_hat, a_se, closed.a, _z_value(a_hat, closed.a, a_se)),
        cov_c=EstimateCheck(c_hat, c_se, closed.c, _z_value(c_hat, closed.c, c_se)),
        cov_b=EstimateCheck(b_hat, b_se, closed.b, _z_value(b_hat, closed.b, b_se)),
        n_accepted=n_accepted,
        runtime_ms=runtime_ms,
    )
