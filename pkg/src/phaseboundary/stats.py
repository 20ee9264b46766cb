"""Estimators on simulation output and the comparison with closed-form theory."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic import Regime, boundary_velocity
from .errors import InsufficientData
from .faces import collision_rates
from .params import SystemParams
from .sim import SimOutput

DEFAULT_BURN_IN = 0.1
DEFAULT_BATCHES = 20
MIN_SAMPLES = 10
MIN_BATCHES = 10


def boundary_through(out: SimOutput, t: float | np.ndarray) -> np.ndarray:
    """Boundary value including any collision at exactly ``t``."""
    idx = np.searchsorted(out.event_times, t, side="right")
    pos = np.concatenate([[0.0], out.event_positions])
    return pos[idx]


def estimate_boundary_speed(
    out: SimOutput, burn_in: float = DEFAULT_BURN_IN, batches: int = DEFAULT_BATCHES
) -> tuple[float, float]:
    """Slope of the boundary after the burn-in, with a batch-means standard error.

    The window [T0, T] is cut into ``batches`` equal pieces; the estimate is
    the overall slope (which is also the mean of the batch slopes) and the
    error is the standard deviation of the batch slopes over sqrt(batches).
    """
    if not 0 <= burn_in < 1:
        raise ValueError("burn_in must lie in [0, 1)")
    if batches < MIN_BATCHES:
        raise ValueError(f"need at least {MIN_BATCHES} batches, got {batches}")
    T = out.end_time
    T0 = burn_in * T
    n_after = int(np.count_nonzero(out.event_times > T0))
    if T <= 0 or n_after < MIN_SAMPLES:
        raise InsufficientData(f"{n_after} collisions after burn-in; need {MIN_SAMPLES}")
    edges = np.linspace(T0, T, batches + 1)
    beta = boundary_through(out, edges)
    slopes = np.diff(beta) / np.diff(edges)
    W_hat = float((beta[-1] - beta[0]) / (T - T0))
    stderr = float(np.std(slopes, ddof=1) / math.sqrt(batches))
    return W_hat, stderr


@dataclass(frozen=True)
class RateTable:
    """Empirical collision rates nu/T per pair and per type."""

    T: float
    pair: np.ndarray  # (L, K)
    minus: np.ndarray  # (L,)
    plus: np.ndarray  # (K,)

    def to_dict(self) -> dict:
        return {"T": self.T, "pair": self.pair.tolist(), "minus": self.minus.tolist(), "plus": self.plus.tolist()}


def estimate_collision_rates(out: SimOutput) -> RateTable:
    if out.total_collisions < 1 or out.end_time <= 0:
        raise InsufficientData("no collisions recorded")
    T = out.end_time
    pair = out.counts / T
    return RateTable(T, pair, pair.sum(axis=1), pair.sum(axis=0))


@dataclass(frozen=True)
class Tolerances:
    W_abs: float = 0.02
    rate_rel: float = 0.02
    lag_fraction: float = 0.01
    burn_in: float = DEFAULT_BURN_IN
    batches: int = DEFAULT_BATCHES


@dataclass
class ComparisonReport:
    W_theory: float
    W_hat: float
    W_stderr: float
    regime: Regime
    predicted_lagging: dict
    observed_lagging: dict
    rate_checks: list[dict] = field(default_factory=list)
    W_pass: bool = False

    @property
    def passed(self) -> bool:
        return self.W_pass and all(c["pass"] for c in self.rate_checks)

    def to_dict(self) -> dict:
        return {
            "W_theory": self.W_theory,
            "W_hat": self.W_hat,
            "W_stderr": self.W_stderr,
            "regime": self.regime.value,
            "predicted_lagging": self.predicted_lagging,
            "observed_lagging": self.observed_lagging,
            "rate_checks": self.rate_checks,
            "pass": self.passed,
        }


def _lagging(minus_rates: np.ndarray, plus_rates: np.ndarray, threshold: float) -> dict:
    return {
        "minus": [i + 1 for i, r in enumerate(minus_rates) if r < threshold],
        "plus": [k + 1 for k, r in enumerate(plus_rates) if r < threshold],
    }


def compare_to_theory(
    p: SystemParams,
    out: SimOutput,
    tolerances: Tolerances = Tolerances(),
    W_theory: float | None = None,
) -> ComparisonReport:
    """Check the simulated boundary speed and collision rates against theory.

    ``W_theory`` overrides the closed-form value (useful as a negative control).
    """
    rep = boundary_velocity(p)
    W = rep.W if W_theory is None else float(W_theory)
    W_hat, stderr = estimate_boundary_speed(out, tolerances.burn_in, tolerances.batches)
    rates = estimate_collision_rates(out)
    threshold = tolerances.lag_fraction * float(rates.pair.max())
    checks: list[dict] = []

    if rep.regime is Regime.ERGODIC:
        sol = collision_rates(p)
        for side, means, observed, expected in (
            ("minus", p.minus_means, rates.minus, sol.r_minus),
            ("plus", p.plus_means, rates.plus, sol.r_plus),
        ):
            for j, (mu, obs, exp) in enumerate(zip(means, observed, expected)):
                value = mu * obs
                dev = abs(value - exp) / abs(exp)
                checks.append({
                    "kind": "rate_identity", "side": side, "type": j + 1,
                    "observed": float(value), "expected": float(exp),
                    "deviation": float(dev), "tolerance": tolerances.rate_rel,
                    "pass": bool(dev <= tolerances.rate_rel),
                })
        predicted = {"minus": [], "plus": []}
    elif rep.regime is Regime.TRANSIENT_PLUS_LAG:
        predicted = {"minus": [], "plus": list(range(rep.K1 + 1, p.K + 1))}
        for k in range(rep.K1, p.K):
            checks.append({
                "kind": "lag", "side": "plus", "type": k + 1,
                "observed": float(rates.plus[k]), "expected": 0.0,
                "deviation": float(rates.plus[k]), "tolerance": threshold,
                "pass": bool(rates.plus[k] < threshold),
            })
    else:
        predicted = {"minus": list(range(rep.L1 + 1, p.L + 1)), "plus": []}
        for i in range(rep.L1, p.L):
            checks.append({
                "kind": "lag", "side": "minus", "type": i + 1,
                "observed": float(rates.minus[i]), "expected": 0.0,
                "deviation": float(rates.minus[i]), "tolerance": threshold,
                "pass": bool(rates.minus[i] < threshold),
            })

    return ComparisonReport(
        W_theory=W,
        W_hat=W_hat,
        W_stderr=stderr,
        regime=rep.regime,
        predicted_lagging=predicted,
        observed_lagging=_lagging(rates.minus, rates.plus, threshold),
        rate_checks=checks,
        W_pass=bool(abs(W_hat - W) <= tolerances.W_abs),
    )
