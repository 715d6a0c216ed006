"""Interface-radius asymptotics: terminal value, decay rate, regime parity.

A completed run is judged against the closed-form predictions: the terminal
radius follows from mass conservation,

    lam_inf = sqrt(1 + u0_integral / pi),

the approach is exponential in physical time with exponent lam_k / lam_inf^2,
and the melting/freezing direction is fixed by the parity of k together with
the sign of the driving coefficient.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import bessel, svgplot
from .errors import InsufficientDecay, RunNotConverged, ZeroInitialMode
from .solver import TimeSeries
from .weighted import GridFunction

#: leading fraction of usable records excluded from the fit window
FIT_SKIP_FRACTION = 0.3
#: records within this factor of the terminal noise floor are excluded
FIT_FLOOR_FACTOR = 10.0


def u0_disk_integral(v0: GridFunction) -> float:
    """Initial heat content 2 pi int_0^1 v0 y dy (unit initial radius)."""
    grid = v0.grid
    return float(2.0 * np.pi * np.sum(grid.simpson * v0.values * grid.y))


def predicted_terminal_radius(u0_integral: float) -> float:
    return math.sqrt(1.0 + u0_integral / math.pi)


def terminal_radius(ts: TimeSeries, u0_integral: float) -> tuple[float, float]:
    """(measured, predicted) terminal radius of a run that reached the floor."""
    if not ts.reached_floor:
        raise RunNotConverged("run did not reach the decay floor")
    return float(ts.lam[-1]), predicted_terminal_radius(u0_integral)


@dataclass
class FitResult:
    """Log-linear fit of |lam(t) - lam_inf|."""

    lambda_inf: float
    rate_fitted: float
    rate_predicted: float
    amplitude_sign: int
    window: tuple[float, float]
    r_squared: float
    n_points: int

    @property
    def rate_rel_error(self) -> float:
        return abs(self.rate_fitted - self.rate_predicted) / self.rate_predicted


def fit_rate(ts: TimeSeries, lambda_inf: float, k: int) -> FitResult:
    """Fit the decay exponent of |lam(t) - lam_inf| over an auto window.

    The series must span at least three decades.  The window drops the
    first 30% of the usable records (early-time transient bias) and
    everything within a decade of the terminal noise floor.
    """
    d = np.abs(ts.lam - lambda_inf)
    pos = d[d > 0]
    if len(pos) < 10 or pos.max() / pos.min() < 1e3:
        raise InsufficientDecay(
            "need >= 3 decades of |lam - lam_inf|; extend s_max or shrink ds"
        )
    floor = max(float(d[-1]), 1e-300)
    usable = np.nonzero(d > FIT_FLOOR_FACTOR * floor)[0]
    if len(usable) < 10:
        raise InsufficientDecay("decay range above the noise floor is too short")
    start = usable[int(FIT_SKIP_FRACTION * len(usable))]
    window = usable[usable >= start]
    t_win = ts.t[window]
    logd = np.log(d[window])
    slope, intercept = np.polyfit(t_win, logd, 1)
    resid = logd - (slope * t_win + intercept)
    ss_tot = float(np.sum((logd - logd.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 0.0
    lam_k = bessel.j0_zeros(k)[k - 1].lam
    sign = int(np.sign(ts.lam[window[0]] - lambda_inf))
    return FitResult(
        lambda_inf=lambda_inf,
        rate_fitted=float(-slope),
        rate_predicted=lam_k / lambda_inf ** 2,
        amplitude_sign=sign,
        window=(float(t_win[0]), float(t_win[-1])),
        r_squared=r2,
        n_points=len(window),
    )


def classify_regime(k: int, b_k0: float) -> str:
    """Melting iff (k odd, b_k0 > 0) or (k even, b_k0 < 0); else freezing."""
    if b_k0 == 0.0:
        raise ZeroInitialMode("driving coefficient must be nonzero")
    melting = (k % 2 == 1) == (b_k0 > 0.0)
    return "melting" if melting else "freezing"


def time_reconstruction_check(ts: TimeSeries) -> float:
    """Max defect between recorded t and the trapezoid of lam^2 over s."""
    lam2 = ts.lam ** 2
    t_rec = np.concatenate([
        [0.0],
        np.cumsum(0.5 * (lam2[1:] + lam2[:-1]) * np.diff(ts.s)),
    ])
    t_rec += ts.t[0]
    return float(np.max(np.abs(ts.t - t_rec)))


def verdict(ts: TimeSeries, k: int, b_k0: float, u0_integral: float,
            rate_tol: float = 0.02, radius_tol: float = 1e-4) -> dict:
    """Scenario verdict: terminal radius, fitted rate, regime coherence."""
    measured, predicted = terminal_radius(ts, u0_integral)
    fit = fit_rate(ts, predicted, k)
    regime = classify_regime(k, b_k0)
    direction_ok = ((regime == "melting") == (predicted > 1.0)
                    and (regime == "melting") == (measured > 1.0))
    out = {
        "k": k,
        "b_k0": b_k0,
        "regime": regime,
        "lambda_inf_measured": measured,
        "lambda_inf_predicted": predicted,
        "radius_defect": abs(measured - predicted),
        "radius_tol": radius_tol,
        "rate_fitted": fit.rate_fitted,
        "rate_predicted": fit.rate_predicted,
        "rate_rel_error": fit.rate_rel_error,
        "rate_tol": rate_tol,
        "r_squared": fit.r_squared,
        "fit_window": list(fit.window),
        "fit_points": fit.n_points,
        "direction_consistent": bool(direction_ok),
        "time_reconstruction_defect": time_reconstruction_check(ts),
        "passed": bool(
            abs(measured - predicted) <= radius_tol
            and fit.rate_rel_error <= rate_tol
            and fit.r_squared >= 0.999
            and direction_ok
        ),
    }
    return out


def write_verdict_json(path, verdict_dict: dict):
    with open(path, "w") as fh:
        fh.write(json.dumps(verdict_dict, sort_keys=True, indent=2) + "\n")


def decay_plot(path, ts: TimeSeries, fit: FitResult):
    """Log-linear plot of |lam(t) - lam_inf| with the fitted line."""
    d = np.abs(ts.lam - fit.lambda_inf)
    mask = d > 0
    t = ts.t[mask]
    logd = np.log10(d[mask])
    t0, t1 = fit.window
    in_win = (t >= t0) & (t <= t1)
    fit_line = np.where(
        in_win,
        (np.log10(math.e) * (-fit.rate_fitted) * (t - t0)) + logd[in_win][0]
        if np.any(in_win) else np.nan,
        np.nan,
    )
    svgplot.line_plot(
        path, t,
        [("measured", logd, "#1f77b4"), ("fitted", fit_line, "#d62728")],
        xlabel="t", ylabel="log10 |lambda - lambda_inf|",
        title=f"rate fit: {fit.rate_fitted:.4f} vs {fit.rate_predicted:.4f}",
    )
