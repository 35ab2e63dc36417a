"""Parameter estimation: column-density fit, photon budget, SNR, and the
trap-loss and time-of-flight fits.

The rotation-angle scan is fit by weighted linear least squares for the one
free parameter (the column density); the trap decay is fit by Gauss-Newton
with backtracking on the closed-form two-body solution; time-of-flight
temperatures come from an ordinary linear fit of sigma^2 against t^2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import constants as csts

from .atomic_data import AtomSpec
from .detector import DetectorSpec
from .errors import FitError, ValidationError
from .experiment import ScanDataset
from .spin_optics import DEFAULT_GUARD_LINEWIDTHS, rotation_cross_section

# Gauss-Newton controls: deterministic, testable stopping
GN_MAX_ITERATIONS = 200
GN_RELATIVE_TOLERANCE = 1.0e-10
GN_COST_TOLERANCE = 1.0e-12
GN_JACOBIAN_STEP = 1.0e-6
# proposed steps below this sit inside the finite-difference noise of the
# Jacobian; a failed line search there is stationarity, not a stall
GN_STALL_TOLERANCE = 1.0e-6
GN_MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class FitResult:
    """Named parameter estimates with 1-sigma uncertainties.

    chi2 is the weighted sum of squared residuals (the plain residual sum of
    squares for unweighted fits), dof = n_points - n_params, and converged
    reports whether the optimizer met its tolerance (always True for the
    closed-form linear fits).
    """

    params: Mapping[str, float]
    sigmas: Mapping[str, float]
    chi2: float
    dof: int
    converged: bool

    def __post_init__(self):
        object.__setattr__(self, "params", dict(self.params))
        object.__setattr__(self, "sigmas", dict(self.sigmas))
        if set(self.params) != set(self.sigmas):
            raise ValidationError("params and sigmas must have identical keys")
        if any(v < 0 for v in self.sigmas.values()):
            raise ValidationError("sigmas must be >= 0")
        if self.dof < 1:
            raise ValidationError(f"dof must be >= 1, got {self.dof!r}")

    def to_json_dict(self) -> dict:
        return {
            "params": {k: float(v) for k, v in sorted(self.params.items())},
            "sigmas": {k: float(v) for k, v in sorted(self.sigmas.items())},
            "chi2": float(self.chi2),
            "dof": int(self.dof),
            "converged": bool(self.converged),
        }


def fit_result_from_json_dict(document: Mapping) -> FitResult:
    try:
        return FitResult(
            params=dict(document["params"]),
            sigmas=dict(document["sigmas"]),
            chi2=float(document["chi2"]),
            dof=int(document["dof"]),
            converged=bool(document["converged"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"not a fit-result document: {exc}") from exc


def write_fit_json(fit: FitResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as handle:
        json.dump(fit.to_json_dict(), handle, indent=2, sort_keys=True)
        handle.write("\n")


def fit_column_density(
    data: ScanDataset,
    spec: AtomSpec,
    *,
    weighted: bool = True,
    sigma_source: str = "stddev",
    convention: str = "physical",
    guard_linewidths: float = DEFAULT_GUARD_LINEWIDTHS,
) -> FitResult:
    """Weighted linear least squares for the column density n_c.

    The model is theta(Delta) = n_c * g_tilde(Delta)/2 with n_c the only
    free parameter, so the estimate is closed form:
    n_c = sum(w theta g) / sum(w g^2) with g = g_tilde/2 and w = 1/sigma^2,
    and its uncertainty is (sum w g^2)^(-1/2).

    sigma_source selects which reported spread weights the points: "stddev"
    (default) uses the per-point sample standard deviation, i.e. the
    one-standard-deviation bars such scans are plotted with, and makes the
    reported fit uncertainty reflect single-realization scatter; "stderr"
    uses the standard error of the per-point mean.  Points reporting zero
    spread are rejected rather than given infinite weight.  weighted=False
    ignores the spreads entirely and estimates the uncertainty from the
    residuals.
    """
    if sigma_source not in ("stddev", "stderr"):
        raise ValidationError(
            f"sigma_source must be 'stddev' or 'stderr', got {sigma_source!r}"
        )
    rows = []
    for point in data.points:
        sigma = (
            point.theta_stddev_rad
            if sigma_source == "stddev"
            else point.theta_stderr_rad
        )
        if weighted and sigma == 0.0:
            continue  # zero reported error: reject, do not weight infinitely
        g = 0.5 * rotation_cross_section(
            point.detuning_hz,
            spec,
            convention=convention,
            guard_linewidths=guard_linewidths,
        )
        rows.append((point.theta_mean_rad, g, sigma))
    if len(rows) < 2:
        raise FitError(
            f"column-density fit needs >= 2 usable points (dof >= 1), got {len(rows)}"
        )
    theta = np.array([r[0] for r in rows])
    g = np.array([r[1] for r in rows])
    if weighted:
        w = 1.0 / np.array([r[2] for r in rows]) ** 2
        if not np.all(np.isfinite(w)):
            raise FitError("column-density fit weights are not finite")
    else:
        w = np.ones_like(theta)
    denominator = float(np.sum(w * g * g))
    if denominator == 0.0:
        raise FitError("degenerate design: g_tilde vanishes at every point")
    n_c = float(np.sum(w * theta * g)) / denominator
    residuals = theta - n_c * g
    chi2 = float(np.sum(w * residuals**2))
    dof = len(rows) - 1
    if weighted:
        sigma_nc = denominator**-0.5
    else:
        sigma_nc = math.sqrt(chi2 / dof / denominator)
    return FitResult(
        params={"column_density_m2": n_c},
        sigmas={"column_density_m2": float(sigma_nc)},
        chi2=chi2,
        dof=dof,
        converged=True,
    )


def compute_od(fit: FitResult, spec: AtomSpec) -> tuple[float, float]:
    """Resonant optical depth from a column-density fit:
    OD = sigma_0 n_c, with sigma_OD = sigma_0 sigma_nc."""
    if "column_density_m2" not in fit.params:
        raise ValidationError(
            "fit result carries no column_density_m2 parameter"
        )
    sigma0 = spec.cross_section_m2
    return (
        sigma0 * fit.params["column_density_m2"],
        sigma0 * fit.sigmas["column_density_m2"],
    )


def photon_budget(a: float, n_atoms: float, theta_rad: float) -> float:
    """Total probe photons for an atomic-to-shot variance ratio of a:
    N_L = a N_a / theta^2."""
    if theta_rad == 0.0:
        raise ValidationError("theta_rad must be nonzero")
    if a < 0 or n_atoms < 0:
        raise ValidationError("a and n_atoms must be >= 0")
    return a * n_atoms / theta_rad**2


def snr_report(
    theta_rad: float, n_photons: float, det: DetectorSpec, n_avg: int = 1
) -> float:
    """Signal-to-noise of the mean rotation after n_avg averaged pulses:
    theta N_L sqrt(n_avg) / sqrt(N_L + electronic_noise_var)."""
    if not n_photons > 0:
        raise ValidationError(f"n_photons must be positive, got {n_photons!r}")
    if not n_avg >= 1:
        raise ValidationError(f"n_avg must be >= 1, got {n_avg!r}")
    return (
        theta_rad
        * n_photons
        * math.sqrt(n_avg)
        / math.sqrt(n_photons + det.electronic_noise_var)
    )


def _decay_model(t: np.ndarray, n0: float, tau: float, beta: float, v_eff: float) -> np.ndarray:
    """Closed-form two-body decay, vectorized over t; invalid parameter
    regions (collapsing denominator) evaluate to +inf so line searches back
    away from them."""
    with np.errstate(over="ignore", invalid="ignore"):
        decay = np.exp(-t / tau)
        denominator = 1.0 + n0 * (beta * tau / v_eff) * (1.0 - decay)
        out = np.where(denominator > 0.0, n0 * decay / denominator, np.inf)
    return out


def _decay_start(t: np.ndarray, n: np.ndarray, v_eff: float) -> np.ndarray:
    """Starting point for the decay fit from a linearization: the per-atom
    loss rate -dN/dt / N equals 1/tau + (beta/V_eff) N, so regressing the
    finite-difference rate against N splits the two channels before any
    nonlinear iteration.  Clamped to the physical region; accuracy only
    matters for basin selection."""
    rates = []
    densities = []
    for i in range(1, len(t) - 1):
        dt = t[i + 1] - t[i - 1]
        if dt <= 0 or n[i] <= 0:
            continue
        rates.append(-(n[i + 1] - n[i - 1]) / dt / n[i])
        densities.append(n[i])
    n0 = float(n[0])
    span = float(t[-1] - t[0])
    fallback_rate = math.log(max(n0 / float(n[-1]), 1.0 + 1e-9)) / span
    if len(rates) >= 2 and float(np.ptp(densities)) > 0:
        x = np.asarray(densities)
        y = np.asarray(rates)
        slope = float(np.sum((x - x.mean()) * (y - y.mean()))) / float(
            np.sum((x - x.mean()) ** 2)
        )
        intercept = float(y.mean() - slope * x.mean())
        floor = max(fallback_rate, 1e-12)
        one_over_tau = min(max(intercept, 1e-3 * floor), 1e6 / span)
        beta = max(slope, 1e-3 * floor / n0) * v_eff
        return np.array([n0, 1.0 / one_over_tau, beta])
    overall = max(fallback_rate, 1e-12)
    return np.array([n0, 2.0 / overall, overall * v_eff / (2.0 * n0)])


def fit_two_body_decay(
    samples: Sequence[tuple[float, float, float]], v_eff: float
) -> FitResult:
    """Gauss-Newton fit of (N0, tau, beta) to trap-population decay data.

    samples are (time s, atom count, count uncertainty); v_eff is the
    effective two-body volume the rate constant is referred to.  Residuals
    are sigma-weighted; the Jacobian is central-difference with a 1e-6
    relative step; step halving backtracks any trial that does not reduce
    the cost.  Convergence means a relative parameter change below 1e-10
    within 200 iterations; the converged flag reports this honestly and the
    best point is returned either way.
    """
    if not v_eff > 0:
        raise ValidationError(f"v_eff must be positive, got {v_eff!r}")
    pts = [(float(t), float(n), float(s)) for t, n, s in samples]
    if len(pts) < 4:
        raise FitError(f"two-body decay fit needs >= 4 points, got {len(pts)}")
    pts.sort(key=lambda p: p[0])
    t = np.array([p[0] for p in pts])
    n = np.array([p[1] for p in pts])
    sigma = np.array([p[2] for p in pts])
    if np.any(t < 0):
        raise ValidationError("sample times must be >= 0")
    if np.any(sigma <= 0):
        raise FitError("count uncertainties must be positive")
    if np.any(n <= 0):
        raise FitError("atom counts must be positive")

    def residuals(p: np.ndarray) -> np.ndarray:
        model = _decay_model(t, p[0], p[1], p[2], v_eff)
        return (n - model) / sigma

    def cost(p: np.ndarray) -> float:
        r = residuals(p)
        if not np.all(np.isfinite(r)):
            return np.inf
        return float(r @ r)

    span = float(t[-1] - t[0])
    if span <= 0:
        raise FitError("sample times must span a nonzero interval")
    p = _decay_start(t, n, v_eff)

    converged = False
    current = cost(p)
    for _ in range(GN_MAX_ITERATIONS):
        # central-difference Jacobian
        jac = np.empty((len(t), 3))
        for k in range(3):
            step = GN_JACOBIAN_STEP * max(abs(p[k]), 1e-300)
            forward = p.copy()
            backward = p.copy()
            forward[k] += step
            backward[k] -= step
            jac[:, k] = (residuals(forward) - residuals(backward)) / (2.0 * step)
        if not np.all(np.isfinite(jac)):
            break
        # column-scale before solving: raw columns differ by the parameter
        # magnitudes (counts vs m^3/s), which would starve the SVD cutoff
        norms = np.linalg.norm(jac, axis=0)
        norms = np.where(norms > 0.0, norms, 1.0)
        scaled, *_ = np.linalg.lstsq(jac / norms, -residuals(p), rcond=None)
        delta = scaled / norms
        # stationarity is judged on the full proposed step only; a
        # backtracked step can be arbitrarily small far from the minimum
        proposed = float(np.max(np.abs(delta) / np.maximum(np.abs(p), 1e-300)))
        if proposed < GN_RELATIVE_TOLERANCE:
            converged = True
            break
        # backtracking line search
        scale = 1.0
        improved = False
        for _ in range(GN_MAX_BACKTRACKS):
            trial = p + scale * delta
            if trial[0] > 0 and trial[1] > 0:
                trial_cost = cost(trial)
                if trial_cost < current:
                    improved = True
                    break
            scale *= 0.5
        if not improved:
            # no descent available: a minimum if the step was already down
            # at the Jacobian noise floor, a genuine stall otherwise
            converged = proposed < GN_STALL_TOLERANCE
            break
        accepted = float(
            np.max(np.abs(scale * delta) / np.maximum(np.abs(trial), 1e-300))
        )
        gain = (current - trial_cost) / max(current, 1e-300)
        p = trial
        current = trial_cost
        # parameter-stationary or cost-stationary, either ends the descent;
        # the cost test is safe because the step direction is solved in
        # scaled form, so a vanishing reduction along it means a minimum
        if accepted < GN_RELATIVE_TOLERANCE or gain < GN_COST_TOLERANCE:
            converged = True
            break

    # covariance from the Jacobian at the solution (sigma-weighted
    # residuals), inverted in column-scaled form for the same reason
    jac = np.empty((len(t), 3))
    for k in range(3):
        step = GN_JACOBIAN_STEP * max(abs(p[k]), 1e-300)
        forward = p.copy()
        backward = p.copy()
        forward[k] += step
        backward[k] -= step
        jac[:, k] = (residuals(forward) - residuals(backward)) / (2.0 * step)
    try:
        norms = np.linalg.norm(jac, axis=0)
        norms = np.where(norms > 0.0, norms, 1.0)
        scaled_cov = np.linalg.inv((jac / norms).T @ (jac / norms))
        covariance = scaled_cov / np.outer(norms, norms)
        uncertainties = np.sqrt(np.maximum(np.diag(covariance), 0.0))
    except np.linalg.LinAlgError:
        uncertainties = np.full(3, math.inf)

    return FitResult(
        params={
            "n0": float(p[0]),
            "tau_s": float(p[1]),
            "beta_m3_per_s": float(p[2]),
        },
        sigmas={
            "n0": float(uncertainties[0]),
            "tau_s": float(uncertainties[1]),
            "beta_m3_per_s": float(uncertainties[2]),
        },
        chi2=current,
        dof=len(pts) - 3,
        converged=converged,
    )


def fit_tof_temperature(
    samples: Sequence[tuple[float, float]], mass_kg: float
) -> FitResult:
    """Temperature from ballistic expansion: straight-line fit of sigma^2
    against t^2, slope k_B T / m.

    Returns the temperature and the initial cloud size sigma0; the slope
    uncertainty comes from the ordinary least-squares residual variance.  A
    negative fitted slope is unphysical and raises.
    """
    if not mass_kg > 0:
        raise ValidationError(f"mass_kg must be positive, got {mass_kg!r}")
    pts = [(float(t), float(s)) for t, s in samples]
    if len(pts) < 3:
        raise FitError(f"time-of-flight fit needs >= 3 points, got {len(pts)}")
    x = np.array([p[0] ** 2 for p in pts])
    y = np.array([p[1] ** 2 for p in pts])
    if np.ptp(x) == 0.0:
        raise FitError("expansion times must not all coincide")
    x_mean = float(x.mean())
    y_mean = float(y.mean())
    s_xx = float(np.sum((x - x_mean) ** 2))
    slope = float(np.sum((x - x_mean) * (y - y_mean))) / s_xx
    intercept = y_mean - slope * x_mean
    residuals = y - slope * x - intercept
    chi2 = float(residuals @ residuals)
    dof = len(pts) - 2
    residual_var = chi2 / dof
    slope_sigma = math.sqrt(residual_var / s_xx)
    intercept_sigma = math.sqrt(residual_var * (1.0 / len(pts) + x_mean**2 / s_xx))
    if slope < 0.0:
        raise FitError(
            f"fitted expansion slope is negative ({slope:.3e} m^2/s^2): "
            "the cloud cannot shrink with time of flight"
        )
    kb_over_m = csts.k / mass_kg
    temperature = slope / kb_over_m
    temperature_sigma = slope_sigma / kb_over_m
    sigma0 = math.sqrt(max(intercept, 0.0))
    # d(sigma0)/d(intercept) = 1/(2 sigma0); undefined at sigma0 = 0
    sigma0_sigma = intercept_sigma / (2.0 * sigma0) if sigma0 > 0 else math.inf
    return FitResult(
        params={"temperature_k": temperature, "sigma0_m": sigma0},
        sigmas={"temperature_k": temperature_sigma, "sigma0_m": sigma0_sigma},
        chi2=chi2,
        dof=dof,
        converged=True,
    )
