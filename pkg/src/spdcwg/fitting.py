"""Poisson-weighted least-squares fits of Gaussian peaks, dips and fringes.

The objective is chi^2 = sum (y - model)^2 / max(y, 1).  Minimization is
Levenberg-Marquardt with a multiplicative damping schedule (start 1e-3,
x10 after a rejected step, /10 after an accepted one).  Uncertainties come
from the inverse curvature matrix J^T W J at the optimum, without rescaling
by the reduced chi^2: the weights are absolute Poisson variances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FitError

__all__ = ["FitResult", "levenberg_marquardt", "fit_gaussian", "fit_dip", "fit_sinusoid"]

MAX_ITER = 200
REL_TOL = 1e-8


@dataclass
class FitResult:
    parameters: dict            # name -> (value, one-sigma uncertainty)
    reduced_chi_square: float
    converged: bool
    n_iterations: int
    derived: dict = field(default_factory=dict)   # name -> (value, uncertainty)
    model: str = ""

    def __getitem__(self, name):
        if name in self.parameters:
            return self.parameters[name][0]
        return self.derived[name][0]

    def error(self, name) -> float:
        if name in self.parameters:
            return self.parameters[name][1]
        return self.derived[name][1]

    def to_text(self) -> str:
        """Flat ``key = value`` block."""
        lines = [f"model = {self.model}"] if self.model else []
        for name, (val, err) in list(self.parameters.items()) + list(self.derived.items()):
            lines.append(f"{name} = {val:.10g}")
            lines.append(f"{name}_err = {err:.10g}")
        lines.append(f"reduced_chi_square = {self.reduced_chi_square:.10g}")
        lines.append(f"converged = {'true' if self.converged else 'false'}")
        lines.append(f"n_iterations = {self.n_iterations}")
        return "\n".join(lines) + "\n"


def levenberg_marquardt(func, jac, x, y, p0, weights, max_iter=MAX_ITER, rel_tol=REL_TOL,
                        on_accept=None):
    """Minimize sum w (y - func(x, p))^2.

    Returns ``(p, covariance, chi2, converged, n_iterations)``.  Accepted steps
    never increase chi^2; ``on_accept(p, chi2)`` is called after each one.
    """
    p = np.asarray(p0, dtype=float).copy()
    w = np.asarray(weights, dtype=float)
    lam = 1e-3

    def chi2_of(q):
        r = y - func(x, q)
        return float(np.sum(w * r * r)), r

    chi2, r = chi2_of(p)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        J = jac(x, p)
        A = J.T @ (w[:, None] * J)
        g = J.T @ (w * r)
        diag = np.diag(A).copy()
        diag[diag == 0] = 1.0
        try:
            step = np.linalg.solve(A + lam * np.diag(diag), g)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        if not np.all(np.isfinite(step)):
            break
        scale = np.maximum(np.abs(p), 1e-12)
        if np.max(np.abs(step) / scale) < rel_tol:
            converged = True
            break
        trial = p + step
        chi2_t, r_t = chi2_of(trial)
        if np.isfinite(chi2_t) and chi2_t <= chi2:
            p, chi2, r = trial, chi2_t, r_t
            lam = max(lam / 10.0, 1e-12)
            if on_accept is not None:
                on_accept(p.copy(), chi2)
        else:
            lam *= 10.0
            if lam > 1e16:
                # no descent direction left at machine precision
                converged = True
                break
    J = jac(x, p)
    A = J.T @ (w[:, None] * J)
    try:
        cov = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        cov = np.full_like(A, np.inf)
        converged = False
    return p, cov, chi2, converged, it


def _as_xy(points, counts=None):
    if counts is None:
        arr = np.asarray(points, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("points must be a sequence of (x, counts) pairs")
        x, y = arr[:, 0], arr[:, 1]
    else:
        x = np.asarray(points, dtype=float)
        y = np.asarray(counts, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and counts differ in length")
    if np.any(y < 0):
        raise ValueError("counts must be non-negative")
    order = np.argsort(x, kind="stable")
    return x[order], y[order]


def _sigmas(cov):
    d = np.diag(cov)
    return np.where(d >= 0, np.sqrt(np.abs(d)), np.inf)


def _reduced(chi2, n, k):
    return chi2 / (n - k) if n > k else float("nan")


# --- Gaussian peak --------------------------------------------------------------

def _gauss(x, p):
    amp, c, s, off = p
    return off + amp * np.exp(-0.5 * ((x - c) / s) ** 2)


def _gauss_jac(x, p):
    amp, c, s, _ = p
    u = (x - c) / s
    e = np.exp(-0.5 * u * u)
    return np.column_stack([e, amp * e * u / s, amp * e * u * u / s, np.ones_like(x)])


def _moments(x, h):
    h = np.clip(h, 0.0, None)
    total = h.sum()
    if total <= 0:
        return x[np.argmax(h)], (x[-1] - x[0]) / 4.0
    c = float(np.sum(x * h) / total)
    s = math.sqrt(max(float(np.sum((x - c) ** 2 * h) / total), 1e-300))
    return c, s


def fit_gaussian(points, counts=None) -> FitResult:
    """offset + amplitude exp(-(x - center)^2 / (2 sigma^2)).

    ``points`` is a sequence of (x, counts) pairs, or x values with
    ``counts`` given separately.
    """
    x, y = _as_xy(points, counts)
    if x.size < 6:
        raise FitError("need at least 6 points")
    if np.ptp(y) == 0:
        raise FitError("no structure to fit: all counts are equal")
    off = y.min()
    c, s = _moments(x, y - off)
    p0 = [y.max() - off, c, s, off]
    w = 1.0 / np.maximum(y, 1.0)
    p, cov, chi2, ok, it = levenberg_marquardt(_gauss, _gauss_jac, x, y, p0, w)
    p[2] = abs(p[2])
    err = _sigmas(cov)
    names = ("amplitude", "center", "sigma", "offset")
    return FitResult({n: (float(v), float(e)) for n, v, e in zip(names, p, err)},
                     _reduced(chi2, x.size, 4), ok, it, model="gaussian")


# --- HOM dip ------------------------------------------------------------------------

def _dip(x, p):
    base, depth, c, s = p
    return base - depth * np.exp(-0.5 * ((x - c) / s) ** 2)


def _dip_jac(x, p):
    _, depth, c, s = p
    u = (x - c) / s
    e = np.exp(-0.5 * u * u)
    return np.column_stack([np.ones_like(x), -e, -depth * e * u / s, -depth * e * u * u / s])


def fit_dip(points, counts=None) -> FitResult:
    """baseline - depth exp(-(tau - center)^2 / (2 sigma^2)); visibility = depth / baseline.

    The baseline is the distinguishable-photon reference level, so the data
    must not be pre-normalized.
    """
    x, y = _as_xy(points, counts)
    if x.size < 6:
        raise FitError("need at least 6 points")
    if np.ptp(y) == 0:
        raise FitError("no structure to fit: all counts are equal")
    n_edge = max(1, x.size // 8)
    base = float(np.median(np.concatenate([y[:n_edge], y[-n_edge:]])))
    base = max(base, float(y.max()) * 0.5)
    c, s = _moments(x, base - y)
    p0 = [base, base - y.min(), c, s]
    w = 1.0 / np.maximum(y, 1.0)
    p, cov, chi2, ok, it = levenberg_marquardt(_dip, _dip_jac, x, y, p0, w)
    p[3] = abs(p[3])
    err = _sigmas(cov)
    base, depth = p[0], p[1]
    if not depth > 0 or not base > 0:
        ok = False
    vis = depth / base if base != 0 else float("nan")
    rel = math.hypot(err[1] / depth if depth else np.inf, err[0] / base if base else np.inf)
    names = ("baseline", "depth", "center", "sigma")
    return FitResult({n: (float(v), float(e)) for n, v, e in zip(names, p, err)},
                     _reduced(chi2, x.size, 4), ok, it,
                     derived={"visibility": (float(vis), float(abs(vis) * rel))}, model="dip")


# --- fringes ------------------------------------------------------------------------

def _fringe(x, p):
    mean, vis, ph = p
    return mean * (1.0 + vis * np.sin(x + ph))


def _fringe_jac(x, p):
    mean, vis, ph = p
    s = np.sin(x + ph)
    return np.column_stack([1.0 + vis * s, mean * s, mean * vis * np.cos(x + ph)])


def fit_sinusoid(points, counts=None) -> FitResult:
    """mean_level (1 + visibility sin(2 theta + phase)), theta in degrees.

    The visibility is reported non-negative, the phase wrapped to (-pi, pi].
    """
    theta, y = _as_xy(points, counts)
    if theta.size < 8:
        raise FitError("need at least 8 points")
    if np.ptp(theta) < 180.0 - 1e-9:
        raise FitError("angle span must cover at least 180 degrees")
    if np.ptp(y) == 0:
        raise FitError("no structure to fit: all counts are equal")
    x = 2.0 * np.deg2rad(theta)
    # discrete quadrature at the fringe frequency
    mean = float(y.mean())
    a = 2.0 * float(np.mean(y * np.sin(x)))
    b = 2.0 * float(np.mean(y * np.cos(x)))
    vis0 = min(math.hypot(a, b) / mean, 1.0) if mean > 0 else 0.5
    p0 = [mean, max(vis0, 1e-3), math.atan2(b, a)]
    w = 1.0 / np.maximum(y, 1.0)
    p, cov, chi2, ok, it = levenberg_marquardt(_fringe, _fringe_jac, x, y, p0, w)
    mean, vis, ph = p
    if vis < 0:
        vis, ph = -vis, ph + math.pi
    ph = math.pi - (math.pi - ph) % (2.0 * math.pi)
    err = _sigmas(cov)
    names = ("mean_level", "visibility", "phase")
    return FitResult({n: (float(v), float(e)) for n, v, e in zip(names, (mean, vis, ph), err)},
                     _reduced(chi2, x.size, 3), ok, it, model="sinusoid")
