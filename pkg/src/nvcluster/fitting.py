"""Damped Gauss-Newton (Levenberg-Marquardt) least squares and the model fitters.

Every fitter reports non-convergence through ``FitResult.converged`` and
never raises on it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_ITER = 200
STEP_RTOL = 1e-9


@dataclass(frozen=True)
class FitResult:
    params: dict
    sigma: dict | None
    residual_rms: float
    converged: bool
    iterations: int = 0
    flags: tuple = field(default_factory=tuple)

    def __getitem__(self, name: str) -> float:
        return self.params[name]


def _jacobian(fun, p, f0):
    j = np.empty((f0.size, p.size))
    for k in range(p.size):
        h = 1e-7 * max(abs(p[k]), 1e-6)
        dp = p.copy()
        dp[k] += h
        dm = p.copy()
        dm[k] -= h
        j[:, k] = (fun(dp) - fun(dm)) / (2 * h)
    return j


def levenberg_marquardt(residual, p0, names, max_iter: int = MAX_ITER, step_rtol: float = STEP_RTOL,
                        jac=None) -> FitResult:
    """Minimize sum(residual(p)**2) starting from ``p0``.

    Converged when an accepted step changes p by less than ``step_rtol``
    relative to |p|. Uncertainties come from s^2 (J^T J)^-1 at the optimum.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residual(p)
    cost = float(r @ r)
    lam = None
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        j = jac(p) if jac is not None else _jacobian(residual, p, r)
        jtj = j.T @ j
        g = j.T @ r
        dscale = np.diag(jtj).copy()
        dscale[dscale <= 0] = max(dscale.max(initial=0.0), 1.0) * 1e-12 or 1e-12
        if lam is None:
            lam = 1e-3
        accepted = False
        while True:
            try:
                step = -np.linalg.solve(jtj + lam * np.diag(dscale), g)
            except np.linalg.LinAlgError:
                step = -np.linalg.lstsq(jtj + lam * np.diag(dscale), g, rcond=None)[0]
            p_new = p + step
            r_new = residual(p_new)
            cost_new = float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 4.0
            if lam > 1e16:
                break
        if not accepted:
            # no downhill step exists at any damping: we are at a minimum
            converged = True
            break
        small = np.linalg.norm(step) <= step_rtol * (np.linalg.norm(p) + step_rtol)
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam / 3.0, 1e-15)
        if small or cost == 0.0:
            converged = True
            break

    n, m = r.size, p.size
    rms = float(np.sqrt(cost / n)) if n else 0.0
    sigma = None
    flags = []
    if converged:
        j = jac(p) if jac is not None else _jacobian(residual, p, r)
        jtj = j.T @ j
        dof = max(n - m, 1)
        s2 = cost / dof
        try:
            cov = np.linalg.inv(jtj) * s2
            if np.all(np.isfinite(cov)) and np.all(np.diag(cov) >= 0):
                sigma = dict(zip(names, np.sqrt(np.diag(cov)).tolist()))
            else:
                flags.append("singular_covariance")
        except np.linalg.LinAlgError:
            flags.append("singular_covariance")
    else:
        flags.append("max_iterations")
    return FitResult(dict(zip(names, p.tolist())), sigma, rms, converged, it, tuple(flags))


# Lorentzian -----------------------------------------------------------------

def lorentzian_model(f, params: dict, n_peaks: int) -> np.ndarray:
    y = np.full_like(np.asarray(f, dtype=float), params.get("offset", 0.0))
    for k in range(n_peaks):
        hw = params[f"fwhm_{k}"] / 2
        y = y + params[f"amplitude_{k}"] * hw**2 / ((f - params[f"center_{k}"]) ** 2 + hw**2)
    return y


def _peak_guesses(x, y, n):
    """Indices of the ``n`` highest local maxima (fallback: global maxima)."""
    inner = np.where((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    order = inner[np.argsort(-y[inner], kind="stable")]
    picks = list(order[:n])
    rest = [i for i in np.argsort(-y, kind="stable") if i not in picks]
    picks += rest[: n - len(picks)]
    return sorted(picks)


def _half_width(x, y, i, base):
    half = base + (y[i] - base) / 2
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < len(y) - 1 and y[hi] > half:
        hi += 1
    return max(x[hi] - x[lo], 2 * (x[1] - x[0]))


def fit_lorentzian(spectrum, n_peaks: int = 1, init=None) -> FitResult:
    """Fit ``n_peaks`` Lorentzians plus a constant offset.

    ``init`` is a list of centers, or of (center, fwhm) / (center, fwhm,
    amplitude) tuples. Missing pieces are estimated from the data.
    """
    x = np.asarray(spectrum.freq_grid, dtype=float)
    y = np.asarray(spectrum.signal, dtype=float)
    if n_peaks < 1:
        raise ValueError("n_peaks must be >= 1")
    base = float(np.min(y))
    if init is None:
        idx = _peak_guesses(x, y, n_peaks)
        init = [(x[i], _half_width(x, y, i, base), y[i] - base) for i in idx]
    init = [tuple(np.atleast_1d(v)) for v in init]
    if len(init) != n_peaks:
        raise ValueError("need one init entry per peak")
    names, p0 = [], []
    for k, guess in enumerate(init):
        c = float(guess[0])
        if not x[0] <= c <= x[-1]:
            raise ValueError(f"initial center {c} lies outside the grid")
        i = int(np.argmin(np.abs(x - c)))
        w = float(guess[1]) if len(guess) > 1 else _half_width(x, y, i, base)
        a = float(guess[2]) if len(guess) > 2 else float(y[i] - base)
        names += [f"center_{k}", f"fwhm_{k}", f"amplitude_{k}"]
        p0 += [c, w, a]
    names.append("offset")
    p0.append(base)

    def resid(p):
        return lorentzian_model(x, dict(zip(names, p)), n_peaks) - y

    res = levenberg_marquardt(resid, p0, names)
    flags = list(res.flags)
    if any(abs(res.params[f"amplitude_{k}"]) < 1e-9 * max(np.ptp(y), 1e-300) for k in range(n_peaks)):
        flags.append("zero_amplitude")
    return FitResult(res.params, res.sigma, res.residual_rms, res.converged, res.iterations, tuple(flags))


# decaying sinusoids ---------------------------------------------------------

def sinusoid_model(t, params: dict, n: int) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    env = np.exp(-t * params["decay_rate"])
    y = np.full_like(t, params.get("offset", 0.0))
    for k in range(n):
        arg = 2 * np.pi * params[f"freq_{k}"] * t
        y = y + env * (params[f"cos_{k}"] * np.cos(arg) + params[f"sin_{k}"] * np.sin(arg))
    return y


def _fft_guesses(t, y, n):
    dt = t[1] - t[0]
    yy = y - y.mean()
    pad = 16 * len(yy)
    system = np.abs(np.fft.rfft(yy * np.hanning(len(yy)), pad))
    f = np.fft.rfftfreq(pad, dt)
    inner = np.where((system[1:-1] > system[:-2]) & (system[1:-1] >= system[2:]))[0] + 1
    if system[0] > system[1]:
        inner = np.concatenate([[0], inner])
    order = inner[np.argsort(-system[inner], kind="stable")][:n]
    freqs = sorted(f[order].tolist())
    while len(freqs) < n:
        freqs.append(freqs[-1] + 1 / (t[-1] - t[0]) if freqs else 0.0)
    return freqs


def fit_decaying_sinusoids(trace, n_components: int = 1, init=None) -> FitResult:
    """Fit sum_k (a_k cos + b_k sin)(2 pi f_k t) exp(-t / T) + c.

    All components share one decay constant. Results include ``freq_k``
    (inverse time units of the trace), ``amplitude_k``, ``phase_k`` and
    ``decay_time``. ``init`` may list starting frequencies.
    """
    t = np.asarray(trace.t, dtype=float)
    y = np.asarray(trace.y, dtype=float)
    if n_components < 1:
        raise ValueError("n_components must be >= 1")
    freqs = list(init) if init is not None else _fft_guesses(t, y, n_components)
    if len(freqs) != n_components:
        raise ValueError("need one initial frequency per component")
    span = t[-1] - t[0]
    amp = (np.max(y) - np.min(y)) / 2 / n_components
    names, p0 = [], []
    for k, f in enumerate(freqs):
        names += [f"freq_{k}", f"cos_{k}", f"sin_{k}"]
        p0 += [float(f), amp, 0.0]
    names += ["decay_rate", "offset"]
    p0 += [1.0 / span, float(np.mean(y))]

    # start from the best linear amplitudes for the guessed frequencies
    def design(p):
        d = dict(zip(names, p))
        env = np.exp(-t * d["decay_rate"])
        cols = []
        for k in range(n_components):
            arg = 2 * np.pi * d[f"freq_{k}"] * t
            cols += [env * np.cos(arg), env * np.sin(arg)]
        return np.column_stack(cols + [np.ones_like(t)])

    p0 = np.array(p0)
    coef = np.linalg.lstsq(design(p0), y, rcond=None)[0]
    for k in range(n_components):
        p0[names.index(f"cos_{k}")] = coef[2 * k]
        p0[names.index(f"sin_{k}")] = coef[2 * k + 1]
    p0[names.index("offset")] = coef[-1]

    def resid(p):
        return sinusoid_model(t, dict(zip(names, p)), n_components) - y

    res = levenberg_marquardt(resid, p0, names)
    params = dict(res.params)
    rate = params["decay_rate"]
    params["decay_time"] = 1.0 / rate if rate != 0 else float("inf")
    for k in range(n_components):
        a, b = params[f"cos_{k}"], params[f"sin_{k}"]
        if params[f"freq_{k}"] < 0:
            params[f"freq_{k}"] = -params[f"freq_{k}"]
            b = -b
            params[f"sin_{k}"] = b
        params[f"amplitude_{k}"] = float(np.hypot(a, b))
        params[f"phase_{k}"] = float(np.arctan2(-b, a))
    sigma = res.sigma
    if sigma is not None:
        sigma = dict(sigma)
        sigma["decay_time"] = sigma["decay_rate"] / rate**2 if rate != 0 else float("inf")
    return FitResult(params, sigma, res.residual_rms, res.converged, res.iterations, res.flags)


# exponential ----------------------------------------------------------------

def fit_exponential(trace) -> FitResult:
    """Fit a * exp(-t / tau) + c. Flags ``no_decay`` when the amplitude vanishes."""
    t = np.asarray(trace.t, dtype=float)
    y = np.asarray(trace.y, dtype=float)
    if t.size < 3:
        raise ValueError("exponential fit needs at least 3 points")
    span = t[-1] - t[0]
    scale = max(np.max(np.abs(y)), 1e-300)
    if np.ptp(y) <= 1e-12 * scale:
        params = {"amplitude": 0.0, "tau": float("inf"), "offset": float(np.mean(y)), "rate": 0.0}
        return FitResult(params, None, float(np.sqrt(np.mean((y - y.mean()) ** 2))), False, 0, ("no_decay",))
    names = ["amplitude", "rate", "offset"]
    best = None
    for frac in (0.1, 0.3, 1.0, 3.0):
        rate0 = 1.0 / (frac * span)
        e = np.exp(-t * rate0)
        a0, c0 = np.linalg.lstsq(np.column_stack([e, np.ones_like(t)]), y, rcond=None)[0]

        def resid(p):
            return p[0] * np.exp(-t * p[1]) + p[2] - y

        res = levenberg_marquardt(resid, [a0, rate0, c0], names)
        if best is None or res.residual_rms < best.residual_rms:
            best = res
    params = dict(best.params)
    params["tau"] = 1.0 / params["rate"] if params["rate"] != 0 else float("inf")
    flags = list(best.flags)
    if abs(params["amplitude"]) < 1e-9 * scale or params["rate"] <= 0:
        flags.append("no_decay")
    sigma = best.sigma
    if sigma is not None and params["rate"] != 0:
        sigma = dict(sigma)
        sigma["tau"] = sigma["rate"] / params["rate"] ** 2
    return FitResult(params, sigma, best.residual_rms, best.converged, best.iterations, tuple(flags))
