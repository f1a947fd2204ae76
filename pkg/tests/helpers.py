"""Shared builders for simulation tests."""

import math

import numpy as np

from extremal.montecarlo import SimulatedPath, counter_normals, realized_qv, time_change


def piecewise_sigma_path(sigmas, durations, dt, drift=0.0, x0=0.0, seed=7):
    """Euler path whose volatility is switched on a time schedule (not by state)."""
    counts = [int(round(d / dt)) for d in durations]
    sig_steps = np.concatenate([np.full(c, s, dtype=float) for s, c in zip(sigmas, counts)])
    k = sig_steps.size
    z = counter_normals(seed, 0, k)
    inc = drift * dt + sig_steps * math.sqrt(dt) * z
    times = np.arange(k + 1) * dt
    values = np.concatenate([[x0], x0 + np.cumsum(inc)])
    qv = np.concatenate([[0.0], np.cumsum(sig_steps**2 * dt)])
    sig_nodes = np.append(sig_steps, sig_steps[-1])
    return SimulatedPath(times, values, sig_nodes, qv, np.full(k + 1, drift))


def qv_sup_deviation(path, method="node"):
    """Sup-norm gap between realized QV of the changed martingale and t, relative to the changed horizon."""
    tc = time_change(path, method=method)
    rqv = realized_qv(tc)
    return float(np.max(np.abs(rqv - tc.changed_times)) / tc.changed_times[-1])
