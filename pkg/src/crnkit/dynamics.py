"""ODE integration, persistence diagnostics and two-parameter scans."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from .netio import ReactionNetwork
from .numeric import NumericModel

RTOL = 1e-8
ATOL = 1e-10

# persistence thresholds (log10 units per unit time, and levels)
SLOPE_TOL = 1e-4
EXTINCT_LEVEL = 1e-6
PERSIST_LEVEL = 1e-3

# Dormand-Prince 5(4) tableau
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# dense output (Hairer's continuous extension)
_D = np.array([-12715105075 / 11282082432, 0, 87487479700 / 32700410799, -10690763975 / 1880347072,
               701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423])


class StepSizeError(RuntimeError):
    """The adaptive step collapsed, which usually signals stiffness."""


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    species: Tuple[str, ...] = ()
    steps: int = 0
    rejected: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *self.species])
        for t, x in zip(self.times, self.states):
            w.writerow([repr(float(t)), *(repr(float(v)) for v in x)])
        return buf.getvalue()


def _stages(f, t, y, h, k1):
    k = [k1]
    for i in range(1, 7):
        yi = y + h * sum(a * kj for a, kj in zip(_A[i], k))
        k.append(f(t + _C[i] * h, yi))
    return k


def dopri5(f: Callable, y0, t_end: float, rtol: float = RTOL, atol: float = ATOL,
           t_eval: Optional[Sequence[float]] = None, h_fixed: Optional[float] = None,
           nonneg: bool = False, max_steps: int = 10_000_000) -> Trajectory:
    """Integrate ``y' = f(t, y)`` on ``[0, t_end]`` with Dormand-Prince 5(4).

    With ``h_fixed`` the step is constant and no error control is done.  With
    ``nonneg`` a step that sends a component below ``-atol`` is rejected and
    components in ``[-atol, 0)`` are set to zero.  Output is at ``t_eval``
    via the 4th-order continuous extension, or at every accepted step.
    """
    y = np.array(y0, dtype=float)
    t = 0.0
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    grid = None if t_eval is None else np.asarray(t_eval, dtype=float)
    if grid is not None and (np.any(np.diff(grid) <= 0) or grid[0] < 0 or grid[-1] > t_end * (1 + 1e-12)):
        raise ValueError("t_eval must be increasing inside [0, t_end]")
    out_t = [0.0] if grid is None else []
    out_y = [y.copy()] if grid is None else []
    gi = 0
    if grid is not None:
        while gi < len(grid) and grid[gi] <= 0:
            out_t.append(grid[gi])
            out_y.append(y.copy())
            gi += 1
    k1 = f(t, y)
    if h_fixed is not None:
        h = h_fixed
    else:
        # initial step heuristic (Hairer, Norsett & Wanner, II.4)
        sc = atol + np.abs(y) * rtol
        d0 = np.sqrt(np.mean((y / sc) ** 2))
        d1 = np.sqrt(np.mean((k1 / sc) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        y1 = y + h0 * k1
        d2 = np.sqrt(np.mean(((f(h0, y1) - k1) / sc) ** 2)) / h0
        h1 = max(1e-6, h0 * 1e-3) if max(d1, d2) <= 1e-15 else (0.01 / max(d1, d2)) ** 0.2
        h = min(100 * h0, h1, t_end)
    steps = rejected = 0
    while t < t_end:
        if steps + rejected > max_steps:
            raise StepSizeError("step budget exhausted")
        last = t + h >= t_end
        if last:
            h = t_end - t
        with np.errstate(over="ignore", invalid="ignore"):  # overflow is caught as an infinite error
            k = _stages(f, t, y, h, k1)
            y_new = y + h * sum(b * kj for b, kj in zip(_B, k) if b)
            err_vec = h * sum(e * kj for e, kj in zip(_E, k) if e)
        if h_fixed is None:
            sc = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / sc) ** 2))) if y.size else 0.0
            if nonneg and np.any(y_new < -atol):
                err = max(err, 2.0)
            if not np.isfinite(err):
                err = 1e10
            if err > 1.0:
                rejected += 1
                h *= max(0.2, 0.9 * err ** -0.2)
                if h < 1e-14 * max(1.0, abs(t)):
                    raise StepSizeError(
                        f"step size underflow at t={t!r}; the system looks stiff "
                        "(this explicit integrator does not handle stiffness; try looser tolerances "
                        "or a shorter horizon)")
                continue
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        t_new = t_end if last else t + h
        if nonneg:
            y_new = np.where((y_new < 0) & (y_new >= -atol), 0.0, y_new)
        k7 = k[6] if not nonneg else f(t_new, y_new)
        if grid is not None:
            ydiff = y_new - y
            bspl = h * k[0] - ydiff
            r5 = h * sum(d * kj for d, kj in zip(_D, k) if d)
            while gi < len(grid) and grid[gi] <= t_new + 1e-12 * max(1.0, t_new):
                th = (grid[gi] - t) / h
                th1 = 1 - th
                val = y + th * (ydiff + th1 * (bspl + th * ((ydiff - h * k[6] - bspl) + th1 * r5)))
                if nonneg:
                    val = np.where((val < 0) & (val >= -atol), 0.0, val)
                out_t.append(grid[gi])
                out_y.append(val)
                gi += 1
        else:
            out_t.append(t_new)
            out_y.append(y_new.copy())
        t, y, k1 = t_new, y_new, k7
        steps += 1
        if h_fixed is None:
            h *= factor
    return Trajectory(np.array(out_t), np.array(out_y).reshape(len(out_t), -1), (), steps, rejected)


def simulate(net: ReactionNetwork, params: Mapping[str, float], x0, t_end: float,
             rtol: float = RTOL, atol: float = ATOL, t_eval: Optional[Sequence[float]] = None) -> Trajectory:
    """Integrate the network's mass-action ODE from ``x0`` (array or name mapping)."""
    if isinstance(x0, Mapping):
        x0 = [float(x0[s]) for s in net.species]
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (net.n_species,):
        raise ValueError(f"x0 needs {net.n_species} values")
    if np.any(x0 < 0):
        raise ValueError("initial state must be nonnegative")
    model = NumericModel(net, params)
    traj = dopri5(lambda t, y: model.rhs(y), x0, t_end, rtol, atol, t_eval=t_eval, nonneg=True)
    return Trajectory(traj.times, traj.states, tuple(net.species), traj.steps, traj.rejected)


@dataclass(frozen=True)
class PersistenceResult:
    times: np.ndarray
    min_trace: np.ndarray
    tail_slope: float
    final_min: float
    window_min: float
    verdict: str

    def to_dict(self) -> dict:
        return {"tail_slope": self.tail_slope, "final_min": self.final_min,
                "window_min": self.window_min, "verdict": self.verdict}


def persistence_diagnostic(traj: Trajectory, window_fraction: float = 0.25,
                           slope_tol: float = SLOPE_TOL, extinct_level: float = EXTINCT_LEVEL,
                           persist_level: float = PERSIST_LEVEL) -> PersistenceResult:
    """Trend of ``log10 min_i x_i(t)`` over the final part of the trajectory."""
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must be in (0, 1]")
    if np.any(traj.states[0] <= 0):
        raise ValueError("trajectory must start in the interior")
    mins = np.min(traj.states, axis=1)
    trace = np.log10(np.maximum(mins, 1e-300))
    t = traj.times
    t0 = t[-1] - window_fraction * (t[-1] - t[0])
    sel = t >= t0
    if sel.sum() < 2:
        sel = np.zeros_like(sel)
        sel[-2:] = True
    slope = float(np.polyfit(t[sel], trace[sel], 1)[0])
    final = float(mins[-1])
    wmin = float(mins[sel].min())
    if slope < -slope_tol and final < extinct_level:
        verdict = "nonpersistent-like"
    elif wmin > persist_level and abs(slope) < slope_tol:
        verdict = "persistent-like"
    else:
        verdict = "inconclusive"
    return PersistenceResult(t, trace, slope, final, wmin, verdict)


@dataclass(frozen=True)
class ScanResult:
    axes: Tuple[Tuple[str, Tuple[float, ...]], Tuple[str, Tuple[float, ...]]]
    cells: Tuple[Tuple[str, ...], ...]
    legend: Dict[str, str]

    def to_csv(self) -> str:
        (n1, g1), (n2, g2) = self.axes
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([n1, n2, "label"])
        for i, a in enumerate(g1):
            for j, b in enumerate(g2):
                w.writerow([repr(float(a)), repr(float(b)), self.cells[i][j]])
        return buf.getvalue()

    def to_dict(self) -> dict:
        (n1, g1), (n2, g2) = self.axes
        return {"axes": [{"name": n1, "grid": list(g1)}, {"name": n2, "grid": list(g2)}],
                "cells": [list(r) for r in self.cells], "legend": dict(self.legend)}


LCP_LEGEND = {
    "DFE stable": "both basic reproduction numbers below one",
    "E1 stable": "strain 1 established, strain 2 cannot invade",
    "E2 stable": "strain 2 established, strain 1 cannot invade",
    "E* stable": "each strain invades the other (coexistence)",
    "boundary": "a decision quantity within 1e-9 of one",
    "unclassified": "no region condition holds",
    "error": "the classifier failed for this cell",
}


def generic_label(net: ReactionNetwork, params: Mapping[str, float]) -> str:
    """Faces (DFE and minimal critical siphons) carrying a stable equilibrium."""
    from .boundary import find_dfe, search_face
    from .siphons import critical_siphons

    stable = []
    dfe = find_dfe(net, params)
    if dfe.classification == "stable":
        stable.append("DFE")
    model = NumericModel(net, params)
    crit = critical_siphons(net)
    for T in crit:
        fs = search_face(net, params, T, model=model)
        others = [U for U in crit if not set(U) <= set(T)]
        for e in fs.equilibria:
            if e.classification == "stable" and all(max(e.values[i] for i in U) > 1e-9 for U in others):
                stable.append("{" + ",".join(net.names(T)) + "}=0")
                break
    return "stable: " + "; ".join(stable) if stable else "no stable boundary equilibrium"


def scan(net: ReactionNetwork, base_params: Mapping[str, float], axis1: Tuple[str, Sequence[float]],
         axis2: Tuple[str, Sequence[float]], classifier: str = "lcp") -> ScanResult:
    """Label every cell of a two-parameter grid; failures become ``"error"``."""
    from .boundary import lcp_classify

    for name, _ in (axis1, axis2):
        if name not in net.parameters:
            raise KeyError(f"{name!r} is not a parameter of the network")
    if classifier not in ("lcp", "generic"):
        raise ValueError("classifier must be 'lcp' or 'generic'")
    g1 = tuple(float(v) for v in axis1[1])
    g2 = tuple(float(v) for v in axis2[1])
    rows = []
    legend = dict(LCP_LEGEND) if classifier == "lcp" else {"error": LCP_LEGEND["error"]}
    for a in g1:
        row = []
        for b in g2:
            p = dict(base_params)
            p[axis1[0]] = a
            p[axis2[0]] = b
            try:
                label = lcp_classify(net, p).label if classifier == "lcp" else generic_label(net, p)
            except Exception:  # a failing cell must not stop the scan
                label = "error"
            if label not in legend:
                legend[label] = "stable boundary equilibria on the listed faces" if classifier == "generic" \
                    else "several region conditions hold"
            row.append(label)
        rows.append(tuple(row))
    return ScanResult(((axis1[0], g1), (axis2[0], g2)), tuple(rows), legend)
