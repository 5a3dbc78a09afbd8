"""First-order proximal solvers: Douglas-Rachford, Chambolle-Pock, (F)ISTA.

All solvers accept proximal mappings as callables ``prox(v, scale)`` that
return the prox of ``scale * f`` at ``v`` (see
:class:`approximal.proxcalc.ProxMapping`), stop on the relative change of the
iterate, and return ``(solution, Trace)``.
"""

from __future__ import annotations

import csv
import io
import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DimensionError, NoConvergence, StepSizeViolation

__all__ = [
    "StopCriteria",
    "LOOSE",
    "STRICT",
    "Trace",
    "SmoothTerm",
    "LinearOperator",
    "frame_operator",
    "matrix_operator",
    "relative_change",
    "dual_prox",
    "douglas_rachford",
    "chambolle_pock",
    "fista",
    "fista_nested_analysis",
]


@dataclass(frozen=True)
class StopCriteria:
    """Iteration budget and relative-change tolerance (``maxit``/``tol``)."""

    max_iterations: int = 200
    relative_tolerance: float = 1e-3

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.relative_tolerance > 0:
            raise ValueError("relative_tolerance must be positive")


#: The two stopping regimes compared in the experiments.
LOOSE = StopCriteria(200, 1e-3)
STRICT = StopCriteria(500, 1e-5)


@dataclass
class Trace:
    """Per-iteration record of a solver run."""

    objective: list = field(default_factory=list)
    relative_change: list = field(default_factory=list)
    time_ms: list = field(default_factory=list)
    reason: str | None = None
    inner_iterations: list = field(default_factory=list)
    inner_converged: bool = True
    state: dict = field(default_factory=dict, repr=False)

    @property
    def iterations(self) -> int:
        return len(self.relative_change)

    @property
    def converged(self) -> bool:
        return self.reason == "tolerance"

    def as_dict(self) -> dict:
        d = {
            "iterations": self.iterations,
            "reason": self.reason,
            "objective": [float(v) for v in self.objective],
            "relative_change": [float(v) for v in self.relative_change],
            "time_ms": [float(v) for v in self.time_ms],
        }
        if self.inner_iterations:
            d["inner_iterations"] = [int(v) for v in self.inner_iterations]
            d["inner_converged"] = self.inner_converged
        return d

    def to_csv(self, path=None) -> str:
        """Write ``iteration,objective,relative_change,time_ms`` rows.

        Returns the CSV text; also writes it to ``path`` when given.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "objective", "relative_change", "time_ms"])
        for k in range(self.iterations):
            obj = self.objective[k] if k < len(self.objective) else float("nan")
            w.writerow([k + 1, f"{obj:.17g}", f"{self.relative_change[k]:.17g}", f"{self.time_ms[k]:.17g}"])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text


@dataclass(frozen=True)
class SmoothTerm:
    """Differentiable term with a Lipschitz-continuous gradient."""

    gradient: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    value: Callable[[np.ndarray], float] | None = None


@dataclass(frozen=True)
class LinearOperator:
    apply: Callable[[np.ndarray], np.ndarray]
    adjoint: Callable[[np.ndarray], np.ndarray]
    norm: float


def frame_operator(frame) -> LinearOperator:
    """Analysis operator of ``frame`` as a :class:`LinearOperator`."""
    return LinearOperator(frame.analyze, frame.synthesize, frame.norm)


def matrix_operator(K) -> LinearOperator:
    K = np.asarray(K)
    KH = K.conj().T
    return LinearOperator(lambda x: K @ x, lambda y: KH @ y, float(np.linalg.norm(K, 2)))


def _sqnorm(v) -> float:
    v = np.asarray(v).ravel()
    return float(np.real(np.vdot(v, v)))


def relative_change(new, old) -> float:
    """``||new - old|| / ||old||``; falls back to ``||new||`` when ``old = 0``.

    ``new`` and ``old`` may be tuples of arrays, treated as one stacked
    vector.
    """
    if not isinstance(new, tuple):
        new, old = (new,), (old,)
    diff = sum(_sqnorm(a - b) for a, b in zip(new, old))
    if diff == 0:
        return 0.0
    denom = sum(_sqnorm(b) for b in old)
    if denom == 0:
        denom = sum(_sqnorm(a) for a in new)
    return float(np.sqrt(diff / denom))


def dual_prox(g_prox, v, sigma):
    """``prox_{sigma g*}(v)`` from the primal prox via Moreau's decomposition."""
    return v - sigma * g_prox(v / sigma, 1.0 / sigma)


class _Clock:
    def __init__(self):
        self.t0 = time.perf_counter()

    def ms(self) -> float:
        return (time.perf_counter() - self.t0) * 1e3


def douglas_rachford(proxA, proxB, x0, gamma: float = 1.0, stop: StopCriteria = LOOSE,
                     objective: Callable | None = None):
    """Douglas-Rachford splitting for ``min f_A(x) + f_B(x)``.

    Iterates ``y <- y + prox_{gB}(2 prox_{gA}(y) - y) - prox_{gA}(y)`` and
    returns ``prox_{gA}(y)`` at the final ``y``.  The stopping test uses
    the relative change of ``y``.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    y = np.array(x0, copy=True)
    trace = Trace()
    clock = _Clock()
    for _ in range(stop.max_iterations):
        x = proxA(y, gamma)
        if x.shape != y.shape:
            raise DimensionError("proxA changed the iterate shape")
        y_new = y + proxB(2 * x - y, gamma) - x
        rel = relative_change(y_new, y)
        y = y_new
        trace.relative_change.append(rel)
        trace.time_ms.append(clock.ms())
        if objective is not None:
            trace.objective.append(float(objective(x)))
        if rel <= stop.relative_tolerance:
            trace.reason = "tolerance"
            break
    else:
        trace.reason = "max_iterations"
    x = proxA(y, gamma)
    trace.state["y"] = y
    return x, trace


def chambolle_pock(g_prox, h_prox, K: LinearOperator, x0, tau: float, sigma: float,
                   theta: float = 1.0, stop: StopCriteria = LOOSE, y0=None,
                   objective: Callable | None = None):
    """Primal-dual algorithm for ``min_x h(x) + g(K x)``.

    Parameters
    ----------
    g_prox, h_prox : callable
        Primal proxes ``prox(v, scale)``.  The dual prox of ``g`` is derived
        through :func:`dual_prox`.
    K : LinearOperator
        Needs ``apply``, ``adjoint`` and an upper bound ``norm`` on ``||K||``.
    tau, sigma : float
        Primal and dual steps, ``sigma * tau * ||K||^2 <= 1``.
    theta : float
        Over-relaxation in ``[0, 1]``.
    y0 : array, optional
        Initial dual variable (zero by default).

    The stopping test uses the relative change of the pair ``(x, y)``.

    Returns
    -------
    x, Trace
        ``trace.state['y']`` holds the final dual iterate for warm starts.
    """
    if tau <= 0 or sigma <= 0:
        raise ValueError("tau and sigma must be positive")
    if sigma * tau * K.norm**2 > 1.0 + 1e-12:
        raise StepSizeViolation(f"sigma*tau*||K||^2 = {sigma * tau * K.norm**2:.6g} > 1")
    if not 0.0 <= theta <= 1.0:
        raise ValueError("theta must lie in [0, 1]")

    x = np.array(x0, copy=True)
    xbar = x.copy()
    Kx = K.apply(x)
    y = np.zeros_like(Kx) if y0 is None else np.array(y0, copy=True)
    trace = Trace()
    clock = _Clock()
    for _ in range(stop.max_iterations):
        y_old = y
        y = dual_prox(g_prox, y + sigma * K.apply(xbar), sigma)
        x_new = h_prox(x - tau * K.adjoint(y), tau)
        xbar = x_new + theta * (x_new - x)
        # the primal iterate alone can stall for a step while the dual moves
        rel = relative_change((x_new, y), (x, y_old))
        x = x_new
        trace.relative_change.append(rel)
        trace.time_ms.append(clock.ms())
        if objective is not None:
            trace.objective.append(float(objective(x)))
        if rel <= stop.relative_tolerance:
            trace.reason = "tolerance"
            break
    else:
        trace.reason = "max_iterations"
    trace.state["y"] = y
    return x, trace


def fista(smooth: SmoothTerm, nonsmooth_prox, x0, step: float | None = None,
          stop: StopCriteria = LOOSE, momentum: bool = True,
          objective: Callable | None = None):
    """FISTA (or ISTA with ``momentum=False``) for ``min s(x) + r(x)``.

    ``step`` defaults to ``1 / smooth.lipschitz``.  The prox is called as
    ``nonsmooth_prox(v, step)``.  When ``objective`` is omitted and both
    ``smooth.value`` and ``nonsmooth_prox.value`` exist, their sum is
    recorded.
    """
    if step is None:
        step = 1.0 / smooth.lipschitz
    if not step > 0:
        raise ValueError("step must be positive")
    if objective is None:
        r_val = getattr(nonsmooth_prox, "value", None)
        if smooth.value is not None and r_val is not None:
            objective = lambda x: smooth.value(x) + r_val(x)  # noqa: E731

    x = np.array(x0, copy=True)
    z = x.copy()
    t = 1.0
    trace = Trace()
    clock = _Clock()
    for _ in range(stop.max_iterations):
        x_new = nonsmooth_prox(z - step * smooth.gradient(z), step)
        if momentum:
            t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        else:
            z = x_new
        rel = relative_change(x_new, x)
        x = x_new
        trace.relative_change.append(rel)
        trace.time_ms.append(clock.ms())
        if objective is not None:
            trace.objective.append(float(objective(x)))
        if rel <= stop.relative_tolerance:
            trace.reason = "tolerance"
            break
    else:
        trace.reason = "max_iterations"
    return x, trace


def fista_nested_analysis(smooth: SmoothTerm, frame, g_prox, inner, x0,
                          step: float | None = None, stop: StopCriteria = LOOSE,
                          momentum: bool = True, warm_start: bool = True):
    """FISTA on ``s(x) + g(A x)`` with the exact prox of ``g o A`` computed
    by an inner Chambolle-Pock run at every outer iteration.

    ``trace.inner_iterations`` records the inner iteration counts; an inner
    run that exhausts its budget clears ``trace.inner_converged`` and raises
    a single :class:`NoConvergence` warning at the end.  With
    ``warm_start`` the inner dual variable carries over between outer
    iterations.
    """
    from .proxcalc import ProxMapping, prox_analysis_exact

    if step is None:
        step = 1.0 / smooth.lipschitz
    counts: list[int] = []
    status = {"ok": True, "dual": None}

    def nested(v, s):
        scaled = ProxMapping(lambda w, c: g_prox(w, c * s), name=f"{s:g}*{g_prox}")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", NoConvergence)
            u, tr = prox_analysis_exact(scaled, frame, v, inner, dual0=status["dual"],
                                        record_objective=False)
        counts.append(tr.iterations)
        if not tr.converged:
            status["ok"] = False
        if warm_start:
            status["dual"] = tr.state["y"]
        return u

    g_val = getattr(g_prox, "value", None)
    objective = None
    if smooth.value is not None and g_val is not None:
        objective = lambda x: smooth.value(x) + g_val(frame.analyze(x))  # noqa: E731

    x, trace = fista(smooth, nested, x0, step=step, stop=stop, momentum=momentum,
                     objective=objective)
    trace.inner_iterations = counts
    trace.inner_converged = status["ok"]
    if not status["ok"]:
        warnings.warn("inner Chambolle-Pock runs hit their iteration budget", NoConvergence,
                      stacklevel=2)
    return x, trace
