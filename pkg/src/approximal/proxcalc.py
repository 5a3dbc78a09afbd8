"""Proximal operators for compositions with tight frames.

With ``A`` the analysis operator of a tight frame (``A* A = alpha Id``):

* :func:`prox_semiorthogonal` -- closed-form prox of ``g(L x + b)`` when
  ``L L* = alpha Id`` (``L`` is the *synthesis* operator ``A*``).
* :func:`prox_analysis_exact` -- prox of ``g(A x)``, which has no closed
  form for redundant frames; computed by an inner primal-dual solve.
* :func:`approximal` -- the explicit surrogate
  ``alpha^-1 A* prox_{alpha g}(A x)``.  It is itself the prox of a convex
  function ``phi <= g o A``, evaluable through :func:`eval_phi`.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import solvers
from .errors import DimensionError, FrameTooLarge, NegativeThreshold, NoConvergence

__all__ = [
    "ProxMapping",
    "InnerSolveConfig",
    "soft_threshold",
    "l1_norm",
    "l1_subgradient",
    "L1",
    "ZERO",
    "projection_prox",
    "project_consistent",
    "prox_semiorthogonal",
    "prox_analysis_exact",
    "approximal",
    "eval_f",
    "eval_phi",
]


@dataclass(frozen=True)
class ProxMapping:
    """A proximal mapping ``(v, scale) -> prox_{scale * g}(v)``.

    ``value`` and ``subgradient`` evaluate ``g`` itself and are optional;
    objective tracking and the oracles need them.
    """

    func: Callable[[np.ndarray, float], np.ndarray]
    name: str = "prox"
    dim: int | None = None
    value: Callable[[np.ndarray], float] | None = None
    subgradient: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, v, scale: float = 1.0) -> np.ndarray:
        return self.func(v, scale)

    def __str__(self) -> str:
        return self.name


def soft_threshold(coeffs, threshold: float) -> np.ndarray:
    """Componentwise shrinkage ``v / |v| * max(|v| - threshold, 0)``.

    Works for real and complex input; zeros stay zero.

    >>> soft_threshold(np.array([2.0, -0.5, 1.0]), 1.0)
    array([ 1., -0.,  0.])
    """
    if threshold < 0:
        raise NegativeThreshold(f"threshold must be >= 0, got {threshold}")
    v = np.asarray(coeffs)
    if threshold == 0:
        return v.copy()
    mag = np.abs(v)
    if not np.iscomplexobj(v):
        return np.sign(v) * np.maximum(mag - threshold, 0.0)
    gain = np.maximum(mag - threshold, 0.0)
    nz = mag > 0
    np.divide(gain, mag, out=gain, where=nz)
    return v * gain


def l1_norm(v) -> float:
    return float(np.sum(np.abs(v)))


def l1_subgradient(v) -> np.ndarray:
    v = np.asarray(v)
    if np.iscomplexobj(v):
        mag = np.abs(v)
        out = np.zeros_like(v)
        np.divide(v, mag, out=out, where=mag > 0)
        return out
    return np.sign(v)


L1 = ProxMapping(soft_threshold, name="l1", value=l1_norm, subgradient=l1_subgradient)
ZERO = ProxMapping(lambda v, s: np.array(v, copy=True), name="zero",
                   value=lambda v: 0.0, subgradient=lambda v: np.zeros_like(v))


def projection_prox(project: Callable[[np.ndarray], np.ndarray], name: str = "projection") -> ProxMapping:
    """Prox of an indicator function: the projection, independent of scale."""
    return ProxMapping(lambda v, s: project(v), name=name)


def project_consistent(signal, observation, mask) -> np.ndarray:
    """Replace the reliable samples of ``signal`` by the observed ones."""
    signal = np.asarray(signal)
    observation = np.asarray(observation)
    mask = np.asarray(mask, dtype=bool)
    if not signal.shape == observation.shape == mask.shape:
        raise DimensionError(
            f"shapes differ: signal {signal.shape}, observation {observation.shape}, mask {mask.shape}"
        )
    return np.where(mask, observation, signal)


@dataclass(frozen=True)
class InnerSolveConfig:
    """Settings of the inner Chambolle-Pock run used for the exact prox.

    ``tau`` and ``sigma`` default to ``1 / sqrt(alpha)`` of the frame at
    hand, which meets ``sigma * tau * alpha <= 1`` with equality.
    """

    max_iterations: int = 500
    relative_tolerance: float = 1e-6
    tau: float | None = None
    sigma: float | None = None
    theta: float = 1.0

    def steps(self, alpha: float) -> tuple[float, float]:
        tau = self.tau if self.tau is not None else 1.0 / np.sqrt(alpha)
        sigma = self.sigma if self.sigma is not None else 1.0 / np.sqrt(alpha)
        if sigma * tau * alpha > 1.0 + 1e-12:
            raise ValueError(f"sigma*tau*alpha = {sigma * tau * alpha:.6g} exceeds 1")
        return tau, sigma

    @property
    def stop(self) -> solvers.StopCriteria:
        return solvers.StopCriteria(self.max_iterations, self.relative_tolerance)


def prox_semiorthogonal(g_prox, L, b, x) -> np.ndarray:
    """Exact prox of ``u -> g(L u + b)`` for ``L L* = alpha Id``.

    ``L`` is given as a frame and acts through its synthesis operator, so
    ``x`` lives in the coefficient space and ``g`` on signals::

        prox(x) = x + alpha^-1 L*( prox_{alpha g}(L x + b) - L x - b )
    """
    x = np.asarray(x)
    if x.shape != (L.m,):
        raise DimensionError(f"x must have shape ({L.m},), got {x.shape}")
    Lx = L.synthesize(x)
    if b is None:
        shifted = Lx
    else:
        b = np.asarray(b)
        if b.shape != Lx.shape:
            raise DimensionError(f"b must have shape {Lx.shape}, got {b.shape}")
        shifted = Lx + b
    return x + L.analyze(g_prox(shifted, L.alpha) - shifted) / L.alpha


def prox_analysis_exact(g_prox, frame, x, cfg: InnerSolveConfig | None = None, dual0=None,
                        record_objective: bool = True):
    """Prox of ``u -> g(A u)`` by Chambolle-Pock on
    ``min_u g(A u) + 1/2 ||u - x||^2``.

    Returns ``(u, trace)``.  If the tolerance is not reached within the
    budget, a :class:`NoConvergence` warning is issued and the last iterate
    is returned anyway (``trace.converged`` is false).  ``dual0`` warm-starts
    the dual variable; the final one is in ``trace.state['y']``.
    """
    cfg = cfg or InnerSolveConfig()
    x = np.asarray(x)
    if x.shape != (frame.n,):
        raise DimensionError(f"x must have shape ({frame.n},), got {x.shape}")
    tau, sigma = cfg.steps(frame.alpha)

    def h_prox(v, t):
        return (v + t * x) / (1.0 + t)

    objective = None
    g_val = getattr(g_prox, "value", None)
    if record_objective and g_val is not None:
        objective = lambda u: g_val(frame.analyze(u)) + 0.5 * np.sum((u - x) ** 2)  # noqa: E731

    u, trace = solvers.chambolle_pock(
        g_prox, h_prox, solvers.frame_operator(frame), x, tau, sigma,
        theta=cfg.theta, stop=cfg.stop, y0=dual0, objective=objective,
    )
    if not trace.converged:
        warnings.warn(
            f"exact prox: tolerance {cfg.relative_tolerance:g} not reached in "
            f"{cfg.max_iterations} iterations", NoConvergence, stacklevel=2,
        )
    return u, trace


def approximal(g_prox, frame, x) -> np.ndarray:
    """Approximal operator ``alpha^-1 A* prox_{alpha g}(A x)``."""
    return frame.synthesize(g_prox(frame.analyze(x), frame.alpha)) / frame.alpha


def eval_f(frame, g_eval, x) -> float:
    """``f(x) = g(A x)``."""
    return float(g_eval(frame.analyze(x)))


def eval_phi(frame, g_prox, x, tol: float = 1e-12, max_iterations: int = 100_000) -> float:
    """Value at ``x`` of the function whose prox is :func:`approximal`.

    Evaluates the infimal-convolution formula with the oracle minimiser.
    Only explicit frames with ``m <= 32`` are accepted.  ``g_prox`` must
    carry a ``value`` evaluator.
    """
    from . import oracle

    if frame.kind != "explicit" or frame.m > oracle.MAX_PHI_DIM:
        raise FrameTooLarge(f"phi evaluation needs an explicit frame with m <= {oracle.MAX_PHI_DIM}")
    return oracle.phi_value(frame, g_prox, x, tol=tol, max_iterations=max_iterations)
