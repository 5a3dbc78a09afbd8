"""Brute-force reference computations for small explicit problems.

Nothing here calls the operators it is meant to check: the prox oracle runs
subgradient descent on the primal objective and polishes with accelerated
proximal gradient on the dual; ``phi`` is computed by minimising over an
orthonormal null-space parameterisation.  Accuracy is certified through
duality gaps, i.e. in objective value rather than iterate distance.
"""

from __future__ import annotations

import csv
import itertools
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import DimensionError, FrameTooLarge, OracleBudgetExceeded
from .frames import Frame

__all__ = [
    "MAX_PHI_DIM",
    "OracleInfo",
    "oracle_prox",
    "prox_objective",
    "phi_value",
    "oracle_phi_grid",
    "write_grid_csv",
    "oracle_moreau_argmin",
    "ProxCriteriaReport",
    "check_prox_criteria",
]

MAX_PHI_DIM = 32
MAX_PROX_DIM = 64
OBJECTIVE_TARGET = 1e-6


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, Frame):
        A = A.params.get("matrix", None) if A.kind == "explicit" else None
        if A is None:
            raise FrameTooLarge("oracle needs an explicit frame")
    return np.asarray(A)


def _realify(A, g):
    """Complex ``A`` acting on real vectors -> stacked real matrix, with
    ``g`` rewrapped to take ``[Re z; Im z]``."""
    m = A.shape[0]
    Ar = np.vstack([A.real, A.imag])

    def join(v):
        return v[:m] + 1j * v[m:]

    def split(z):
        return np.concatenate([z.real, z.imag])

    class _G:
        name = getattr(g, "name", "g")

        def value(self, v):
            return g.value(join(v))

        def subgradient(self, v):
            return split(np.asarray(g.subgradient(join(v))))

        def __call__(self, v, s):
            return split(np.asarray(g(join(v), s)))

    return Ar, _G()


@dataclass
class OracleInfo:
    objective: float
    gap: float
    subgradient_objective: float
    budget_exceeded: bool


def prox_objective(A, g, x, u, b=None) -> float:
    """``g(A u + b) + 1/2 ||u - x||^2``."""
    A = _as_matrix(A)
    z = A @ u if b is None else A @ u + b
    return float(g.value(z) + 0.5 * np.sum((np.asarray(u) - x) ** 2))


def oracle_prox(A, g, x, b=None, budget: int = 100_000, polish: int = 10_000,
                step_scale: float | None = None, return_info: bool = False):
    """Reference solution of ``min_u g(A u + b) + 1/2 ||u - x||^2``.

    Parameters
    ----------
    A : array (k, d) or explicit Frame
        Linear map applied before ``g``.  Complex maps act on real ``u``.
    g : ProxMapping
        Must provide ``value`` and ``subgradient``; its prox, when present,
        enables the dual polishing stage.
    x : array (d,)
    budget : int
        Subgradient iterations (at least 1e5), step ``c / sqrt(k)``.
    polish : int
        Accelerated proximal-gradient iterations on the dual.

    Returns the best iterate by objective (and an :class:`OracleInfo` when
    ``return_info``).  Warns :class:`OracleBudgetExceeded` when the duality
    gap certificate stays above 1e-6.
    """
    A = _as_matrix(A)
    x = np.asarray(x, dtype=float)
    if A.ndim != 2 or A.shape[1] != x.shape[0]:
        raise DimensionError(f"A has shape {A.shape}, x has shape {x.shape}")
    if x.shape[0] > MAX_PROX_DIM:
        raise DimensionError(f"oracle limited to dimension <= {MAX_PROX_DIM}")
    if budget < 100_000:
        raise ValueError("subgradient budget must be at least 1e5")
    if np.iscomplexobj(A):
        A, g = _realify(A, g)
        if b is not None:
            b = np.concatenate([np.real(b), np.imag(b)])
    b = np.zeros(A.shape[0]) if b is None else np.asarray(b, dtype=float)
    AT = A.T
    normA2 = float(np.linalg.norm(A, 2) ** 2)

    def F(u):
        return float(g.value(A @ u + b) + 0.5 * np.dot(u - x, u - x))

    # stage 1: diminishing-step subgradient descent from x
    c = step_scale if step_scale is not None else 1.0 / (1.0 + normA2)
    u = x.copy()
    best_u, best_f = u.copy(), F(u)
    for k in range(1, budget + 1):
        s = AT @ g.subgradient(A @ u + b) + (u - x)
        u = u - (c / np.sqrt(k)) * s
        fu = g.value(A @ u + b) + 0.5 * np.dot(u - x, u - x)
        if fu < best_f:
            best_f, best_u = float(fu), u.copy()
    sub_f = best_f

    # stage 2: FISTA on the dual  min_y 1/2||A^T y||^2 - <y, Ax + b> + g*(y),
    # primal recovery u = x - A^T y
    gap = np.inf
    if polish > 0 and callable(g):
        t_step = 1.0 / normA2 if normA2 > 0 else 1.0
        Axb = A @ x + b
        y = np.asarray(g.subgradient(A @ best_u + b), dtype=float)
        w, t = y.copy(), 1.0
        for _ in range(polish):
            v = w - t_step * (A @ (AT @ w) - Axb)
            z = g(v / t_step, 1.0 / t_step)
            y_new = v - t_step * z
            # Fenchel-Young at the prox point gives g*(y_new) exactly
            conj = float(np.dot(y_new, z) - g.value(z))
            dual = float(np.dot(y_new, Axb) - 0.5 * np.sum((AT @ y_new) ** 2) - conj)
            u_c = x - AT @ y_new
            fu = F(u_c)
            if fu < best_f:
                best_f, best_u = fu, u_c
            gap = min(gap, best_f - dual)
            if gap <= 1e-14 * max(1.0, abs(best_f)):
                break
            t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            w = y_new + ((t - 1.0) / t_new) * (y_new - y)
            y, t = y_new, t_new

    exceeded = not gap <= OBJECTIVE_TARGET
    if exceeded:
        warnings.warn(f"oracle_prox: duality gap {gap:.3g} above {OBJECTIVE_TARGET:g}",
                      OracleBudgetExceeded, stacklevel=2)
    if return_info:
        return best_u, OracleInfo(best_f, float(gap), sub_f, exceeded)
    return best_u


def _alpha_of(A) -> float:
    return float(np.real(np.trace(A.conj().T @ A))) / A.shape[1]


def phi_value(frame, g, x, tol: float = 1e-12, max_iterations: int = 100_000,
              return_gap: bool = False):
    """Evaluate ``phi(x) = alpha^-1 min_{w in N(A^T)} alpha g(Ax - w) + 1/2||w||^2``.

    ``w = Q t`` with ``Q`` an orthonormal basis of the null space of
    ``A^H``.  The problem in ``t`` is solved through its dual

        max_y  <y, Ax> - 1/2 ||Q^T y||^2 - (alpha g)^*(y),

    recovering ``t = Q^T y``.  For the real l1 norm the conjugate is the
    indicator of the box ``|y_i| <= alpha`` and L-BFGS-B solves the dual
    directly; otherwise (or if that falls short) restarted FISTA is used.
    Stops when the duality gap is below ``tol * max(1, |value|)``.  The
    candidate ``t = 0`` is always included, so ``phi(x) <= f(x)`` holds by
    construction.
    """
    A = _as_matrix(frame)
    if A.shape[0] > MAX_PHI_DIM:
        raise FrameTooLarge(f"m = {A.shape[0]} exceeds {MAX_PHI_DIM}")
    x = np.asarray(x, dtype=float)
    g_fn = g
    box = getattr(g, "name", None) == "l1" and not np.iscomplexobj(A)
    if np.iscomplexobj(A):
        A, g_fn = _realify(A, g)
    alpha = _alpha_of(A)
    c = A @ x
    Q = scipy.linalg.null_space(A.T)

    def P(t):
        return float(alpha * g_fn.value(c - Q @ t) + 0.5 * np.dot(t, t))

    best = P(np.zeros(Q.shape[1]))
    if Q.shape[1] == 0:
        return (best / alpha, 0.0) if return_gap else best / alpha

    def done(gap, best):
        return gap <= tol * max(1.0, abs(best))

    y = np.zeros_like(c)
    gap = np.inf
    if box:
        PQ = Q @ Q.T
        # normalised so that L-BFGS-B's relative-reduction test is meaningful
        # for small |c| as well
        scale = 1.0 / max(alpha * float(np.abs(c).sum()), 1e-300)
        res = scipy.optimize.minimize(
            lambda v: (scale * (0.5 * v @ PQ @ v - c @ v), scale * (PQ @ v - c)), y, jac=True,
            method="L-BFGS-B", bounds=[(-alpha, alpha)] * c.size,
            options={"ftol": 1e-16, "gtol": 1e-14, "maxiter": 1000},
        )
        y = np.clip(res.x, -alpha, alpha)
        qty = Q.T @ y
        best = min(best, P(qty))
        gap = best - (float(c @ y) - 0.5 * float(qty @ qty))
        best, gap, y = _polish_round(Q, c, alpha, y, best, gap, P, done)
    # restarted FISTA on the dual; the smooth part has a 1-Lipschitz gradient
    w, t = y.copy(), 1.0
    prev = np.inf
    for it in range(max_iterations):
        if box and it and it % 100 == 0:
            best, gap, _ = _polish_round(Q, c, alpha, y, best, gap, P, done)
        if done(gap, best):
            break
        v = w - (Q @ (Q.T @ w) - c)
        z = g_fn(v, alpha)
        y_new = v - z
        # Fenchel-Young at the prox point gives the conjugate exactly
        conj = float(np.dot(y_new, z) - alpha * g_fn.value(z))
        qty = Q.T @ y_new
        dual = float(np.dot(y_new, c) - 0.5 * np.dot(qty, qty) - conj)
        best = min(best, P(qty))
        gap = min(gap, best - dual)
        if -dual > prev:
            w, t, y = y_new.copy(), 1.0, y_new
        else:
            t_new = (1.0 + np.sqrt(1.0 + 4.0 * t * t)) / 2.0
            w = y_new + ((t - 1.0) / t_new) * (y_new - y)
            y, t = y_new, t_new
        prev = -dual
    if not done(gap, best):
        warnings.warn(f"phi_value: gap {gap:.3g} above tolerance", OracleBudgetExceeded,
                      stacklevel=2)
    if return_gap:
        return best / alpha, max(gap, 0.0) / alpha
    return best / alpha


_ENUMERATE_MAX_M = 6


def _polish_round(Q, c, alpha, y, best, gap, P, done):
    """Try :func:`_l1_kkt_polish` on candidate zero sets of ``c - Q t``
    read off the dual iterate ``y``: every prefix of the indices ordered by
    ``|z|``, by the slack ``alpha - |y|`` or by ``|c|``, combined with the
    signs of ``z``, ``y`` or ``c`` off the zero set.  Tiny frames fall back
    to all sign patterns.  Returns the improved ``(best, gap, y)``."""
    qty = Q.T @ y
    z = c - Q @ qty
    state = {"best": best, "gap": gap, "y": y}

    def attempt(Z, signs):
        polished = _l1_kkt_polish(Q, c, alpha, qty, zero_set=Z, signs=signs)
        if polished is None:
            return False
        t_p, y_p = polished
        qty_p = Q.T @ y_p
        d_val = float(c @ y_p) - 0.5 * float(qty_p @ qty_p)
        state["best"] = min(state["best"], P(t_p))
        if state["best"] - d_val < state["gap"]:
            state["gap"], state["y"] = state["best"] - d_val, y_p
        return done(state["gap"], state["best"])

    def candidates():
        orders = [np.argsort(np.abs(v), kind="stable") for v in (z, y, c)]
        seen = set()
        for order, signs in itertools.product(orders, [np.sign(v) for v in (z, y, c)]):
            for size in range(c.size + 1):
                Z = np.zeros(c.size, dtype=bool)
                Z[order[:size]] = True
                key = (Z.tobytes(), signs[~Z].tobytes())
                if key not in seen:
                    seen.add(key)
                    yield Z, signs
        if c.size <= _ENUMERATE_MAX_M:
            for pattern in itertools.product((-1.0, 0.0, 1.0), repeat=c.size):
                signs = np.array(pattern)
                yield signs == 0, signs

    if not done(gap, best):
        for Z, signs in candidates():
            if attempt(Z, signs):
                break
    return state["best"], state["gap"], state["y"]


def _l1_kkt_polish(Q, c, alpha, t, rel_eps: float = 1e-7, zero_set=None, signs=None):
    """Exact solve of ``min_t alpha ||c - Q t||_1 + 1/2 ||t||^2`` on the
    sign pattern observed at ``t``.

    Stationarity reads ``t = alpha Q^T s`` with ``s_i = sign(z_i)`` off the
    zero set ``Z`` of ``z = c - Q t`` and ``|s_i| <= 1`` on it, where
    additionally ``z_Z = 0``.  Returns ``(t, y = alpha s)`` or ``None`` if
    the pattern does not yield a KKT point.  ``zero_set`` overrides the
    threshold-based guess of ``Z`` and ``signs`` the signs of ``z`` off it.
    """
    z = c - Q @ t
    eps = rel_eps * float(np.abs(c).max())
    Z = np.abs(z) <= eps if zero_set is None else np.asarray(zero_set, dtype=bool)
    S = ~Z
    k, nz = Q.shape[1], int(Z.sum())
    sS = np.sign(z[S] if signs is None else np.asarray(signs)[S])
    if np.any(sS == 0):
        return None
    # unknowns [t, s_Z]:  t - alpha Q_Z^T s_Z = alpha Q_S^T s_S ;  Q_Z t = c_Z
    M = np.zeros((k + nz, k + nz))
    rhs = np.zeros(k + nz)
    M[:k, :k] = np.eye(k)
    M[:k, k:] = -alpha * Q[Z].T
    rhs[:k] = alpha * Q[S].T @ sS
    M[k:, :k] = Q[Z]
    rhs[k:] = c[Z]
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    if not np.allclose(M @ sol, rhs, atol=1e-12, rtol=1e-12):
        return None
    t_new, sZ = sol[:k], sol[k:]
    if np.any(np.abs(sZ) > 1 + 1e-12):
        return None
    s = np.zeros_like(c)
    s[S] = sS
    s[Z] = np.clip(sZ, -1.0, 1.0)
    if np.any(np.sign((c - Q @ t_new)[S]) != sS):
        return None
    return t_new, alpha * s


def _grid_axis(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(round((hi - lo) / step)) + 1
    # index-based values keep the grid exactly symmetric when lo = -hi
    return (round(lo / step) + np.arange(count)) * step if np.isclose(lo / step, round(lo / step)) \
        else lo + step * np.arange(count)


def oracle_phi_grid(frame, g, lo: float = -2.0, hi: float = 2.0, step: float = 0.2,
                    tol: float = 1e-12) -> np.ndarray:
    """Tabulate ``f = g(A x)`` and ``phi`` on a regular grid.

    Returns an array with columns ``x1..xn, f, phi`` in row-major grid order
    (last coordinate fastest).
    """
    A = _as_matrix(frame)
    if A.shape[0] > MAX_PHI_DIM:
        raise FrameTooLarge(f"m = {A.shape[0]} exceeds {MAX_PHI_DIM}")
    axis = _grid_axis(lo, hi, step)
    rows = []
    for pt in itertools.product(axis, repeat=A.shape[1]):
        xv = np.array(pt)
        f = float(g.value(A @ xv))
        rows.append([*pt, f, phi_value(A, g, xv, tol=tol)])
    return np.array(rows)


def write_grid_csv(table: np.ndarray, path) -> None:
    n = table.shape[1] - 2
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{i + 1}" for i in range(n)] + ["f", "phi"])
        for row in table:
            w.writerow([f"{v:.17g}" for v in row])


def oracle_moreau_argmin(frame, g, x, radius: float = 0.5, xtol: float = 1e-9) -> np.ndarray:
    """``argmin_v phi(v) + 1/2 ||v - x||^2`` by derivative-free local search.

    A coarse pattern over ``x +- radius`` picks the start, Nelder-Mead
    refines it.  Intended for the 2-D example frame.
    """
    A = _as_matrix(frame)
    x = np.asarray(x, dtype=float)

    def obj(v):
        return phi_value(A, g, v, tol=1e-11) + 0.5 * float(np.sum((v - x) ** 2))

    offsets = np.linspace(-radius, radius, 5)
    cands = [x + np.array(d) for d in itertools.product(offsets, repeat=x.size)]
    start = min(cands, key=obj)
    res = scipy.optimize.minimize(
        obj, start, method="Nelder-Mead",
        options={"xatol": xtol, "fatol": 1e-14, "maxiter": 4000,
                 "initial_simplex": np.vstack([start, start + np.eye(x.size) * radius / 4])},
    )
    return res.x


@dataclass
class ProxCriteriaReport:
    """Worst relative violations of the two prox characterisations.

    ``nonexpansive`` is ``max (||F y - F y'|| - ||y - y'||) / ||y - y'||``;
    ``firm`` is ``max (||F y - F y'||^2 - <F y - F y', y - y'>) / ||y - y'||^2``.
    """

    trials: int
    nonexpansive: float
    firm: float
    nonexpansive_violations: int
    firm_violations: int
    tol: float

    @property
    def passed(self) -> bool:
        return self.nonexpansive_violations == 0 and self.firm_violations == 0


def check_prox_criteria(candidate, sampler, trials: int = 1000, seed: int = 0,
                        tol: float = 1e-10) -> ProxCriteriaReport:
    """Sample pairs ``(y, y')`` and test non-expansiveness and firm
    non-expansiveness of ``candidate``.

    ``sampler(rng)`` must return one random point.  Inner products are real
    (``Re(v^H u)``), so complex-valued candidates are handled.
    """
    if trials < 100:
        raise ValueError("need at least 100 trials")
    rng = np.random.default_rng(seed)
    worst_ne = worst_firm = -np.inf
    n_ne = n_firm = 0
    for _ in range(trials):
        y1, y2 = sampler(rng), sampler(rng)
        dy = y1 - y2
        dF = candidate(y1) - candidate(y2)
        ndy2 = float(np.real(np.vdot(dy, dy)))
        if ndy2 == 0:
            continue
        ndF = float(np.linalg.norm(dF))
        ne = (ndF - np.sqrt(ndy2)) / np.sqrt(ndy2)
        firm = (ndF**2 - float(np.real(np.vdot(dy, dF)))) / ndy2
        worst_ne, worst_firm = max(worst_ne, ne), max(worst_firm, firm)
        n_ne += ne > tol
        n_firm += firm > tol
    return ProxCriteriaReport(trials, float(worst_ne), float(worst_firm), int(n_ne), int(n_firm), tol)
