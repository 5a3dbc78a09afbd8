"""Audio inpainting on top of the tight-frame prox machinery.

Four convex problems are assembled, with ``A`` the analysis operator of a
tight frame, ``M`` the zero-fill of missing samples and
``Gamma = {x : M x = M y}`` the signals consistent with the observation::

    synthesis,  consistent     min_z ||z||_1             s.t.  A* z in Gamma
    analysis,   consistent     min_x ||A x||_1           s.t.  x in Gamma
    synthesis,  inconsistent   min_z ||z||_1   + lam ||M A* z - M y||^2
    analysis,   inconsistent   min_x ||A x||_1 + lam ||M x - M y||^2

Analysis problems need the prox of ``||A .||_1``.  With
``analysis_prox_mode="approximal"`` it is replaced by the explicit
approximal operator; ``"exact-nested"`` solves the problem exactly
(Chambolle-Pock for the consistent case, FISTA with an inner primal-dual
prox for the inconsistent one).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import proxcalc, solvers
from .errors import DimensionError, FractionOutOfRange, TooFewMissing
from .frames import Frame

__all__ = [
    "SNR_CAP_DB",
    "FORMULATIONS",
    "PROX_MODES",
    "Mask",
    "InpaintTask",
    "SolveReport",
    "degrade",
    "snr",
    "synthetic_signal",
    "masked_data_term",
    "solve",
]

SNR_CAP_DB = 300.0
FORMULATIONS = (
    ("synthesis", "consistent"),
    ("analysis", "consistent"),
    ("synthesis", "inconsistent"),
    ("analysis", "inconsistent"),
)
PROX_MODES = ("approximal", "exact-nested")


@dataclass(frozen=True, eq=False)
class Mask:
    """Boolean mask of reliable samples (``True`` = observed)."""

    reliable: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.reliable, dtype=bool)
        if r.ndim != 1:
            raise DimensionError(f"mask must be 1-D, got shape {r.shape}")
        r.setflags(write=False)
        object.__setattr__(self, "reliable", r)

    @property
    def n(self) -> int:
        return self.reliable.size

    @property
    def missing(self) -> np.ndarray:
        return ~self.reliable

    @property
    def n_missing(self) -> int:
        return int(self.missing.sum())

    def apply(self, x) -> np.ndarray:
        """``M x``: keep reliable samples, zero the missing ones."""
        x = np.asarray(x)
        if x.shape != (self.n,):
            raise DimensionError(f"signal must have shape ({self.n},), got {x.shape}")
        return np.where(self.reliable, x, 0.0)

    def project(self, x, observation) -> np.ndarray:
        """Projection onto ``{x : M x = M observation}``."""
        return proxcalc.project_consistent(x, observation, self.reliable)

    def __eq__(self, other):
        return isinstance(other, Mask) and np.array_equal(self.reliable, other.reliable)

    def __hash__(self):
        return hash(self.reliable.tobytes())


def degrade(signal, fraction: float, seed=None):
    """Drop ``floor(fraction * n)`` samples at uniformly random positions.

    Returns ``(observation, mask)``; missing samples are zero in the
    observation.  The same ``seed`` always gives the same mask.
    """
    if not 0.0 <= fraction < 1.0:
        raise FractionOutOfRange(f"dropout fraction must lie in [0, 1), got {fraction}")
    signal = np.asarray(signal, dtype=float)
    if signal.ndim != 1:
        raise DimensionError(f"signal must be 1-D, got shape {signal.shape}")
    n = signal.size
    n_drop = int(np.floor(fraction * n))
    rng = np.random.default_rng(seed)
    reliable = np.ones(n, dtype=bool)
    reliable[rng.choice(n, size=n_drop, replace=False)] = False
    mask = Mask(reliable)
    return mask.apply(signal), mask


def snr(reference, estimate, mask) -> float:
    """``20 log10(std(s) / std(s - s_hat))`` over the missing samples.

    Standard deviations are population ones.  Reliable samples are ignored
    entirely.  A zero error yields ``SNR_CAP_DB``; results are capped there.

    Raises
    ------
    TooFewMissing
        With fewer than two missing samples the deviation is undefined.
    """
    reference = np.asarray(reference, dtype=float)
    estimate = np.asarray(estimate, dtype=float)
    missing = mask.missing if isinstance(mask, Mask) else ~np.asarray(mask, dtype=bool)
    if not reference.shape == estimate.shape == missing.shape:
        raise DimensionError("reference, estimate and mask lengths differ")
    if missing.sum() < 2:
        raise TooFewMissing(f"need at least 2 missing samples, got {int(missing.sum())}")
    s = reference[missing]
    err = np.std(s - estimate[missing])
    if err == 0:
        return SNR_CAP_DB
    sig = np.std(s)
    if sig == 0:
        return float("-inf")
    return float(min(20.0 * np.log10(sig / err), SNR_CAP_DB))


def synthetic_signal(n: int, seed=None, n_sinusoids: int = 3, transient: bool = False,
                     sample_rate: float = 16_000.0) -> np.ndarray:
    """Sum of seeded sinusoids, optionally with a decaying onset transient.

    Frequencies are drawn in 100 Hz .. ``sample_rate / 8``; the result is
    scaled to a peak of 0.9.
    """
    if not 1 <= n_sinusoids <= 8:
        raise ValueError("n_sinusoids must be between 1 and 8")
    rng = np.random.default_rng(seed)
    t = np.arange(int(n)) / sample_rate
    freqs = rng.uniform(100.0, sample_rate / 8, n_sinusoids)
    amps = rng.uniform(0.3, 1.0, n_sinusoids)
    phases = rng.uniform(0.0, 2 * np.pi, n_sinusoids)
    x = (amps[:, None] * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None])).sum(axis=0)
    if transient:
        onset = int(rng.integers(n // 4, n // 2))
        decay = np.exp(-np.arange(n - onset) / (0.002 * sample_rate))
        burst = np.zeros(n)
        burst[onset:] = decay * rng.standard_normal(n - onset)
        x = x + 2.0 * burst
    peak = np.abs(x).max()
    return 0.9 * x / peak if peak > 0 else x


@dataclass
class InpaintTask:
    """Everything :func:`solve` needs.  ``reference``, when given, is used
    for the SNR in the report."""

    observation: np.ndarray
    mask: Mask
    frame: Frame
    formulation: tuple = ("analysis", "consistent")
    analysis_prox_mode: str = "approximal"
    lam: float = 1.0
    stop: solvers.StopCriteria = solvers.LOOSE
    inner: proxcalc.InnerSolveConfig = field(default_factory=proxcalc.InnerSolveConfig)
    seed: int | None = None
    reference: np.ndarray | None = None
    gamma: float = 1.0

    def __post_init__(self):
        self.observation = np.asarray(self.observation, dtype=float)
        if not isinstance(self.mask, Mask):
            self.mask = Mask(self.mask)
        self.formulation = tuple(self.formulation)
        n = self.observation.size
        if self.observation.shape != (n,) or self.mask.n != n or self.frame.n != n:
            raise DimensionError(
                f"observation {self.observation.shape}, mask {self.mask.n} and frame "
                f"signal length {self.frame.n} disagree"
            )
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation}")
        if self.analysis_prox_mode not in PROX_MODES:
            raise ValueError(f"analysis_prox_mode must be one of {PROX_MODES}")
        if not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.reference is not None:
            self.reference = np.asarray(self.reference, dtype=float)
            if self.reference.shape != (n,):
                raise DimensionError("reference has the wrong length")

    def config(self) -> dict:
        return {
            "formulation": list(self.formulation),
            "analysis_prox_mode": self.analysis_prox_mode,
            "lambda": self.lam,
            "gamma": self.gamma,
            "max_iterations": self.stop.max_iterations,
            "relative_tolerance": self.stop.relative_tolerance,
            "inner_max_iterations": self.inner.max_iterations,
            "inner_relative_tolerance": self.inner.relative_tolerance,
            "frame": {"kind": self.frame.kind, "n": self.frame.n, "m": self.frame.m,
                      "alpha": self.frame.alpha},
            "n_missing": self.mask.n_missing,
            "seed": self.seed,
        }


@dataclass
class SolveReport:
    restored: np.ndarray
    snr_db: float | None
    trace: solvers.Trace
    config: dict

    def to_dict(self, include_signal: bool = False) -> dict:
        d = {
            "snr_db": None if self.snr_db is None else float(self.snr_db),
            "iterations": self.trace.iterations,
            "reason": self.trace.reason,
            "config": self.config,
            "trace": self.trace.as_dict(),
        }
        if include_signal:
            d["restored"] = [float(v) for v in self.restored]
        return d


def masked_data_term(mask: Mask, observation, lam: float, frame: Frame | None = None):
    """Smooth term ``lam ||M x - M y||^2``, or ``lam ||M A* z - M y||^2`` in
    the coefficient domain when ``frame`` is given."""
    y = mask.apply(observation)
    w = mask.reliable.astype(float)
    if frame is None:
        return solvers.SmoothTerm(
            gradient=lambda x: 2.0 * lam * w * (x - y),
            lipschitz=2.0 * lam,
            value=lambda x: lam * float(np.sum((w * (x - y)) ** 2)),
        )

    def residual(z):
        return w * (frame.synthesize(z) - y)

    return solvers.SmoothTerm(
        gradient=lambda z: 2.0 * lam * frame.analyze(residual(z)),
        lipschitz=2.0 * lam * frame.alpha,
        value=lambda z: lam * float(np.sum(residual(z) ** 2)),
    )


def _approximal_l1(frame):
    """Stand-in for ``prox_{s ||A .||_1}``: the approximal operator of
    ``s ||.||_1``."""
    def prox(v, s):
        return proxcalc.approximal(lambda c, t: proxcalc.soft_threshold(c, s * t), frame, v)
    return prox


def _l1_of_analysis(frame):
    return lambda x: proxcalc.l1_norm(frame.analyze(x))


def solve(task: InpaintTask) -> SolveReport:
    """Solve the inpainting problem described by ``task``.

    All solvers start from zero.  Synthesis formulations return ``A* z``.
    When no sample is missing the observation is returned unchanged.
    """
    frame, mask, y = task.frame, task.mask, task.observation
    kind, data = task.formulation
    mode = task.analysis_prox_mode
    project = lambda v, s=None: mask.project(v, y)  # noqa: E731

    if mask.n_missing == 0:
        trace = solvers.Trace(reason="tolerance")
        return SolveReport(y.copy(), _report_snr(task, y), trace, task.config())

    if (kind, data) == ("synthesis", "consistent"):
        constraint = lambda z, s: proxcalc.prox_semiorthogonal(project, frame, None, z)  # noqa: E731
        z0 = np.zeros(frame.m, dtype=frame.coef_dtype)
        z, trace = solvers.douglas_rachford(
            constraint, proxcalc.soft_threshold, z0, gamma=task.gamma, stop=task.stop,
            objective=proxcalc.l1_norm,
        )
        restored = frame.synthesize(z)
    elif (kind, data) == ("analysis", "consistent") and mode == "approximal":
        restored, trace = solvers.douglas_rachford(
            project, _approximal_l1(frame), np.zeros(frame.n), gamma=task.gamma, stop=task.stop,
            objective=_l1_of_analysis(frame),
        )
    elif (kind, data) == ("analysis", "consistent"):
        tau, sigma = task.inner.steps(frame.alpha)
        restored, trace = solvers.chambolle_pock(
            proxcalc.L1, project, solvers.frame_operator(frame), np.zeros(frame.n),
            tau, sigma, theta=task.inner.theta, stop=task.stop,
            objective=_l1_of_analysis(frame),
        )
    elif kind == "synthesis":
        smooth = masked_data_term(mask, y, task.lam, frame)
        z0 = np.zeros(frame.m, dtype=frame.coef_dtype)
        z, trace = solvers.fista(smooth, proxcalc.L1, z0, stop=task.stop)
        restored = frame.synthesize(z)
    elif mode == "approximal":
        smooth = masked_data_term(mask, y, task.lam)
        l1A = _l1_of_analysis(frame)
        restored, trace = solvers.fista(
            smooth, _approximal_l1(frame), np.zeros(frame.n), stop=task.stop,
            objective=lambda x: smooth.value(x) + l1A(x),
        )
    else:
        smooth = masked_data_term(mask, y, task.lam)
        restored, trace = solvers.fista_nested_analysis(
            smooth, frame, proxcalc.L1, task.inner, np.zeros(frame.n), stop=task.stop,
        )

    restored = np.real(restored)
    return SolveReport(restored, _report_snr(task, restored), trace, task.config())


def _report_snr(task, restored):
    if task.reference is None:
        return None
    try:
        return snr(task.reference, restored, task.mask)
    except TooFewMissing:
        # nothing (or a single sample) to restore: exact recovery is the cap
        missing = task.mask.missing
        exact = np.array_equal(task.reference[missing], restored[missing])
        return SNR_CAP_DB if exact else None
