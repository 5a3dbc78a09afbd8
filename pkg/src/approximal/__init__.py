"""Proximal operators of functions composed with tight frames, the explicit
approximal surrogate, and their use in sparsity-based audio inpainting."""

from .errors import (
    ApproximalError,
    DimensionError,
    FractionOutOfRange,
    FrameTooLarge,
    NegativeThreshold,
    NoConvergence,
    NotTight,
    OracleBudgetExceeded,
    PainlessViolation,
    StepSizeViolation,
    TooFewMissing,
)
from .frames import (
    Frame,
    analyze,
    demo_frame,
    make_dct_frame,
    make_explicit_frame,
    make_gabor_frame,
    project_range,
    synthesize,
)
from .inpaint import InpaintTask, Mask, SolveReport, degrade, snr, solve, synthetic_signal
from .proxcalc import (
    L1,
    InnerSolveConfig,
    ProxMapping,
    approximal,
    eval_f,
    eval_phi,
    prox_analysis_exact,
    prox_semiorthogonal,
    soft_threshold,
)
from .solvers import LOOSE, STRICT, StopCriteria, Trace

__version__ = "0.1.0"
