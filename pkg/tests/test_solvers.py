import numpy as np
import pytest
import scipy.optimize

from approximal import frames, inpaint, proxcalc, solvers
from approximal.errors import StepSizeViolation
from approximal.proxcalc import L1, InnerSolveConfig
from approximal.solvers import StopCriteria


def _lasso_instance():
    rng = np.random.default_rng(10)
    D = rng.standard_normal((10, 20))
    c = rng.standard_normal(10)
    return D, c


def test_stop_criteria_validation():
    assert (solvers.LOOSE.max_iterations, solvers.LOOSE.relative_tolerance) == (200, 1e-3)
    assert (solvers.STRICT.max_iterations, solvers.STRICT.relative_tolerance) == (500, 1e-5)
    with pytest.raises(ValueError):
        StopCriteria(0, 1e-3)
    with pytest.raises(ValueError):
        StopCriteria(10, 0.0)


def test_relative_change_conventions():
    assert solvers.relative_change(np.ones(3), np.ones(3)) == 0.0
    assert solvers.relative_change(np.ones(4), np.zeros(4)) == 1.0
    assert solvers.relative_change((np.ones(1), np.ones(3)), (np.zeros(1), np.ones(3))) == pytest.approx(1 / np.sqrt(3))


def test_moreau_decomposition():
    rng = np.random.default_rng(0)
    for _ in range(50):
        v = rng.standard_normal(20) * 3
        sigma = rng.uniform(0.05, 5)
        lhs = solvers.dual_prox(L1, v, sigma) + sigma * L1(v / sigma, 1 / sigma)
        np.testing.assert_allclose(lhs, v, atol=1e-10)


def test_step_size_violation():
    K = solvers.matrix_operator(np.eye(3) * 2)
    with pytest.raises(StepSizeViolation):
        solvers.chambolle_pock(L1, lambda v, t: v, K, np.zeros(3), 0.5, 1.0)


def test_lasso_fista_matches_long_ista():
    D, c = _lasso_instance()
    lam = 1.0
    smooth = solvers.SmoothTerm(
        gradient=lambda z: 2 * lam * D.T @ (D @ z - c),
        lipschitz=2 * lam * np.linalg.norm(D, 2) ** 2,
        value=lambda z: lam * float(np.sum((D @ z - c) ** 2)),
    )
    ref, ref_trace = solvers.fista(smooth, L1, np.zeros(20), stop=StopCriteria(200_000, 1e-10),
                                   momentum=False)
    assert ref_trace.converged
    z, trace = solvers.fista(smooth, L1, np.zeros(20), stop=StopCriteria(20_000, 1e-10))
    assert trace.converged
    assert abs(trace.objective[-1] - ref_trace.objective[-1]) <= 1e-6
    np.testing.assert_allclose(z, ref, atol=1e-6)


def test_trace_termination():
    D, c = _lasso_instance()
    smooth = solvers.SmoothTerm(lambda z: 2 * D.T @ (D @ z - c), 2 * np.linalg.norm(D, 2) ** 2)
    for stop in (StopCriteria(5, 1e-3), StopCriteria(5000, 1e-4)):
        _, tr = solvers.fista(smooth, L1, np.zeros(20), stop=stop)
        assert tr.reason in ("tolerance", "max_iterations")
        if tr.reason == "tolerance":
            assert tr.relative_change[-1] <= stop.relative_tolerance
        else:
            assert tr.iterations == stop.max_iterations
        assert len(tr.time_ms) == tr.iterations


def test_trace_csv(tmp_path):
    D, c = _lasso_instance()
    smooth = solvers.SmoothTerm(lambda z: 2 * D.T @ (D @ z - c), 2 * np.linalg.norm(D, 2) ** 2,
                                value=lambda z: float(np.sum((D @ z - c) ** 2)))
    _, tr = solvers.fista(smooth, L1, np.zeros(20), stop=StopCriteria(7, 1e-12))
    text = tr.to_csv(tmp_path / "trace.csv")
    lines = text.splitlines()
    assert lines[0] == "iteration,objective,relative_change,time_ms"
    assert len(lines) == 8
    assert (tmp_path / "trace.csv").read_text() == text


def test_cp_one_reliable_sample_matches_golden_section():
    # min ||A x||_1 s.t. x_1 = c on the demo frame; free coordinate by golden section
    f = frames.demo_frame()
    A = f.params["matrix"]
    y = np.array([0.7, 0.0])
    mask = np.array([True, False])
    project = lambda v, s=None: proxcalc.project_consistent(v, y, mask)  # noqa: E731
    x, tr = solvers.chambolle_pock(L1, project, solvers.frame_operator(f), np.zeros(2),
                                   1 / np.sqrt(2), 1 / np.sqrt(2), stop=StopCriteria(100_000, 1e-12))
    res = scipy.optimize.minimize_scalar(lambda t: np.abs(A @ np.array([0.7, t])).sum(),
                                         bracket=(-5, 5), method="golden", tol=1e-12)
    assert x[0] == 0.7
    assert abs(x[1] - res.x) <= 1e-5


def _dct_instance(n=256, seed=3):
    rng = np.random.default_rng(seed)
    f = frames.make_dct_frame(n)
    coef = np.zeros(n)
    coef[rng.choice(n, 8, replace=False)] = rng.standard_normal(8)
    s = f.synthesize(coef)
    y, mask = inpaint.degrade(s, 0.5, seed=seed)
    return f, y, mask


def test_unitary_dr_synthesis_matches_cp_analysis():
    f, y, mask = _dct_instance()
    project = lambda v, s=None: mask.project(v, y)  # noqa: E731
    constraint = lambda z, s: proxcalc.prox_semiorthogonal(project, f, None, z)  # noqa: E731
    z, tr_dr = solvers.douglas_rachford(constraint, proxcalc.soft_threshold, np.zeros(f.m),
                                        stop=StopCriteria(100_000, 1e-12))
    x, tr_cp = solvers.chambolle_pock(L1, project, solvers.frame_operator(f), np.zeros(f.n),
                                      1.0, 1.0, stop=StopCriteria(100_000, 1e-12))
    obj_dr = proxcalc.l1_norm(z)
    obj_cp = proxcalc.l1_norm(f.analyze(x))
    assert abs(obj_dr - obj_cp) <= 1e-6
    np.testing.assert_allclose(f.synthesize(z), x, atol=1e-6)


def test_unitary_dr_cp_agree_within_ten_tolerances():
    f, y, mask = _dct_instance(seed=4)
    tol = 1e-5
    project = lambda v, s=None: mask.project(v, y)  # noqa: E731
    approx = lambda v, s: proxcalc.approximal(lambda c, t: proxcalc.soft_threshold(c, s * t), f, v)  # noqa: E731
    x_dr, _ = solvers.douglas_rachford(project, approx, np.zeros(f.n), stop=StopCriteria(100_000, tol))
    x_cp, _ = solvers.chambolle_pock(L1, project, solvers.frame_operator(f), np.zeros(f.n),
                                     1.0, 1.0, stop=StopCriteria(100_000, tol))
    o_dr, o_cp = (proxcalc.l1_norm(f.analyze(v)) for v in (x_dr, x_cp))
    assert abs(o_dr - o_cp) <= 10 * tol * max(o_dr, o_cp)


def test_tightening_reduces_dr_cp_objective_gap():
    f, y, mask = _dct_instance(seed=5)
    project = lambda v, s=None: mask.project(v, y)  # noqa: E731
    approx = lambda v, s: proxcalc.approximal(lambda c, t: proxcalc.soft_threshold(c, s * t), f, v)  # noqa: E731
    gaps = []
    for stop in (solvers.LOOSE, solvers.STRICT):
        x_dr, _ = solvers.douglas_rachford(project, approx, np.zeros(f.n), stop=stop)
        x_cp, _ = solvers.chambolle_pock(L1, project, solvers.frame_operator(f), np.zeros(f.n),
                                         1.0, 1.0, stop=stop)
        gaps.append(abs(proxcalc.l1_norm(f.analyze(x_dr)) - proxcalc.l1_norm(f.analyze(x_cp))))
    assert gaps[1] < gaps[0]


def test_nested_fista_unitary_matches_closed_form():
    f = frames.make_dct_frame(32)
    rng = np.random.default_rng(6)
    target = rng.standard_normal(32)
    smooth = solvers.SmoothTerm(lambda x: 2 * (x - target), 2.0)
    closed = lambda v, s: f.synthesize(proxcalc.soft_threshold(f.analyze(v), s))  # noqa: E731
    stop = StopCriteria(300, 1e-12)
    ref, _ = solvers.fista(smooth, closed, np.zeros(32), stop=stop)
    x, tr = solvers.fista_nested_analysis(smooth, f, L1, InnerSolveConfig(5000, 1e-15),
                                          np.zeros(32), stop=stop)
    np.testing.assert_allclose(x, ref, atol=1e-8)
    assert len(tr.inner_iterations) == tr.iterations


def test_nested_fista_flags_inner_budget():
    f = frames.demo_frame()
    smooth = solvers.SmoothTerm(lambda x: 2 * (x - np.array([3.0, -1.0])), 2.0)
    with pytest.warns(proxcalc.NoConvergence):
        _, tr = solvers.fista_nested_analysis(smooth, f, L1, InnerSolveConfig(1, 1e-12),
                                              np.zeros(2), stop=StopCriteria(5, 1e-12))
    assert not tr.inner_converged
