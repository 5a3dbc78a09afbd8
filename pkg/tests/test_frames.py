import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from approximal import frames
from approximal.errors import DimensionError, NotTight, PainlessViolation
from approximal.frames import inner


def harmonic_frame(m=6, n=3):
    """Complex tight frame: n columns of the m-point DFT."""
    k = np.arange(m)[:, None]
    j = np.arange(n)[None, :]
    return np.exp(-2j * np.pi * k * j / m)


@pytest.fixture(scope="module", params=["demo", "dct", "gabor", "harmonic"])
def frame(request):
    if request.param == "demo":
        return frames.demo_frame()
    if request.param == "dct":
        return frames.make_dct_frame(64)
    if request.param == "gabor":
        return frames.make_gabor_frame(16, 4, 32, 64)
    return frames.make_explicit_frame(harmonic_frame())


def _coeffs(rng, frame):
    c = rng.standard_normal(frame.m)
    if frame.complex_coefficients:
        c = c + 1j * rng.standard_normal(frame.m)
    return c


def test_printed_matrix_has_alpha_two():
    A = frames.DEMO_MATRIX_4x2
    alpha = np.trace(A.T @ A) / 2
    assert abs(alpha - 2) < 1e-3
    # four printed decimals are not tight to 1e-8
    with pytest.raises(NotTight):
        frames.make_explicit_frame(A)


def test_demo_frame_is_snapped_copy():
    f = frames.demo_frame()
    assert f.alpha == pytest.approx(2.0, abs=1e-12)
    A = f.params["matrix"]
    assert np.abs(A - frames.DEMO_MATRIX_4x2).max() < 2e-5
    np.testing.assert_allclose(A.T @ A, 2 * np.eye(2), atol=1e-12)


def test_explicit_errors():
    with pytest.raises(DimensionError):
        frames.make_explicit_frame(np.ones((1, 2)))
    with pytest.raises(NotTight):
        frames.make_explicit_frame(np.array([[1.0, 0.0], [0.0, 2.0]]))
    with pytest.raises(NotTight):
        frames.make_explicit_frame(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_gabor_desk_parameters():
    f = frames.make_gabor_frame(64, 16, 128, 1024)
    assert f.m == 8192 and f.alpha == 1.0
    rng = np.random.default_rng(0)
    worst = max(np.abs(f.synthesize(f.analyze(x)) - x).max()
                for x in rng.standard_normal((50, 1024)))
    assert worst < 1e-10


def test_gabor_errors():
    with pytest.raises(PainlessViolation):
        frames.make_gabor_frame(64, 16, 32, 1024)
    with pytest.raises(DimensionError):
        frames.make_gabor_frame(64, 24, 128, 1000)
    with pytest.raises(DimensionError):
        frames.make_gabor_frame(8, 16, 16, 64)


def test_dct_orthonormal():
    f = frames.make_dct_frame(8)
    A = f.matrix()
    np.testing.assert_allclose(A.T @ A, np.eye(8), atol=1e-12)
    x = np.random.default_rng(1).standard_normal(8)
    np.testing.assert_allclose(f.synthesize(f.analyze(x)), x, atol=1e-12)


def test_tightness(frame):
    rng = np.random.default_rng(2)
    for _ in range(100):
        x = rng.standard_normal(frame.n)
        c = frame.analyze(x)
        lhs = inner(c, c)
        assert abs(lhs - frame.alpha * inner(x, x)) <= 1e-10 * frame.alpha * inner(x, x)


def test_adjointness(frame):
    rng = np.random.default_rng(3)
    for _ in range(100):
        x = rng.standard_normal(frame.n)
        y = _coeffs(rng, frame)
        lhs = inner(frame.analyze(x), y)
        rhs = inner(x, frame.synthesize(y))
        assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(x) * np.linalg.norm(y)


def test_range_projection(frame):
    rng = np.random.default_rng(4)
    c = _coeffs(rng, frame)
    p = frame.project_range(c)
    np.testing.assert_allclose(frame.project_range(p), p, atol=1e-10)
    a = frame.analyze(rng.standard_normal(frame.n))
    np.testing.assert_allclose(frame.project_range(a), a, atol=1e-10)


def test_shape_checks(frame):
    with pytest.raises(DimensionError):
        frame.analyze(np.zeros(frame.n + 1))
    with pytest.raises(DimensionError):
        frame.synthesize(np.zeros(frame.m + 1))


def test_complex_explicit_real_signals():
    f = frames.make_explicit_frame(harmonic_frame())
    assert f.complex_coefficients and f.real_signals
    assert f.alpha == pytest.approx(6.0)
    c = np.random.default_rng(5).standard_normal(6) + 1j
    assert np.isrealobj(f.synthesize(c))


def test_csv_roundtrip(tmp_path):
    for f in (frames.demo_frame(), frames.make_explicit_frame(harmonic_frame())):
        path = tmp_path / "frame.csv"
        frames.save_frame_csv(f, path)
        g = frames.load_frame_csv(path)
        np.testing.assert_array_equal(g.params["matrix"], f.params["matrix"])
        assert g.alpha == f.alpha


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("3,2\n1,0\n0,1\n")
    with pytest.raises(DimensionError):
        frames.load_frame_csv(p)
    p.write_text("a,b\n")
    with pytest.raises(DimensionError):
        frames.load_frame_csv(p)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, 2, elements=st.floats(-1e3, 1e3)))
def test_demo_tightness_property(x):
    f = frames.demo_frame()
    c = f.analyze(x)
    assert abs(c @ c - 2 * (x @ x)) <= 1e-10 * max(1.0, 2 * (x @ x))
