import numpy as np
import pytest

from quantshape.eig import eigenvalues, symmetric_eigenvalues


def test_triangular_repeated_eigenvalue():
    vals = eigenvalues(np.array([[0.5, 1.0], [0.0, 0.5]]))
    assert np.allclose(sorted(vals.real), [0.5, 0.5], atol=1e-12)
    assert np.allclose(vals.imag, 0.0, atol=1e-12)


def test_scaled_rotation_complex_pair():
    th = 0.7
    a = 0.9 * np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    vals = eigenvalues(a)
    assert np.allclose(np.abs(vals), 0.9, atol=1e-12)
    assert np.allclose(sorted(vals.imag), sorted([0.9 * np.sin(th), -0.9 * np.sin(th)]))


def test_general_matches_lapack_oracle():
    rng = np.random.default_rng(11)
    for _ in range(150):
        n = int(rng.integers(1, 17))
        a = rng.normal(0, 1, (n, n)) * float(rng.choice([0.1, 1.0, 50.0]))
        ours = np.sort_complex(eigenvalues(a))
        ref = np.sort_complex(np.linalg.eigvals(a))
        scale = max(1.0, float(np.max(np.abs(ref))))
        assert np.max(np.abs(ours - ref)) / scale < 1e-10


def test_symmetric_matches_charpoly_roots():
    rng = np.random.default_rng(5)
    for _ in range(30):
        s = rng.normal(0, 2, (9, 9))
        s = s + s.T
        ours = symmetric_eigenvalues(s)
        # independent oracle: roots of the characteristic polynomial
        roots = np.sort(np.roots(np.poly(s)).real)
        scale = max(1.0, float(np.max(np.abs(roots))))
        assert np.max(np.abs(ours - roots)) / scale < 1e-9


def test_symmetric_rejects_asymmetric():
    with pytest.raises(ValueError):
        symmetric_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        eigenvalues(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_empty_and_scalar():
    assert eigenvalues(np.zeros((0, 0))).size == 0
    assert eigenvalues(np.array([[3.0]]))[0] == 3.0
