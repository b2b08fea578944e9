import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from cht_fvm.sparse import LinearSystem, SingularMatrixError, five_point_matrix, solve


def dense_gauss_solve(A, b):
    """Gaussian elimination with partial pivoting (reference for the sparse path)."""
    A = [list(map(float, row)) for row in A]
    b = list(map(float, b))
    n = len(b)
    for k in range(n):
        piv = max(range(k, n), key=lambda r: abs(A[r][k]))
        A[k], A[piv] = A[piv], A[k]
        b[k], b[piv] = b[piv], b[k]
        for r in range(k + 1, n):
            f = A[r][k] / A[k][k]
            for c in range(k, n):
                A[r][c] -= f * A[k][c]
            b[r] -= f * b[k]
    x = [0.0] * n
    for k in reversed(range(n)):
        x[k] = (b[k] - sum(A[k][c] * x[c] for c in range(k + 1, n))) / A[k][k]
    return np.array(x)


def test_identity():
    b = np.array([3.0, -1.5, 7.25])
    assert np.array_equal(solve(LinearSystem.from_matrix(sp.identity(3), b)), b)


def test_diagonal_scaling():
    x = solve(LinearSystem.from_matrix(sp.diags([2.0, 2.0]), [4.0, 6.0]))
    assert np.allclose(x, [2.0, 3.0], rtol=0, atol=1e-15)


def test_poisson_5_against_dense_elimination():
    n = 5
    A = sp.diags([2.0 * np.ones(n), -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1])
    b = np.ones(n)
    x = solve(LinearSystem.from_matrix(A, b))
    oracle = dense_gauss_solve(A.toarray(), b)
    # frozen oracle values: x_i = i (n + 1 - i) / 2
    assert np.allclose(oracle, [2.5, 4.0, 4.5, 4.0, 2.5], rtol=0, atol=1e-13)
    assert np.allclose(x, oracle, rtol=0, atol=1e-13)


def test_additive_assembly_merges_duplicates():
    s = LinearSystem(2, [1.0, 2.0])
    s.add([0, 0, 1], [0, 0, 1], [1.0, 1.0, 4.0])
    s.finalize()
    assert s.matrix.nnz == 2
    assert s.matrix[0, 0] == 2.0
    assert np.allclose(solve(s), [0.5, 0.5])
    with pytest.raises(RuntimeError):
        s.add([0], [0], [1.0])


def test_singular_matrix_names_the_pivot():
    A = sp.csc_matrix(np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 2.0]]))
    with pytest.raises(SingularMatrixError) as exc:
        solve(LinearSystem.from_matrix(A, np.ones(3)))
    assert exc.value.pivot == 1
    assert "1" in str(exc.value)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        LinearSystem(3, np.ones(2))
    s = LinearSystem.from_matrix(sp.identity(3))
    with pytest.raises(ValueError):
        solve(s, rhs=np.ones(4))
    with pytest.raises(ValueError):
        LinearSystem.from_matrix(sp.csc_matrix(np.ones((2, 3))))


def test_pinned_neumann_laplacian_is_not_singular():
    nx = ny = 6
    ones = np.ones((nx, ny))
    a_w, a_e, a_s, a_n = ones.copy(), ones.copy(), ones.copy(), ones.copy()
    a_w[0] = a_e[-1] = 0
    a_s[:, 0] = a_n[:, -1] = 0
    A = five_point_matrix(a_w + a_e + a_s + a_n, -a_w, -a_e, -a_s, -a_n).tolil()
    A[0, :] = 0
    A[0, 0] = 1
    rhs = np.random.default_rng(0).normal(size=nx * ny)
    rhs -= rhs.mean()
    rhs[0] = 0
    x = solve(LinearSystem.from_matrix(A.tocsc(), rhs))
    assert x[0] == pytest.approx(0.0, abs=1e-14)


def test_five_point_matrix_layout():
    a = np.arange(1.0, 7.0).reshape(2, 3)
    M = five_point_matrix(a, -np.ones_like(a), -2 * np.ones_like(a), -3 * np.ones_like(a), -4 * np.ones_like(a))
    D = M.toarray()
    # cell (i, j) has id i * ny + j
    assert D[0, 0] == 1.0 and D[4, 4] == 5.0
    assert D[0, 3] == -2.0  # east neighbour of (0, 0) is (1, 0)
    assert D[3, 0] == -1.0  # west neighbour of (1, 0)
    assert D[0, 1] == -4.0  # north neighbour
    assert D[1, 0] == -3.0  # south neighbour
    assert D[2, 3] == 0.0  # (0, 2) and (1, 0) are not adjacent


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 25), seed=st.integers(0, 2**31 - 1))
def test_cached_and_fresh_factorizations_agree(n, seed):
    rng = np.random.default_rng(seed)
    A = sp.random(n, n, density=0.3, random_state=rng) + n * sp.identity(n)
    b = rng.normal(size=n)
    s = LinearSystem.from_matrix(A, b)
    x1 = solve(s, reuse_factorization=True)
    x2 = solve(s, reuse_factorization=True)
    x3 = solve(s, reuse_factorization=False)
    assert s.factorization is not None
    assert np.array_equal(x1, x2)
    assert np.max(np.abs(x1 - x3)) <= 1e-12 * max(1.0, np.max(np.abs(x1)))
    assert np.max(np.abs(A @ x1 - b)) <= 1e-10 * max(1.0, np.max(np.abs(b)))
