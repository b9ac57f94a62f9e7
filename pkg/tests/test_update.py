import numpy as np
import pytest

from funupdate import (FunctionSpec, LowRankModification, SolveOptions,
                       build_block_compression, dense_update_reference,
                       error_estimate, extract_diagonal, gen_laplace2d,
                       general_factor, general_update, hermitian_factor,
                       hermitian_update, rank_k_update, spectral_norm,
                       split_hermitian, xm_hermitian)
from funupdate.krylov import ArnoldiProcess
from funupdate.densefun import eval_matrix_function
from helpers import make_general, make_hermitian, make_spd, unit

EXP = FunctionSpec.exp()
INVSQRT = FunctionSpec.inverse_sqrt()
IDENT = FunctionSpec.polynomial([0.0, 1.0])


class TestXmHermitian:
    def test_linear_function_gives_rank_one(self):
        rng = np.random.default_rng(1)
        g = make_hermitian(rng, 6)
        x = xm_hermitian(g, 1.7, IDENT, 1)
        want = np.zeros((6, 6))
        want[0, 0] = 1.7**2
        np.testing.assert_allclose(x, want, atol=1e-14)

    def test_constant_function_gives_zero(self):
        rng = np.random.default_rng(2)
        g = make_hermitian(rng, 4)
        x = xm_hermitian(g, 2.0, FunctionSpec.polynomial([3.0]), 1)
        np.testing.assert_allclose(x, np.zeros((4, 4)), atol=1e-14)

    def test_scalar_exponential(self):
        x = xm_hermitian(np.array([[0.0]]), 1.0, EXP, 1)
        np.testing.assert_allclose(x, [[np.e - 1.0]], rtol=1e-14)
        x_down = xm_hermitian(np.array([[0.0]]), 1.0, EXP, -1)
        np.testing.assert_allclose(x_down, [[np.exp(-1.0) - 1.0]], rtol=1e-14)

    def test_sign_validation(self):
        with pytest.raises(ValueError):
            xm_hermitian(np.eye(2), 1.0, EXP, 0)


class TestBlockCompression:
    def test_scalar_blocks(self):
        g = np.array([[2.0]])
        h = np.array([[3.0 + 1.0j]])
        blk = build_block_compression(g, h, 1.5, 2.0, np.array([0.25]))
        np.testing.assert_allclose(blk, [[2.0, 3.0], [0.0, 3.0 - 1.0j + 0.5]])

    def test_orthogonal_start_leaves_pure_adjoint_block(self):
        rng = np.random.default_rng(3)
        g = make_general(rng, 4)
        h = make_general(rng, 4)
        blk = build_block_compression(g, h, 1.0, 1.0, np.zeros(4))
        np.testing.assert_allclose(blk[4:, 4:], h.conj().T)
        assert blk[0, 4] == 1.0

    def test_hermitian_case_reduces_to_difference_form(self):
        # with c = b over Hermitian A both Arnoldi sides coincide, the lower
        # right block becomes G + |b|^2 e1 e1^T, and the (1,2) block of f of
        # the assembled matrix equals the Hermitian difference formula
        rng = np.random.default_rng(4)
        a = make_hermitian(rng, 30)
        b = unit(rng, 30) * 1.3
        m = 5
        pu = ArnoldiProcess(lambda x: a @ x, b)
        pu.advance(m)
        g = pu.compressed(m)
        vtb = pu.basis_matrix(m).conj().T @ b
        blk = build_block_compression(g, g.conj().T, np.linalg.norm(b), np.linalg.norm(b), vtb)
        bumped = g + np.linalg.norm(b) ** 2 * np.outer(np.eye(m)[0], np.eye(m)[0])
        np.testing.assert_allclose(blk[m:, m:], bumped, atol=1e-12)
        f_blk = eval_matrix_function(blk, EXP)[:m, m:]
        diff = xm_hermitian(g, np.linalg.norm(b), EXP, 1)
        assert spectral_norm(f_blk - diff) <= 1e-10

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            build_block_compression(np.eye(2), np.eye(3), 1.0, 1.0, np.zeros(3))
        with pytest.raises(ValueError):
            build_block_compression(np.eye(2), np.eye(2), 1.0, 1.0, np.zeros(3))


class TestErrorEstimate:
    def test_stagnation_gives_zero(self):
        x = np.array([[1.0, 2.0], [3.0, 4.0]])
        pad = np.zeros((4, 4))
        pad[:2, :2] = x
        assert error_estimate(x, pad) == 0.0

    def test_diagonal_difference(self):
        assert error_estimate(np.array([[1.0]]), np.array([[1.0, 0.0], [0.0, 0.5]])) == pytest.approx(0.5)

    def test_equals_dense_norm_of_factor_difference(self):
        rng = np.random.default_rng(5)
        a = make_general(rng, 40)
        at = a.conj().T
        b, c = unit(rng, 40), unit(rng, 40)
        m, d = 6, 2
        small = general_factor(lambda x: a @ x, lambda x: at @ x, b, c, m, EXP)
        big = general_factor(lambda x: a @ x, lambda x: at @ x, b, c, m + d, EXP)
        est = error_estimate(small.X, big.X)
        dense = spectral_norm(big.densify() - small.densify())
        assert est == pytest.approx(dense, abs=1e-12)

    def test_size_ordering(self):
        with pytest.raises(ValueError):
            error_estimate(np.eye(3), np.eye(2))


class TestHermitianUpdate:
    def test_linear_function_reproduces_outer_product(self):
        rng = np.random.default_rng(6)
        a = make_hermitian(rng, 25)
        b = 1.9 * unit(rng, 25)
        fac = hermitian_update(lambda x: a @ x, b, IDENT, opts=SolveOptions(tol=1e-12, max_m=10))
        assert spectral_norm(fac.densify() - np.outer(b, b)) <= 1e-12

    def test_wide_equispaced_spectrum_negated_exponential(self):
        # decaying exponential of a diagonal with eigenvalues spread over
        # [1e-3, 1e3], realized as exp on the negated operator
        rng = np.random.default_rng(7)
        n = 100
        eigs = np.linspace(1e-3, 1e3, n)
        b = unit(rng, n)
        opts = SolveOptions(tol=1e-6, max_m=120)
        fac = hermitian_update(lambda x: -eigs * x, b, EXP, sign=-1, opts=opts)
        assert fac.converged
        ref = dense_update_reference(np.diag(-eigs), -b.reshape(-1, 1), b.reshape(-1, 1), EXP)
        assert spectral_norm(ref - fac.densify()) <= 1e-5

    def test_sherman_morrison_inverse(self):
        rng = np.random.default_rng(8)
        n = 50
        a = make_spd(rng, n, kappa=100.0)
        b = 0.1 * unit(rng, n)
        c = 0.1 * unit(rng, n)
        fac = general_update(lambda x: a @ x, lambda x: a @ x, b, c,
                             FunctionSpec.inverse(), SolveOptions(tol=1e-10, max_m=60))
        assert fac.converged
        ainv = np.linalg.inv(a)
        closed = -np.outer(ainv @ b, ainv.T @ c) / (1.0 + c @ ainv @ b)
        assert spectral_norm(fac.densify() - closed) <= 1e-8 * spectral_norm(closed)

    def test_factor_is_hermitian(self):
        rng = np.random.default_rng(9)
        a = make_hermitian(rng, 30)
        fac = hermitian_update(lambda x: a @ x, unit(rng, 30), EXP,
                               opts=SolveOptions(tol=1e-9, max_m=40))
        dense = fac.densify()
        assert fac.V is fac.U
        assert spectral_norm(dense - dense.conj().T) <= 1e-12 * max(spectral_norm(fac.X), 1.0)

    def test_breakdown_is_exact_and_converged(self):
        fac = hermitian_update(lambda x: x, np.array([1.0, 2.0, 2.0]), EXP)
        assert fac.converged and fac.m == 1
        # factor is (f(1+|b|^2) - f(1)) u1 u1^T with u1 = b/|b|
        want = np.exp(1.0 + 9.0) - np.exp(1.0)
        np.testing.assert_allclose(fac.densify(), want * np.outer([1, 2, 2], [1, 2, 2]) / 9.0,
                                   rtol=1e-12)

    def test_max_m_reached_reports_not_converged(self):
        rng = np.random.default_rng(10)
        a = make_spd(rng, 40, kappa=1e4)
        fac = hermitian_update(lambda x: a @ x, unit(rng, 40), INVSQRT,
                               opts=SolveOptions(tol=1e-14, max_m=8, batch=2))
        assert not fac.converged
        assert fac.m == 8
        ms = [m for m, _ in fac.estimate_history]
        assert ms == sorted(set(ms))  # strictly increasing checkpoints

    def test_full_dimension_is_exact(self):
        rng = np.random.default_rng(11)
        n = 12
        a = make_hermitian(rng, n)
        b = unit(rng, n)
        fac = hermitian_update(lambda x: a @ x, b, EXP,
                               opts=SolveOptions(tol=1e-16, max_m=2 * n))
        ref = dense_update_reference(a, b.reshape(-1, 1), b.reshape(-1, 1), EXP)
        assert fac.converged  # lucky breakdown at n
        assert spectral_norm(ref - fac.densify()) <= 1e-10


class TestGeneralUpdate:
    def test_coincides_with_hermitian_path(self):
        rng = np.random.default_rng(12)
        n = 40
        a = make_hermitian(rng, n, scale=2.0)
        b = unit(rng, n)
        m = 12
        herm = hermitian_factor(lambda x: a @ x, b, m, EXP)
        gen = general_factor(lambda x: a @ x, lambda x: a @ x, b, b, m, EXP)
        assert spectral_norm(herm.densify() - gen.densify()) <= 1e-10

    def test_polynomial_exactness(self):
        rng = np.random.default_rng(13)
        n, m = 60, 8
        a = make_general(rng, n)
        b, c = unit(rng, n), unit(rng, n)
        at = a.conj().T
        for j in range(m + 1):
            p = FunctionSpec.polynomial([0.0] * j + [1.0])
            fac = general_factor(lambda x: a @ x, lambda x: at @ x, b, c, m, p)
            mod = np.linalg.matrix_power(a + np.outer(b, c.conj()), j)
            base = np.linalg.matrix_power(a, j)
            err = spectral_norm(mod - base - fac.densify())
            assert err <= 1e-9 * (1.0 + spectral_norm(mod))

    def test_polynomial_exactness_hermitian_path(self):
        rng = np.random.default_rng(29)
        n, m = 60, 8
        a = make_hermitian(rng, n)
        b = unit(rng, n)
        for j in range(m + 1):
            p = FunctionSpec.polynomial([0.0] * j + [1.0])
            fac = hermitian_factor(lambda x: a @ x, b, m, p)
            assert spectral_norm(fac.U.conj().T @ fac.U - np.eye(m)) <= 1e-12
            mod = np.linalg.matrix_power(a + np.outer(b, b), j)
            base = np.linalg.matrix_power(a, j)
            err = spectral_norm(mod - base - fac.densify())
            assert err <= 1e-9 * (1.0 + spectral_norm(mod))

    def test_m1_linear_coefficient_is_exact(self):
        rng = np.random.default_rng(14)
        a = make_general(rng, 20)
        b = 1.3 * unit(rng, 20)
        c = 0.7 * unit(rng, 20)
        fac = general_factor(lambda x: a @ x, lambda x: a.conj().T @ x, b, c, 1, IDENT)
        np.testing.assert_allclose(fac.X, [[np.linalg.norm(b) * np.linalg.norm(c)]], rtol=1e-13)

    def test_one_sided_breakdown_freezes_exact_side(self):
        # b lives in a 3-dimensional invariant subspace; the adjoint side
        # keeps growing and the result still converges to the dense truth
        rng = np.random.default_rng(15)
        blk = np.zeros((23, 23))
        blk[:3, :3] = make_general(rng, 3)
        blk[3:, 3:] = make_general(rng, 20)
        b = np.zeros(23)
        b[:3] = unit(rng, 3)
        c = unit(rng, 23)
        fac = general_update(lambda x: blk @ x, lambda x: blk.T @ x, b, c, EXP,
                             SolveOptions(tol=1e-11, max_m=40, batch=3))
        assert fac.U.shape[1] == 3
        assert fac.X.shape == (fac.U.shape[1], fac.V.shape[1])
        ref = dense_update_reference(blk, b.reshape(-1, 1), c.reshape(-1, 1), EXP)
        assert spectral_norm(ref - fac.densify()) <= 1e-9

    def test_estimator_tracks_true_error_for_laplacian_invsqrt(self):
        # lookahead estimates stay within a factor 100 of the true error
        # once past the first few steps, for every small lookahead
        rng = np.random.default_rng(16)
        a = gen_laplace2d(20)
        n = a.n
        b = 0.1 * unit(rng, n)
        c = 0.1 * unit(rng, n)
        ref = dense_update_reference(a.to_dense(), b.reshape(-1, 1), c.reshape(-1, 1), INVSQRT)
        pu = ArnoldiProcess(a.matvec, b)
        pv = ArnoldiProcess(a.conjugate_transpose().matvec, c)
        top = 53
        pu.advance(top)
        pv.advance(top)

        def coeff(m):
            g = pu.compressed(m)
            h = pv.compressed(m)
            vtb = pv.basis_matrix(m).conj().T @ b
            blk = build_block_compression(g, h, pu.start_norm, pv.start_norm, vtb)
            return eval_matrix_function(blk, INVSQRT)[:m, m:]

        xs = {m: coeff(m) for m in set(range(6, 51, 4)) | set(range(7, 54))}
        checked = 0
        for m in range(6, 51, 4):
            true_err = spectral_norm(ref - pu.basis_matrix(m) @ xs[m] @ pv.basis_matrix(m).conj().T)
            if true_err < 1e-11:
                break
            for d in (1, 2, 3):
                est = error_estimate(xs[m], xs[m + d])
                assert est <= 100.0 * true_err
                assert est >= true_err / 100.0
                checked += 1
        assert checked >= 12


class TestRankK:
    def test_rank_one_equals_general_update(self):
        rng = np.random.default_rng(17)
        a = make_general(rng, 30)
        at = a.conj().T
        b, c = 0.5 * unit(rng, 30), 0.8 * unit(rng, 30)
        mod = LowRankModification(b.reshape(-1, 1), c.reshape(-1, 1))
        opts = SolveOptions(tol=1e-10, max_m=40)
        facs = rank_k_update(lambda x: a @ x, lambda x: at @ x, mod, EXP, opts)
        assert len(facs) == 1
        direct = general_update(lambda x: a @ x, lambda x: at @ x, b, c, EXP, opts)
        assert spectral_norm(facs[0].densify() - direct.densify()) <= 1e-11

    def test_edge_insertion_matches_dense(self):
        rng = np.random.default_rng(18)
        n = 120
        dense = np.zeros((n, n))
        for _ in range(3 * n):
            i, j = rng.integers(0, n, size=2)
            if i != j:
                dense[i, j] = dense[j, i] = 1.0
        i, j = 5, 80
        dense[i, j] = dense[j, i] = 0.0
        b = np.zeros((n, 2))
        c = np.zeros((n, 2))
        b[i, 0] = b[j, 1] = 1.0
        c[j, 0] = c[i, 1] = 1.0
        mod = LowRankModification(b, c, hermitian_flag=True)
        facs = rank_k_update(lambda x: dense @ x, lambda x: dense @ x, mod, EXP,
                             SolveOptions(tol=1e-8, max_m=90))
        assert len(facs) == 2
        total = sum(f.densify() for f in facs)
        ref = dense_update_reference(dense, b, c, EXP)
        assert spectral_norm(ref - total) <= 1e-6

    def test_zero_modification_gives_no_factors(self):
        rng = np.random.default_rng(19)
        a = make_general(rng, 10)
        mod = LowRankModification(np.ones((10, 2)), np.zeros((10, 2)))
        assert rank_k_update(lambda x: a @ x, lambda x: a.T @ x, mod, EXP) == []

    def test_svd_compression_collapses_redundant_columns(self):
        rng = np.random.default_rng(20)
        a = make_general(rng, 25)
        u = unit(rng, 25)
        v = unit(rng, 25)
        b = np.column_stack([u, 2.0 * u])  # rank 1 despite k = 2
        c = np.column_stack([v, v])
        mod = LowRankModification(b, c)
        facs = rank_k_update(lambda x: a @ x, lambda x: a.T @ x, mod, EXP,
                             SolveOptions(tol=1e-10, max_m=30))
        assert len(facs) == 1


class TestSplitHermitian:
    def test_single_unit_vector(self):
        n = 6
        e0 = np.zeros((n, 1))
        e0[0, 0] = 1.0
        terms = split_hermitian(LowRankModification(e0, e0, hermitian_flag=True))
        assert len(terms) == 1
        vec, sign = terms[0]
        assert sign == 1
        np.testing.assert_allclose(np.outer(vec, vec), np.outer(e0, e0), atol=1e-14)

    def test_edge_modification_eigenpairs(self):
        n, i, j = 8, 2, 5
        b = np.zeros((n, 2))
        c = np.zeros((n, 2))
        b[i, 0] = b[j, 1] = 1.0
        c[j, 0] = c[i, 1] = 1.0
        terms = split_hermitian(LowRankModification(b, c, hermitian_flag=True))
        assert [s for _, s in terms] == [1, -1]
        plus, minus = terms[0][0], terms[1][0]
        np.testing.assert_allclose(np.abs(plus[[i, j]]), np.sqrt(0.5), atol=1e-12)
        recon = np.outer(plus, plus) - np.outer(minus, minus)
        np.testing.assert_allclose(recon, b @ c.T, atol=1e-12)

    def test_reconstruction_of_random_rank3(self):
        rng = np.random.default_rng(21)
        w = rng.standard_normal((15, 3))
        lam = np.array([2.0, -1.0, 0.5])
        d = (w * lam) @ w.T
        terms = split_hermitian(LowRankModification(w, w * lam, hermitian_flag=True))
        recon = sum(s * np.outer(v, v) for v, s in terms)
        assert spectral_norm(recon - d) <= 1e-12 * spectral_norm(d)
        signs = [s for _, s in terms]
        assert signs == sorted(signs, reverse=True)

    def test_rejects_non_hermitian(self):
        rng = np.random.default_rng(22)
        b = rng.standard_normal((10, 1))
        c = rng.standard_normal((10, 1))
        with pytest.raises(ValueError, match="not Hermitian"):
            split_hermitian(LowRankModification(b, c))


class TestExtractDiagonal:
    def test_identity_coefficients_give_row_norms(self):
        rng = np.random.default_rng(23)
        a = make_hermitian(rng, 30)
        fac = hermitian_factor(lambda x: a @ x, unit(rng, 30), 6, EXP)
        fac_id = fac.__class__(fac.U, np.eye(6), fac.U, 6, True, [])
        np.testing.assert_allclose(extract_diagonal(fac_id),
                                   np.sum(np.abs(fac.U) ** 2, axis=1), atol=1e-14)

    def test_rank_one_coefficients(self):
        rng = np.random.default_rng(24)
        from funupdate import UpdateFactor

        u = np.linalg.qr(rng.standard_normal((20, 4)))[0]
        v = np.linalg.qr(rng.standard_normal((20, 4)))[0]
        x = rng.standard_normal(4)
        y = rng.standard_normal(4)
        fac = UpdateFactor(u, np.outer(x, y.conj()), v, 4, True, [])
        np.testing.assert_allclose(extract_diagonal(fac), (u @ x) * np.conj(v @ y), atol=1e-13)

    def test_matches_dense_diagonal(self):
        rng = np.random.default_rng(25)
        a = make_general(rng, 200)
        fac = general_factor(lambda x: a @ x, lambda x: a.T @ x,
                             unit(rng, 200), unit(rng, 200), 10, EXP)
        np.testing.assert_allclose(extract_diagonal(fac), np.diag(fac.densify()), atol=1e-13)


class TestComplexScalars:
    def test_hermitian_update_complex(self):
        rng = np.random.default_rng(26)
        n = 40
        a = make_hermitian(rng, n, scale=1.5, complex_=True)
        b = unit(rng, n, complex_=True)
        fac = hermitian_update(lambda x: a @ x, b, EXP, opts=SolveOptions(tol=1e-10, max_m=50))
        assert fac.converged
        ref = dense_update_reference(a, b.reshape(-1, 1), b.reshape(-1, 1), EXP)
        assert spectral_norm(ref - fac.densify()) <= 1e-9
        np.testing.assert_allclose(extract_diagonal(fac).imag, np.diag(ref).imag, atol=1e-10)

    def test_general_update_complex(self):
        rng = np.random.default_rng(27)
        n = 35
        a = make_general(rng, n, complex_=True)
        b = unit(rng, n, complex_=True)
        c = unit(rng, n, complex_=True)
        fac = general_update(lambda x: a @ x, lambda x: a.conj().T @ x, b, c, EXP,
                             SolveOptions(tol=1e-11, max_m=45))
        ref = dense_update_reference(a, b.reshape(-1, 1), c.reshape(-1, 1), EXP)
        assert spectral_norm(ref - fac.densify()) <= 1e-9

    def test_split_hermitian_complex(self):
        rng = np.random.default_rng(28)
        w = unit(rng, 12, complex_=True)
        z = unit(rng, 12, complex_=True)
        b = np.column_stack([w, z])
        c = np.column_stack([w, -z])
        d = np.outer(w, w.conj()) - np.outer(z, z.conj())
        terms = split_hermitian(LowRankModification(b, c, hermitian_flag=True))
        recon = sum(s * np.outer(v, v.conj()) for v, s in terms)
        assert spectral_norm(recon - d) <= 1e-12


class TestOptions:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolveOptions(tol=0.0)
        with pytest.raises(ValueError):
            SolveOptions(lookahead_d=0)
        with pytest.raises(ValueError):
            SolveOptions(max_m=2, lookahead_d=2)
        with pytest.raises(ValueError):
            SolveOptions(batch=0)

    def test_modification_validation(self):
        with pytest.raises(ValueError):
            LowRankModification(np.ones((3, 2)), np.ones((3, 1)))
        with pytest.raises(ValueError):
            LowRankModification(np.ones((2, 3)), np.ones((2, 3)))
        with pytest.raises(ValueError):
            LowRankModification(np.array([[np.nan]]), np.array([[1.0]]))
