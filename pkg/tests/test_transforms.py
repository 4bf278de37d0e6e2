import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmpjfrft.errors import IllConditioned, ShapeMismatch, SingularBlock
from dmpjfrft.spectral import dft_eigenbasis, dft_matrix, diagonalize, gft_matrix, principal_power
from dmpjfrft.transforms import (
    JointOperator,
    OrderParams,
    dfrft_matrix,
    dmpjfrft_apply,
    dmpjfrft_inverse,
    dmpjfrft_operator,
    gfrft_matrix,
    jfrft_apply,
    mpdfrft_i_matrix,
    mpdfrft_ii_coeff,
    mpdfrft_ii_matrix,
    mpgfrft_i_matrix,
    mpgfrft_ii_matrix,
    parse_transform,
)

from conftest import crandn, path_bases, rel_err

TYPES = [("I", "I"), ("I", "II"), ("II", "I"), ("II", "II")]


def vec(X):
    return X.reshape(-1, order="F")


def explicit_mpgfrft_ii(basis, a):
    """sum_n C_n F^n with explicit integer matrix powers."""
    lam = basis.values
    N = lam.size
    P = np.linalg.inv(np.vander(lam, N, increasing=True))
    F = basis.matrix
    out = np.zeros((N, N), dtype=complex)
    for n in range(N):
        C = sum(P[n, j] * principal_power(lam[j], a[n]) for j in range(N))
        out += C * np.linalg.matrix_power(F, n)
    return out


def explicit_mpdfrft_ii(b):
    T = len(b)
    K = dfrft_matrix(dft_eigenbasis(T), 4.0 / T)
    return sum(mpdfrft_ii_coeff(t, b[t], T) * np.linalg.matrix_power(K, t) for t in range(T))


def sum_form_coeff(t, a, T):
    x = t - T * a / 4
    return np.mean(np.exp(2j * np.pi * np.arange(T) * x / T))


class TestOrderParams:
    def test_validation(self):
        with pytest.raises(ShapeMismatch):
            OrderParams(np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(ValueError):
            OrderParams(np.zeros((2, 2)), np.zeros(2), g_type="III")
        with pytest.raises(ValueError):
            OrderParams(np.full((1, 1), np.nan), np.zeros(1))

    def test_parse_transform(self):
        assert parse_transform("jfrft") == ("I", "I", True)
        assert parse_transform("dmpjfrft_i_ii") == ("I", "II", False)
        assert parse_transform("DMPJFRFT-II-I") == ("II", "I", False)
        with pytest.raises(ValueError):
            parse_transform("dmpjfrft_iii")


class TestGraphTransforms:
    def test_gfrft_reductions(self):
        gft = path_bases(5, 1).gft
        np.testing.assert_allclose(gfrft_matrix(gft, 0), np.eye(5), atol=1e-12)
        assert rel_err(gfrft_matrix(gft, 1), gft.matrix) <= 1e-12
        half = gfrft_matrix(gft, 0.5)
        assert rel_err(half @ half, gft.matrix) <= 1e-8

    def test_mpgfrft_i_reductions(self):
        gft = path_bases(4, 1).gft
        np.testing.assert_allclose(mpgfrft_i_matrix(gft, np.zeros(4)), np.eye(4), atol=1e-12)
        np.testing.assert_array_equal(mpgfrft_i_matrix(gft, np.full(4, 0.3)), gfrft_matrix(gft, 0.3))

    def test_mpgfrft_i_two_path_by_hand(self):
        F = gft_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
        b = diagonalize(F)
        V, Vi, lam = b.vectors, b.inverse_vectors, b.values
        expected = np.zeros((2, 2), dtype=complex)
        for i in range(2):
            for j in range(2):
                expected[i, j] = V[i, 0] * lam[0] * Vi[0, j] + V[i, 1] * 1.0 * Vi[1, j]
        np.testing.assert_allclose(mpgfrft_i_matrix(b, [1, 0]), expected, atol=1e-14)

    def test_mpgfrft_ii_matches_explicit_powers(self, rng):
        for n in (2, 3, 4, 6):
            gft = path_bases(n, 1).gft
            a = rng.uniform(-1, 1, n)
            assert rel_err(mpgfrft_ii_matrix(gft, a), explicit_mpgfrft_ii(gft, a)) <= 1e-10

    def test_mpgfrft_ii_uniform_equals_type_i(self):
        gft = path_bases(4, 1).gft
        for alpha in (0.3, -0.7, 1.0, 1.5):
            assert rel_err(mpgfrft_ii_matrix(gft, np.full(4, alpha)), gfrft_matrix(gft, alpha)) <= 1e-7
        np.testing.assert_allclose(mpgfrft_ii_matrix(gft, np.zeros(4)), np.eye(4), atol=1e-8)

    def test_mpgfrft_ii_integer_orders_pick_powers(self):
        gft = path_bases(4, 1).gft
        # a_n = n picks F^n with coefficient sum_j P[n, j] lambda_j^n
        M = mpgfrft_ii_matrix(gft, np.arange(4.0))
        assert rel_err(M, explicit_mpgfrft_ii(gft, np.arange(4.0))) <= 1e-10

    def test_mpgfrft_ii_repeated_eigenvalues(self):
        with pytest.raises(IllConditioned):
            mpgfrft_ii_matrix(diagonalize(np.eye(3)), np.zeros(3))


class TestTemporalTransforms:
    @pytest.mark.parametrize("T", [1, 2, 3, 4, 5, 8])
    def test_mpdfrft_i_reductions(self, T):
        dft = dft_eigenbasis(T)
        np.testing.assert_allclose(mpdfrft_i_matrix(dft, np.zeros(T)), np.eye(T), atol=1e-12)
        assert rel_err(mpdfrft_i_matrix(dft, np.ones(T)), dft_matrix(T)) <= 1e-9
        np.testing.assert_allclose(mpdfrft_i_matrix(dft, np.full(T, 4.0)), np.eye(T), atol=1e-9)

    def test_dfrft_additivity_and_unitarity(self):
        dft = dft_eigenbasis(7)
        a, b = dfrft_matrix(dft, 0.3), dfrft_matrix(dft, 0.45)
        assert rel_err(a @ b, dfrft_matrix(dft, 0.75)) <= 1e-12
        np.testing.assert_allclose(a @ a.conj().T, np.eye(7), atol=1e-12)

    def test_coeff_examples(self):
        assert mpdfrft_ii_coeff(0, 0.0, 4) == 1
        assert mpdfrft_ii_coeff(2, 0.0, 4) == 0
        assert mpdfrft_ii_coeff(1, 1.0, 4) == 1

    @settings(max_examples=80, deadline=None)
    @given(st.integers(1, 9), st.data())
    def test_coeff_matches_geometric_sum(self, T, data):
        t = data.draw(st.integers(0, T - 1))
        a = data.draw(st.floats(-4, 4))
        assert abs(mpdfrft_ii_coeff(t, a, T) - sum_form_coeff(t, a, T)) <= 1e-9

    def test_coeff_limit_table(self):
        for T in (2, 3, 4, 8):
            for t in range(T):
                for k in range(-8, 9):
                    a = 4.0 * (t - k) / T  # x = k exactly
                    expected = 1.0 if k % T == 0 else 0.0
                    assert mpdfrft_ii_coeff(t, a, T) == expected

    @pytest.mark.parametrize("T", [1, 2, 3, 4, 5, 8])
    def test_mpdfrft_ii_matches_explicit_powers(self, T, rng):
        b = rng.uniform(-2, 2, T)
        assert rel_err(mpdfrft_ii_matrix(b), explicit_mpdfrft_ii(b)) <= 1e-10

    @pytest.mark.parametrize("T", [1, 3, 4, 8])
    def test_mpdfrft_ii_zero_and_unit_orders(self, T):
        np.testing.assert_allclose(mpdfrft_ii_matrix(np.zeros(T)), np.eye(T), atol=1e-9)
        assert rel_err(mpdfrft_ii_matrix(np.ones(T)), dft_matrix(T)) <= 1e-8

    @pytest.mark.parametrize("T", [3, 5, 7])
    def test_mpdfrft_ii_uniform_equals_type_i_odd_length(self, T):
        dft = dft_eigenbasis(T)
        for beta in (0.5, -0.3, 1.7):
            assert rel_err(mpdfrft_ii_matrix(np.full(T, beta)), mpdfrft_i_matrix(dft, beta)) <= 1e-8

    def test_mpdfrft_ii_shape_check(self):
        with pytest.raises(ShapeMismatch):
            mpdfrft_ii_matrix(np.zeros(3), dft_eigenbasis(4))


class TestJfrft:
    def test_identity_and_jft(self, rng):
        bases = path_bases(3, 4)
        X = crandn(rng, 3, 4)
        np.testing.assert_allclose(jfrft_apply(X, bases.gft, bases.dft, 0, 0), X, atol=1e-12)
        jft = bases.gft.matrix @ X @ dft_matrix(4).T
        assert rel_err(jfrft_apply(X, bases.gft, bases.dft, 1, 1), jft) <= 1e-9

    def test_kronecker_identity(self, rng):
        bases = path_bases(3, 4)
        X = crandn(rng, 3, 4)
        Fa, Db = gfrft_matrix(bases.gft, 0.4), dfrft_matrix(bases.dft, -0.7)
        out = jfrft_apply(X, bases.gft, bases.dft, 0.4, -0.7)
        assert rel_err(vec(out), np.kron(Db, Fa) @ vec(X)) <= 1e-10

    def test_shape_mismatch(self):
        bases = path_bases(3, 4)
        with pytest.raises(ShapeMismatch):
            jfrft_apply(np.zeros((4, 4)), bases.gft, bases.dft, 0, 0)


def random_params(rng, n, t, g="I", d="I", scale=1.0):
    return OrderParams(rng.uniform(-scale, scale, (n, t)), rng.uniform(-scale, scale, t), g, d)


def single_graph(gft, a, g):
    return mpgfrft_i_matrix(gft, a) if g == "I" else mpgfrft_ii_matrix(gft, a)


def single_time(dft, b, d):
    return mpdfrft_i_matrix(dft, b) if d == "I" else mpdfrft_ii_matrix(b, dft)


class TestJoint:
    @pytest.mark.parametrize("g,d", TYPES)
    def test_column_definition(self, g, d, rng):
        bases = path_bases(4, 5)
        p = random_params(rng, 4, 5, g, d)
        X = crandn(rng, 4, 5)
        cols = np.column_stack([single_graph(bases.gft, p.graph_orders[:, i], g) @ X[:, i] for i in range(5)])
        expected = cols @ single_time(bases.dft, p.time_orders, d).T
        assert rel_err(dmpjfrft_apply(X, p, bases), expected) <= 1e-10

    @pytest.mark.parametrize("g,d", TYPES)
    def test_operator_matches_columns(self, g, d, rng):
        bases = path_bases(3, 4)
        p = random_params(rng, 3, 4, g, d)
        X = crandn(rng, 3, 4)
        op = dmpjfrft_operator(p, bases)
        assert rel_err(op.apply(vec(X)), vec(dmpjfrft_apply(X, p, bases))) <= 1e-10
        assert rel_err(op.materialize() @ vec(X), op.apply(vec(X))) <= 1e-10

    def test_materialized_structure(self, rng):
        bases = path_bases(3, 4)
        op = dmpjfrft_operator(random_params(rng, 3, 4), bases)
        blk = op.blk_graph
        mask = np.kron(np.eye(4), np.ones((3, 3)))
        assert np.all(blk[mask == 0] == 0)
        assert rel_err(op.materialize(), np.kron(op.time_factor, np.eye(3)) @ blk) <= 1e-10

    @pytest.mark.parametrize("g,d", TYPES)
    def test_zero_params_identity(self, g, d):
        bases = path_bases(3, 4)
        op = dmpjfrft_operator(OrderParams.constant(3, 4, 0, 0, g, d), bases)
        np.testing.assert_allclose(op.materialize(), np.eye(12), atol=1e-10)

    def test_unit_params_jft(self, rng):
        bases = path_bases(4, 3)
        X = crandn(rng, 4, 3)
        out = dmpjfrft_apply(X, OrderParams.constant(4, 3, 1, 1), bases)
        assert rel_err(out, bases.gft.matrix @ X @ dft_matrix(3).T) <= 1e-9

    def test_identical_columns_reduce(self, rng):
        bases = path_bases(4, 3)
        X = crandn(rng, 4, 3)
        a = rng.uniform(-1, 1, 4)
        b = rng.uniform(-1, 1, 3)
        out = dmpjfrft_apply(X, OrderParams(np.tile(a[:, None], 3), b), bases)
        expected = mpgfrft_i_matrix(bases.gft, a) @ X @ mpdfrft_i_matrix(bases.dft, b).T
        assert rel_err(out, expected) <= 1e-10
        out = dmpjfrft_apply(X, OrderParams.constant(4, 3, 0.3, 0.8), bases)
        assert rel_err(out, jfrft_apply(X, bases.gft, bases.dft, 0.3, 0.8)) <= 1e-10

    def test_single_time_step(self, rng):
        bases = path_bases(3, 1)
        p = OrderParams(rng.uniform(-1, 1, (3, 1)), [0.7])
        op = dmpjfrft_operator(p, bases)
        assert op.time_factor.shape == (1, 1)
        expected = mpdfrft_i_matrix(bases.dft, [0.7])[0, 0] * mpgfrft_i_matrix(bases.gft, p.graph_orders[:, 0])
        assert rel_err(op.materialize(), expected) <= 1e-12

    def test_inverse_round_trip_and_negation(self, rng):
        for n, t in ((3, 4), (8, 8), (5, 2)):
            bases = path_bases(n, t)
            p = random_params(rng, n, t)
            op = dmpjfrft_operator(p, bases)
            inv = dmpjfrft_inverse(op)
            x = vec(crandn(rng, n, t))
            assert rel_err(inv.apply(op.apply(x)), x) <= 1e-8
            # each inverse factor is the negated-order factor; the factor order is reversed
            neg = dmpjfrft_operator(p.negated(), bases)
            assert rel_err(inv.graph_blocks, neg.graph_blocks) <= 1e-8
            assert rel_err(inv.time_factor, neg.time_factor) <= 1e-8
            assert inv.inverse and not neg.inverse

    def test_negated_orders_time_invariant(self, rng):
        # with identical columns the block-diagonal factor commutes with D kron I
        bases = path_bases(4, 5)
        p = OrderParams(np.tile(rng.uniform(-1, 1, (4, 1)), 5), rng.uniform(-1, 1, 5))
        inv = dmpjfrft_inverse(dmpjfrft_operator(p, bases))
        neg = dmpjfrft_operator(p.negated(), bases)
        assert rel_err(inv.materialize(), neg.materialize()) <= 1e-8

    def test_negated_orders_differ_for_time_varying_orders(self, rng):
        bases = path_bases(3, 4)
        p = random_params(rng, 3, 4)
        inv = dmpjfrft_inverse(dmpjfrft_operator(p, bases))
        neg = dmpjfrft_operator(p.negated(), bases)
        assert rel_err(inv.materialize(), neg.materialize()) > 1e-3

    @pytest.mark.parametrize("g,d", TYPES)
    def test_inverse_all_types(self, g, d, rng):
        bases = path_bases(4, 3)
        op = dmpjfrft_operator(random_params(rng, 4, 3, g, d), bases)
        inv = dmpjfrft_inverse(op)
        np.testing.assert_allclose(inv.materialize() @ op.materialize(), np.eye(12), atol=1e-8)

    def test_identity_inverse(self):
        bases = path_bases(3, 3)
        inv = dmpjfrft_inverse(dmpjfrft_operator(OrderParams.constant(3, 3), bases))
        np.testing.assert_allclose(inv.materialize(), np.eye(9), atol=1e-12)

    def test_singular_block(self):
        op = JointOperator(np.stack([np.eye(2), np.zeros((2, 2))]), np.eye(2))
        with pytest.raises(SingularBlock):
            dmpjfrft_inverse(op)

    def test_additivity(self, rng):
        bases = path_bases(5, 4)
        p1 = random_params(rng, 5, 4)
        a2 = rng.uniform(-1, 1, 5)
        p2 = OrderParams(np.tile(a2[:, None], 4), rng.uniform(-1, 1, 4))
        X = crandn(rng, 5, 4)
        two = dmpjfrft_apply(dmpjfrft_apply(X, p1, bases), p2, bases)
        summed = OrderParams(p1.graph_orders + p2.graph_orders, p1.time_orders + p2.time_orders)
        assert rel_err(two, dmpjfrft_apply(X, summed, bases)) <= 1e-8

    def test_commutativity(self, rng):
        bases = path_bases(5, 4)
        p1 = OrderParams(np.tile(rng.uniform(-1, 1, (5, 1)), 4), rng.uniform(-1, 1, 4))
        p2 = OrderParams(np.tile(rng.uniform(-1, 1, (5, 1)), 4), rng.uniform(-1, 1, 4))
        X = crandn(rng, 5, 4)
        ab = dmpjfrft_apply(dmpjfrft_apply(X, p1, bases), p2, bases)
        ba = dmpjfrft_apply(dmpjfrft_apply(X, p2, bases), p1, bases)
        assert rel_err(ab, ba) <= 1e-8

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from(TYPES), st.integers(0, 10_000),
           st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
           st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
    def test_linearity(self, types, seed, alpha, beta):
        rng = np.random.default_rng(seed)
        bases = path_bases(4, 3)
        p = random_params(rng, 4, 3, *types)
        X, Y = crandn(rng, 4, 3), crandn(rng, 4, 3)
        lhs = dmpjfrft_apply(alpha * X + beta * Y, p, bases)
        rhs = alpha * dmpjfrft_apply(X, p, bases) + beta * dmpjfrft_apply(Y, p, bases)
        assert np.linalg.norm(lhs - rhs) <= 1e-10 * max(1.0, np.linalg.norm(rhs))

    def test_apply_matrix_batches(self, rng):
        bases = path_bases(3, 4)
        op = dmpjfrft_operator(random_params(rng, 3, 4), bases)
        stack = crandn(rng, 5, 3, 4)
        out = op.apply_matrix(stack)
        for s, o in zip(stack, out):
            np.testing.assert_allclose(o, op.apply_matrix(s), atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(ShapeMismatch):
            dmpjfrft_apply(np.zeros((3, 4)), OrderParams.constant(3, 3), path_bases(3, 4))

    def test_json_export(self, rng):
        bases = path_bases(3, 2)
        op = dmpjfrft_operator(random_params(rng, 3, 2), bases)
        d = json.loads(json.dumps(op.to_dict()))
        blocks = np.asarray(d["graph_blocks"])
        np.testing.assert_array_equal(blocks[..., 0] + 1j * blocks[..., 1], op.graph_blocks)
        assert d["n"] == 3 and d["t"] == 2 and d["inverse"] is False
