import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from cvqkd.core import RngStream
from cvqkd.reconciliation import (
    AboveCapacityWarning,
    AlistError,
    ParityCheckMatrix,
    beta_efficiency,
    bits_to_u,
    capacity,
    conj,
    ldpc_decode,
    left_matrix,
    load_shipped_code,
    md_demap,
    md_map,
    multiply,
    run_reconciliation,
)
from oracles import brute_force_syndrome_decode, hamilton

dims = st.sampled_from([1, 2, 4, 8])
finite = st.floats(-10, 10, allow_nan=False)


def _vec(d):
    return arrays(np.float64, d, elements=finite)


def _small_code():
    h = np.array([
        [1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0],
        [0, 1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0, 0],
        [0, 0, 1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 0],
        [1, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0, 1],
        [0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 0, 0, 1, 1],
        [1, 0, 1, 0, 0, 0, 0, 1, 0, 1, 1, 1, 0, 0],
    ])
    return ParityCheckMatrix.from_dense(h)


class TestAlgebra:
    @given(dims.flatmap(lambda d: st.tuples(_vec(d), _vec(d))))
    def test_norm_multiplicative(self, ab):
        a, b = ab
        lhs = np.linalg.norm(multiply(a, b))
        assert lhs == pytest.approx(np.linalg.norm(a) * np.linalg.norm(b), rel=1e-12, abs=1e-12)

    @given(dims.flatmap(lambda d: st.tuples(_vec(d), _vec(d))))
    def test_conjugate_reverses_product(self, ab):
        a, b = ab
        assert np.allclose(conj(multiply(a, b)), multiply(conj(b), conj(a)), atol=1e-10)

    @given(dims.flatmap(lambda d: st.tuples(_vec(d), _vec(d))))
    def test_alternative(self, ab):
        a, b = ab
        assert np.allclose(multiply(a, multiply(a, b)), multiply(multiply(a, a), b), atol=1e-9)

    @given(_vec(4), _vec(4))
    def test_quaternions_match_hamilton(self, a, b):
        assert np.allclose(multiply(a, b), hamilton(a, b), atol=1e-12)

    @given(_vec(2), _vec(2))
    def test_complex(self, a, b):
        z = complex(*a) * complex(*b)
        assert np.allclose(multiply(a, b), [z.real, z.imag], atol=1e-12)

    def test_octonions_not_associative(self):
        e = np.eye(8)
        assert not np.allclose(multiply(multiply(e[1], e[2]), e[4]), multiply(e[1], multiply(e[2], e[4])))

    @pytest.mark.parametrize("d", [1, 2, 4, 8])
    def test_unit_left_multiplication_is_orthogonal(self, d):
        m = RngStream(d).normal(1.0, (500, d))
        m /= np.linalg.norm(m, axis=1, keepdims=True)
        mat = left_matrix(m)
        eye = np.broadcast_to(np.eye(d), mat.shape)
        assert np.max(np.abs(mat @ np.swapaxes(mat, -1, -2) - eye)) < 1e-12
        z = RngStream(d + 10).normal(1.0, (500, d))
        assert np.max(np.abs(np.linalg.norm(multiply(m, z), axis=1) - np.linalg.norm(z, axis=1))) < 1e-12
        assert np.allclose(np.einsum("nij,nj->ni", mat, z), multiply(m, z), atol=1e-12)


class TestMapping:
    @pytest.mark.parametrize("d", [1, 2, 4, 8])
    def test_map_rotates_onto_u(self, d):
        x = RngStream(20 + d).normal(1.0, (300, d))
        bits = RngStream(30 + d).integers(0, 2, 300 * d)
        u = bits_to_u(bits, d)
        m = md_map(x, u)
        back = multiply(m, x / np.linalg.norm(x, axis=1, keepdims=True))
        assert np.max(np.abs(back - u)) < 1e-12
        assert np.allclose(np.linalg.norm(m, axis=1), 1.0, atol=1e-12)
        # noiseless demap gives the right signs
        llr = md_demap(x, m, 1.0)
        assert np.array_equal((llr.reshape(-1) < 0).astype(int), bits)

    def test_map_checks(self):
        with pytest.raises(ValueError):
            md_map(np.zeros((1, 4)), np.ones((1, 4)) / 2)
        with pytest.raises(ValueError):
            bits_to_u(np.zeros(6), 3)
        with pytest.raises(ValueError):
            md_demap(np.ones((1, 2)), np.ones((1, 2)), 0.0)

    @pytest.mark.parametrize("d", [1, 8])
    def test_virtual_channel_is_biawgn(self, d):
        # with known amplitude, LLRs given bit 0 are N(mu, 2 mu), mu = 2 A^2 / (d s2)
        n, amp, s2 = 4000, 2.0, 0.7
        g = RngStream(40 + d)
        x = g.normal(1.0, (n, d))
        x *= amp / np.linalg.norm(x, axis=1, keepdims=True)
        y = x + g.normal(math.sqrt(s2), (n, d))
        bits = np.zeros(n * d, dtype=int)
        m = md_map(x, bits_to_u(bits, d))
        llr = md_demap(y, m, s2, amplitude=np.full(n, amp)).reshape(-1)
        mu = 2 * amp**2 / (d * s2)
        assert stats.kstest(llr, "norm", args=(mu, math.sqrt(2 * mu))).pvalue > 1e-3


class TestAlist:
    def test_roundtrip(self, tmp_path):
        h = load_shipped_code()
        assert (h.n, h.m) == (1024, 512)
        assert h.rate == 0.5
        p = tmp_path / "c.alist"
        h.to_alist(p)
        h2 = ParityCheckMatrix.from_alist(str(p))
        assert np.array_equal(h2.to_dense(), h.to_dense())
        assert np.all(h.to_dense().sum(0) == 3) and np.all(h.to_dense().sum(1) == 6)

    @pytest.mark.parametrize(
        "text",
        [
            "3 2\n2 3\n1 1 1\n3\n1\n2\n2\n1 2 3\n0 0 0\n",  # row degree count
            "3 2\n2 3\n1 1 1\n2 1\n1\n2\n1\n1 2\n2\n",  # lists disagree
            "3 2\n2 3\n1 1 1\n2 1\n1\n1\n9\n1 2\n3\n",  # index out of range
            "3 2\n1 x\n",  # non-integer
            "3 2\n2 3\n1 1 1\n2 2\n1\n1\n2\n1 2\n3 0\n",  # edge counts disagree
            "3\n",  # header
        ],
    )
    def test_rejects_malformed(self, text):
        with pytest.raises(AlistError):
            ParityCheckMatrix.from_alist(text)

    def test_accepts_valid(self):
        h = ParityCheckMatrix.from_alist("3 2\n2 2\n1 2 1\n2 2\n1\n1 2\n2\n1 2\n2 3\n")
        assert h.to_dense().tolist() == [[1, 1, 0], [0, 1, 1]]

    def test_missing_file(self):
        with pytest.raises(FileNotFoundError):
            ParityCheckMatrix.from_alist("/nonexistent/file.alist")

    def test_matrix_validation(self):
        with pytest.raises(ValueError):
            ParityCheckMatrix.from_dense(np.array([[1, 0], [1, 0]]))
        with pytest.raises(ValueError):
            ParityCheckMatrix(2, 1, np.array([0, 0]), np.array([1, 1]))


class TestDecoder:
    def test_noiseless_shipped_code_one_iteration(self):
        h = load_shipped_code()
        bits = RngStream(50).integers(0, 2, h.n).astype(np.uint8)
        llr = np.where(bits == 0, 50.0, -50.0)
        res = ldpc_decode(llr, h, syndrome=h.syndrome(bits))
        assert res.converged and res.iterations == 1
        assert np.array_equal(res.bits, bits)
        res0 = ldpc_decode(np.full(h.n, 10.0), h)
        assert res0.converged and res0.iterations == 1 and not res0.bits.any()

    def test_matches_exhaustive_ml(self):
        h = _small_code()
        dense = h.to_dense()
        g = RngStream(51)
        agree, trials = 0, 60
        for _ in range(trials):
            bits = g.integers(0, 2, h.n).astype(np.uint8)
            s2 = 0.5
            y = (1 - 2.0 * bits) + g.normal(math.sqrt(s2), h.n)
            llr = 2 * y / s2
            syn = h.syndrome(bits)
            res = ldpc_decode(llr, h, 50, syndrome=syn)
            ml = brute_force_syndrome_decode(llr, dense, syn)
            if res.converged:
                assert np.array_equal(h.syndrome(res.bits), syn)
                # the decoded word can never beat the ML metric
                metric = lambda b: float(np.sum(np.where(b == 0, llr, -llr)))  # noqa: E731
                assert metric(res.bits) <= metric(ml) + 1e-9
            agree += np.array_equal(res.bits, ml)
        assert agree >= 0.9 * trials

    def test_success_means_zero_syndrome_by_matvec(self):
        h = load_shipped_code()
        dense = h.to_dense().astype(np.int64)
        g = RngStream(52)
        for _ in range(5):
            bits = g.integers(0, 2, h.n).astype(np.uint8)
            llr = 4 * (1 - 2.0 * bits) + g.normal(2.0, h.n)
            res = ldpc_decode(llr, h, 100)
            if res.converged:
                assert not np.any(dense @ res.bits.astype(np.int64) % 2)

    def test_input_checks(self):
        h = _small_code()
        with pytest.raises(ValueError):
            ldpc_decode(np.zeros(3), h)
        with pytest.raises(ValueError):
            ldpc_decode(np.zeros(h.n), h, max_iters=0)
        with pytest.raises(ValueError):
            ldpc_decode(np.zeros(h.n), h, syndrome=np.zeros(2))


class TestReconciliation:
    def test_beta_reference(self):
        beta = beta_efficiency(0.02, 0.0283)
        assert math.floor(beta * 1000) / 1000 == 0.993
        assert beta == pytest.approx(0.993512, abs=1e-6)
        assert capacity(1.0) == 0.5
        with pytest.warns(AboveCapacityWarning):
            beta_efficiency(0.5, 0.5)
        with pytest.raises(ValueError):
            beta_efficiency(0.0, 1.0)
        with pytest.raises(ValueError):
            beta_efficiency(0.5, 0.0)

    @given(st.floats(0.01, 0.99), st.floats(1e-3, 1e3))
    def test_beta_identity(self, rate, snr):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            assert beta_efficiency(rate, snr) * capacity(snr) == pytest.approx(rate, rel=1e-14)

    def _streams(self, snr, n, seed=0):
        g = RngStream(seed)
        bob = g.complex_normal(1.0, n)
        alice = bob + g.complex_normal(1.0 / snr, n)
        return alice, bob

    @pytest.mark.parametrize("d", [1, 2, 4, 8])
    def test_threshold_behaviour(self, d):
        h = load_shipped_code()
        a, b = self._streams(8.0, 8 * h.n // 2, seed=d)
        good = run_reconciliation(a, b, h, d, RngStream(60 + d))
        assert good.n_blocks == 8
        assert good.fer == 0.0
        assert good.net_bits == 8 * (h.n - h.m)
        a, b = self._streams(0.3, 4 * h.n // 2, seed=d)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            bad = run_reconciliation(a, b, h, d, RngStream(70 + d), max_iters=30)
        assert bad.fer == 1.0
        assert bad.net_bits == 0

    def test_higher_dimension_helps(self):
        h = load_shipped_code()
        a, b = self._streams(2.0, 8 * h.n // 2, seed=3)
        fer = {d: run_reconciliation(a, b, h, d, RngStream(90), max_iters=100).fer for d in (1, 8)}
        assert fer[8] < fer[1]

    def test_converged_blocks_are_exact(self):
        h = load_shipped_code()
        a, b = self._streams(1.6, 30 * h.n // 2, seed=9)
        res = run_reconciliation(a, b, h, 8, RngStream(80))
        assert 0 < res.fer < 1
        assert np.all(res.exact[res.converged])
        assert res.beta == pytest.approx(0.5 / capacity(res.snr))
        assert res.snr == pytest.approx(1 / (1 + 1 / 1.6) * 1.6 * (1 + 1 / 1.6), rel=0.1)

    def test_input_checks(self):
        h = load_shipped_code()
        with pytest.raises(ValueError):
            run_reconciliation(np.ones(10), np.ones(12), h, 8, RngStream(0))
        with pytest.raises(ValueError):
            run_reconciliation(np.ones(10), np.ones(10), h, 3, RngStream(0))
