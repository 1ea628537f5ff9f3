import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectrace.estimators import (
    METHODS,
    EstimatorConfig,
    SpectrumEstimate,
    cluster_roots,
    companion_roots,
    continuous_log_map,
    esprit,
    estimate,
    matrix_pencil,
    pinv_thresholded,
    prony,
    solve_thresholded,
)
from spectrace.hankel import build_hankel
from spectrace.metrics import hausdorff
from spectrace.recoverability import recoverable_set_numeric
from spectrace.systems import AffineSystem, ObservedSeries, observe, simulate_discrete

T = np.arange(12)
SCALAR = ObservedSeries((1,), 0.5**T)
TWO_NODE = ObservedSeries((1,), 2 * 0.5**T[:8] + 3 * (-0.2) ** T[:8])


def _sorted(z):
    z = np.asarray(z, dtype=complex)
    return z[np.lexsort((z.imag, z.real))]


class TestProny:
    @pytest.mark.parametrize("variant", ["LS", "TLS"])
    def test_scalar(self, variant):
        est = prony(SCALAR, 1, variant)
        np.testing.assert_allclose(est.eigenvalues, [0.5], atol=1e-14)
        assert est.r_used == 1

    @pytest.mark.parametrize("variant", ["LS", "TLS"])
    def test_two_node(self, variant):
        est = prony(TWO_NODE, 2, variant)
        np.testing.assert_allclose(_sorted(est.eigenvalues), [-0.2, 0.5], atol=1e-10)

    def test_method_names(self):
        assert prony(SCALAR, 1, "ls").method == "prony_ls"
        assert prony(SCALAR, 1, "tls").method == "prony_tls"

    def test_rank_deficient_flagged(self):
        # r = 2 on a rank-1 series leaves H0 singular
        est = prony(SCALAR, 2, "LS")
        assert est.diagnostics["ill_posed"]

    def test_tls_fallback(self):
        # H = [[0, 0], [0, 1]]: the null vector e_1 has a zero last entry
        series = ObservedSeries((1,), [0.0, 0.0, 1.0])
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            est = prony(series, 1, "TLS")
        assert est.diagnostics.get("tls_fallback")
        assert any(issubclass(w.category, RuntimeWarning) for w in caught)

    def test_bad_variant(self):
        with pytest.raises(ValueError):
            prony(SCALAR, 1, "QR")

    def test_too_short(self):
        with pytest.raises(ValueError):
            prony(ObservedSeries((1,), [1.0, 0.5]), 2)


class TestMatrixPencil:
    @pytest.mark.parametrize("variant", ["LS", "TLS", "SVD"])
    def test_scalar_prunes_zeros(self, variant):
        est = matrix_pencil(SCALAR, 1, L=3, variant=variant)
        np.testing.assert_allclose(est.eigenvalues, [0.5], atol=1e-12)
        assert est.diagnostics["pencil_eigenvalues"] == 3
        assert est.diagnostics["pruned"] == 2

    @pytest.mark.parametrize("variant", ["LS", "TLS", "SVD"])
    def test_two_node(self, variant):
        est = matrix_pencil(TWO_NODE, 2, L=3, variant=variant)
        np.testing.assert_allclose(_sorted(est.eigenvalues), [-0.2, 0.5], atol=1e-10)
        assert est.diagnostics["pruned"] == 1

    def test_ls_zero_count(self, rng):
        # L - r eigenvalues of C are (numerically) zero
        lam = np.array([0.9, 0.6 + 0.3j, 0.6 - 0.3j, -0.5])
        amp = rng.standard_normal(4) + 1
        Y = (amp * lam ** np.arange(30)[:, None]).sum(axis=1)
        series = ObservedSeries((1,), Y)
        pair = build_hankel(series, 10)
        C, _, _ = solve_thresholded(pair.H0, pair.H1, 1e-12)
        z = np.linalg.eigvals(C)
        assert np.count_nonzero(np.abs(z) <= 1e-8 * np.abs(z).max()) == 6

    def test_L_range(self):
        with pytest.raises(ValueError):
            matrix_pencil(SCALAR, 2, L=11)
        with pytest.raises(ValueError):
            matrix_pencil(SCALAR, 1, variant="QZ")

    def test_short_reported(self):
        # demanding r = 3 from a rank-1 series leaves fewer survivors than r
        est = matrix_pencil(SCALAR, 3, L=4, variant="LS")
        assert est.diagnostics.get("short", 0) >= 1


class TestEsprit:
    def test_scalar(self):
        np.testing.assert_allclose(esprit(SCALAR, 1).eigenvalues, [0.5], atol=1e-14)

    def test_two_node(self):
        est = esprit(TWO_NODE, 2, L=3)
        np.testing.assert_allclose(_sorted(est.eigenvalues), [-0.2, 0.5], atol=1e-9)

    def test_block_shift_multi_index(self):
        A = np.diag([0.8, -0.4, 0.3])
        sys_ = AffineSystem(A, [1, 1, 1], np.zeros(3))
        series = observe(simulate_discrete(sys_, 12), [1, 2, 3])
        est = esprit(series, 3, L=4)
        np.testing.assert_allclose(_sorted(est.eigenvalues), [-0.4, 0.3, 0.8], atol=1e-10)

    def test_too_few_rows(self):
        with pytest.raises(ValueError):
            esprit(ObservedSeries((1,), 0.5 ** np.arange(4)), 2, L=2)


class TestCompanion:
    def test_examples(self):
        np.testing.assert_allclose(_sorted(companion_roots([-1, 0])), [-1, 1], atol=1e-15)
        np.testing.assert_allclose(companion_roots([-0.3]), [0.3])

    def test_multiple_roots_cluster(self):
        coeffs = np.poly([0.3] * 3 + [0.5] * 2)[::-1][:-1]
        centers, counts = cluster_roots(companion_roots(coeffs), radius=1e-3)
        order = np.argsort(centers.real)
        np.testing.assert_allclose(centers[order], [0.3, 0.5], atol=1e-4)
        np.testing.assert_array_equal(counts[order], [3, 2])

    @given(st.integers(1, 20), st.integers(0, 2**32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_reconstructs_polynomial(self, n, seed):
        rng = np.random.default_rng(seed)
        roots = rng.uniform(0, 0.95, n) * np.exp(2j * np.pi * rng.random(n))
        a = np.poly(roots)[::-1][:-1]
        back = np.poly(companion_roots(a))[::-1][:-1]
        assert np.linalg.norm(back - a) <= 1e-8 * max(1.0, np.linalg.norm(a))

    def test_degree_zero(self):
        with pytest.raises(ValueError):
            companion_roots([])


class TestPinv:
    def test_identity(self):
        np.testing.assert_array_equal(pinv_thresholded(np.eye(3)), np.eye(3))

    def test_singular_diag(self):
        np.testing.assert_allclose(pinv_thresholded(np.diag([2.0, 0.0])), np.diag([0.5, 0.0]))

    def test_full_rank_left_inverse(self, rng):
        Mx = rng.standard_normal((5, 3))
        np.testing.assert_allclose(pinv_thresholded(Mx) @ Mx, np.eye(3), atol=1e-12)

    def test_penrose_identities(self, rng):
        Mx = rng.standard_normal((6, 2)) @ rng.standard_normal((2, 4))
        P = pinv_thresholded(Mx, 1e-10)
        np.testing.assert_allclose(Mx @ P @ Mx, Mx, atol=1e-10)
        np.testing.assert_allclose(P @ Mx @ P, P, atol=1e-10)
        np.testing.assert_allclose((Mx @ P).conj().T, Mx @ P, atol=1e-10)

    def test_solve_matches_pinv(self, rng):
        Mx = rng.standard_normal((7, 4))
        B = rng.standard_normal((7, 2))
        X, k, _ = solve_thresholded(Mx, B)
        assert k == 4
        np.testing.assert_allclose(X, np.linalg.pinv(Mx) @ B, atol=1e-12)


class TestLogMap:
    def _est(self, z):
        return SpectrumEstimate(np.array(z, dtype=complex), "mp_svd", len(z))

    def test_examples(self):
        out = continuous_log_map(self._est([np.exp(-0.5), 1.0]), 1.0)
        np.testing.assert_allclose(out.eigenvalues, [-0.5, 0.0], atol=1e-15)

    def test_dt_scaling(self):
        out = continuous_log_map(self._est([np.exp(-0.5 * 0.1)]), 0.1)
        np.testing.assert_allclose(out.eigenvalues, [-0.5])

    def test_branch_cut(self):
        out = continuous_log_map(self._est([-0.5]), 1.0)
        assert out.diagnostics["log_map"]["ambiguous"] == [{"re": -0.5, "im": 0.0}]
        np.testing.assert_allclose(out.eigenvalues, [-0.5])

    def test_zero_dropped(self):
        out = continuous_log_map(self._est([0.0, np.exp(-1)]), 1.0)
        assert out.diagnostics["log_map"]["dropped_zero"] == 1
        np.testing.assert_allclose(out.eigenvalues, [-1.0])


class TestConfig:
    @pytest.mark.parametrize("kw", [{"eps_rel": 0}, {"eta_rel": 1.0}, {"pinv_rel": -1}, {"L": 0}, {"r": 0}])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            EstimatorConfig(**kw)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            estimate(SCALAR, "music")

    @pytest.mark.parametrize("method", METHODS)
    def test_auto_rank(self, method):
        est = estimate(TWO_NODE if method != "esprit" else ObservedSeries((1,), 2 * 0.5**T + 3 * (-0.2) ** T), method)
        assert est.r_used == 2
        assert est.diagnostics["rank"]["chosen"] == 2
        np.testing.assert_allclose(_sorted(est.eigenvalues), [-0.2, 0.5], atol=1e-8)


def _random_instance(seed):
    """Diagonalizable A (d <= 8) with pairwise eigenvalue gaps >= 0.05 and |lambda| <= 1."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 9))
    lam = []
    while len(lam) < d:
        z = rng.uniform(0.2, 1.0) * np.exp(2j * np.pi * rng.random())
        if all(abs(z - w) >= 0.05 for w in lam):
            lam.append(z)
    V = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    A = V @ np.diag(lam) @ np.linalg.inv(V)
    b = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    k = int(rng.integers(1, d + 1))
    omega = sorted(int(i) for i in rng.choice(np.arange(1, d + 1), size=k, replace=False))
    return A, b, omega


@pytest.mark.parametrize("seed", range(12))
def test_oracle_agreement(seed):
    A, b, omega = _random_instance(seed)
    rep = recoverable_set_numeric(A, b, omega)
    r = rep.total_degree
    series = observe(simulate_discrete(AffineSystem(A, b, np.zeros(len(b))), 4 * r + 4), omega)
    ests = {
        "prony_ls": prony(series, r, "LS"),
        "mp_svd": matrix_pencil(series, r, variant="SVD"),
        "esprit": esprit(series, r),
    }
    ref = rep.reference_spectrum()
    for name, est in ests.items():
        assert hausdorff(ref, est.eigenvalues) <= 1e-6, name
    # cross-consistency
    assert hausdorff(ests["prony_ls"].eigenvalues, ests["mp_svd"].eigenvalues) <= 1e-6
    assert hausdorff(ests["mp_svd"].eigenvalues, ests["esprit"].eigenvalues) <= 1e-6
