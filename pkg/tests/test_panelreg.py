import numpy as np
import pandas as pd
import pytest

from finlex.panelreg import (
    RankDeficientError,
    cluster_vcov,
    fit_panel,
    fit_twoway,
    ols_fit,
    psd_repair,
    report,
    results_json,
    standardized_coefficient,
    stars,
    twoway_vcov,
)


def dense_cluster_vcov(X, u, ids):
    """Oracle: sandwich with the meat written as X' (uu' * same-cluster) X."""
    ids = np.asarray(ids)
    n, k = X.shape
    S = (ids[:, None] == ids[None, :]).astype(float)
    G = len(np.unique(ids))
    B = np.linalg.inv(X.T @ X)
    c = G / (G - 1) * (n - 1) / (n - k)
    return c * B @ X.T @ (np.outer(u, u) * S) @ X @ B


def random_panel(rng, n_firms=5, n_years=4, k=3):
    firm = np.repeat(np.arange(n_firms), n_years)
    year = np.tile(np.arange(n_years), n_firms)
    n = len(firm)
    X = np.column_stack([np.ones(n), rng.normal(size=(n, k - 1))])
    y = X @ rng.normal(size=k) + rng.normal(size=n) + rng.normal(size=n_firms)[firm]
    return X, y, firm, year


def test_trivial_fits():
    x = np.arange(1.0, 11.0)
    X = np.column_stack([np.ones(10), x])
    fit = ols_fit(X, 2 * x)
    assert fit.beta[1] == pytest.approx(2.0, abs=1e-12) and fit.r2 == pytest.approx(100.0)
    xc = x - x.mean()
    y = np.where(np.arange(10) % 2, 1.0, -1.0)
    y = y - (y @ xc) / (xc @ xc) * xc
    fit = ols_fit(X, y)
    assert abs(fit.r2) < 1e-10 and abs(fit.beta[1]) < 1e-12


def test_normal_equation_oracle():
    rng = np.random.default_rng(0)
    X, y = rng.normal(size=(50, 4)), rng.normal(size=50)
    np.testing.assert_allclose(ols_fit(X, y).beta, np.linalg.inv(X.T @ X) @ X.T @ y, rtol=0, atol=1e-8)


def test_rank_and_shape_errors():
    X = np.column_stack([np.ones(10), np.arange(10.0), 2 * np.arange(10.0)])
    with pytest.raises(RankDeficientError):
        ols_fit(X, np.arange(10.0))
    with pytest.raises(ValueError):
        ols_fit(np.ones((2, 2)), np.ones(2))
    with pytest.raises(ValueError):
        ols_fit(np.column_stack([np.ones(5), [0, 1, np.nan, 3, 4]]), np.ones(5))


def test_singleton_clusters_hc1():
    rng = np.random.default_rng(1)
    X, y = np.column_stack([np.ones(40), rng.normal(size=(40, 2))]), rng.normal(size=40) * np.linspace(0.5, 3, 40)
    fit = ols_fit(X, y)
    u = fit.residuals
    B = np.linalg.inv(X.T @ X)
    hc1 = 40 / 37 * B @ X.T @ np.diag(u ** 2) @ X @ B
    np.testing.assert_allclose(cluster_vcov(X, u, np.arange(40)), hc1, rtol=0, atol=1e-12 * np.abs(hc1).max())


def test_six_observation_hand_example():
    X = np.array([[1, 0.5], [1, -1.0], [1, 2.0], [1, 0.0], [1, 1.5], [1, -0.5]])
    y = np.array([1.0, -0.5, 2.5, 0.3, 1.1, -0.2])
    g = ["a", "a", "b", "b", "c", "c"]
    u = ols_fit(X, y).residuals
    np.testing.assert_allclose(cluster_vcov(X, u, g), dense_cluster_vcov(X, u, g), rtol=1e-12)


def test_classical_se_monte_carlo():
    rng = np.random.default_rng(42)
    n = 4000
    X = np.column_stack([np.ones(n), rng.normal(size=n)])
    y = X @ [1.0, 0.5] + rng.normal(size=n)
    fit = ols_fit(X, y)
    s2 = fit.residuals @ fit.residuals / (n - 2)
    classical = np.sqrt(np.diag(s2 * np.linalg.inv(X.T @ X)))
    clustered = np.sqrt(np.diag(cluster_vcov(X, fit.residuals, np.arange(n))))
    np.testing.assert_allclose(clustered, classical, rtol=0.1)


def test_correction_flag():
    rng = np.random.default_rng(2)
    X, y, firm, year = random_panel(rng)
    u = ols_fit(X, y).residuals
    n, k, G = 20, 3, 5
    np.testing.assert_allclose(cluster_vcov(X, u, firm), cluster_vcov(X, u, firm, correction=False)
                               * G / (G - 1) * (n - 1) / (n - k), rtol=1e-12)


def test_single_cluster_error():
    X = np.column_stack([np.ones(5), np.arange(5.0)])
    with pytest.raises(ValueError):
        cluster_vcov(X, np.ones(5), [1] * 5)


@pytest.mark.parametrize("seed", range(10))
def test_twoway_matches_dense_oracle(seed):
    rng = np.random.default_rng(seed)
    X, y, firm, year = random_panel(rng, 6, 5)
    u = ols_fit(X, y).residuals
    inter = [f"{f}-{t}" for f, t in zip(firm, year)]
    oracle = dense_cluster_vcov(X, u, firm) + dense_cluster_vcov(X, u, year) - dense_cluster_vcov(X, u, inter)
    V, repaired = twoway_vcov(X, u, firm, year)
    if not repaired:
        np.testing.assert_allclose(V, oracle, rtol=0, atol=1e-10 * np.abs(oracle).max())
    else:
        assert np.linalg.eigvalsh(oracle).min() < 0


def test_twoway_collapses_with_identical_labels():
    rng = np.random.default_rng(3)
    X, y, firm, _ = random_panel(rng, 8, 3)
    u = ols_fit(X, y).residuals
    ids = np.arange(len(y)) % 6
    V, _ = twoway_vcov(X, u, ids, ids)
    np.testing.assert_allclose(V, cluster_vcov(X, u, ids), rtol=1e-12, atol=1e-15)


def test_negative_eigenvalue_repair_found_by_search():
    rng = np.random.default_rng(0)
    for _ in range(200):
        X, y, firm, year = random_panel(rng, 3, 2, k=3)
        u = ols_fit(X, y).residuals
        raw = (cluster_vcov(X, u, firm) + cluster_vcov(X, u, year)
               - cluster_vcov(X, u, [f"{a}-{b}" for a, b in zip(firm, year)]))
        if np.linalg.eigvalsh(raw).min() < -1e-8 * np.abs(raw).max():
            break
    else:
        pytest.fail("no indefinite case found")
    V, repaired = twoway_vcov(X, u, firm, year)
    assert repaired
    np.testing.assert_allclose(V, V.T, rtol=0, atol=0)
    assert np.linalg.eigvalsh(V).min() > -1e-12 * np.abs(V).max()
    res = fit_twoway(X, y, ["const", "a", "b"], firm, year)
    assert res.repaired and np.isfinite(res.se).all()


def test_psd_repair_noop_on_psd():
    A = np.array([[2.0, 1.0], [1.0, 2.0]])
    V, flag = psd_repair(A)
    assert not flag and V is A


def test_label_renaming_invariance():
    rng = np.random.default_rng(4)
    X, y, firm, year = random_panel(rng)
    u = ols_fit(X, y).residuals
    renamed = np.array([f"firm_{9 - f}" for f in firm])
    np.testing.assert_allclose(cluster_vcov(X, u, firm), cluster_vcov(X, u, renamed), rtol=1e-13)


def frame(seed=5, n_firms=12, n_years=6):
    rng = np.random.default_rng(seed)
    X, y, firm, year = random_panel(rng, n_firms, n_years, k=4)
    return pd.DataFrame({"y": y, "a": X[:, 1], "b": X[:, 2], "c": X[:, 3], "firm_id": firm, "time_id": year})


@pytest.mark.parametrize("c", [0.01, 100.0])
def test_rescaling_invariance(c):
    df = frame()
    base = fit_panel(df, "y", ["a", "b", "c"])
    df2 = df.assign(b=df["b"] * c)
    res = fit_panel(df2, "y", ["a", "b", "c"])
    i = res.names.index("b")
    assert res.coef[i] == pytest.approx(base.coef[i] / c, rel=1e-8)
    assert res.se[i] == pytest.approx(base.se[i] / c, rel=1e-8)
    for attr in ("t", "p", "std_coef"):
        np.testing.assert_allclose(getattr(res, attr), getattr(base, attr), rtol=1e-8, atol=1e-12)


def test_r2_affine_invariance():
    df = frame()
    base = fit_panel(df, "y", ["a", "b", "c"])
    M = np.array([[2.0, 1.0, 0.0], [0.5, -1.0, 3.0], [0.0, 0.2, 1.0]])
    Z = df[["a", "b", "c"]].to_numpy() @ M + [1.0, -2.0, 0.5]
    df2 = df.assign(a=Z[:, 0], b=Z[:, 1], c=Z[:, 2])
    assert fit_panel(df2, "y", ["a", "b", "c"]).r2 == pytest.approx(base.r2, rel=1e-10)


def test_standardized_coefficient_examples():
    assert standardized_coefficient(2.0, 0.5) == 1.0
    assert standardized_coefficient(0.0, 3.0) == 0.0
    assert round(standardized_coefficient(-0.202, 0.3960), 3) == -0.080


def test_result_fields():
    df = frame()
    res = fit_panel(df, "y", ["a", "b"], controls=df[["c"]])
    np.testing.assert_allclose(res.t, res.coef / res.se)
    assert res.df == min(res.g_firm, res.g_time) - 1 == 5
    assert res.display == ["a", "b"] and "c" in res.names
    sd = df[["a", "b"]].std(ddof=1).to_numpy()
    np.testing.assert_allclose(res.std_coef[1:3], res.coef[1:3] * sd)
    for p, s in zip(res.p, (res.stars(n) for n in res.names)):
        assert s == stars(p)


@pytest.mark.parametrize("p, s", [(0.03, "*"), (0.0005, "***"), (0.2, ""), (0.05, "*"), (0.01, "**"),
                                  (0.001, "***"), (0.0501, "")])
def test_stars(p, s):
    assert stars(p) == s


def test_report_layout():
    df = frame()
    r1 = fit_panel(df, "y", ["a"])
    r2 = fit_panel(df, "y", ["a", "b"])
    lines = report([r1, r2]).splitlines()
    assert lines[0].split("\t") == ["var", "coeff", "std coeff", "t", "R2"]
    rows = [l.split("\t") for l in lines[1:4]]
    assert [r[0] for r in rows] == ["a", "a", "b"]
    assert rows[0][4] != "" and rows[1][4] != "" and rows[2][4] == ""
    assert rows[0][1].rstrip("*") == format(r1.coef[1], "#.3g")
    assert lines[-1].startswith("*p <= 0.05, **p <= 0.01, ***p <= 0.001")
    assert '"vcov_repaired"' in results_json([r1])
