"""Smoke test for the fuse_embed extension.

Build it first with `pip install --no-build-isolation -e crates/python`,
then run `python python/smoke_test.py` (or `pytest python/`).
"""

import numpy as np

import fuse_embed as fe


def two_blocks(size=20, p_in=0.5, p_out=0.02, seed=3):
    rng = np.random.default_rng(seed)
    n = 2 * size
    labels = [i // size for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            p = p_in if labels[i] == labels[j] else p_out
            if rng.random() < p:
                edges.append((i, j))
    return fe.Graph(n, edges), labels


def test_graph_and_diagnostics():
    path = fe.Graph(3, [(0, 1), (1, 2)])
    assert (path.n, path.m) == (3, 2)
    assert path.degrees().tolist() == [1.0, 2.0, 1.0]
    report = fe.zagreb_report(path)
    assert abs(report["zagreb_constant"] - 2.0 / 9.0) < 1e-12
    assert report["bound_satisfied"] is False


def test_gradients_match_dense():
    graph, labels = two_blocks()
    pairs = fe.Pairs.generate(labels, 60, seed=1)
    s = fe.init_embedding(graph.n, 8, seed=2)
    assert np.allclose(np.linalg.norm(s, axis=1), 1.0)

    a = np.zeros((graph.n, graph.n))
    for i, j in graph.edges():
        a[i, j] = a[j, i] = 1.0
    d = a.sum(axis=1)
    two_m = 2.0 * graph.m
    exact = a @ s - np.outer(d, d @ s) / two_m
    approx = a @ s - np.outer(d, s.sum(axis=0)) / two_m
    assert np.allclose(fe.structural_gradient(graph, s, "exact"), exact)
    assert np.allclose(fe.structural_gradient(graph, s), approx)

    y = np.zeros_like(a)
    for i, j, sign in pairs.to_list():
        y[i, j] = y[j, i] = sign
    deg = np.abs(y).sum(axis=1)
    inv = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1.0)), 0.0)
    lc = np.eye(graph.n) - inv[:, None] * y * inv[None, :]
    assert np.allclose(fe.apply_contrastive_laplacian(pairs, s), lc @ s)

    lam = 0.3
    dense = np.trace(s.T @ exact) - lam * np.trace(s.T @ lc @ s)
    assert abs(fe.objective(graph, pairs, s, lam, "exact") - dense) < 1e-9

    est = fe.lipschitz_estimate(graph, pairs, lam)
    m = a - np.outer(d, d) / two_m - lam * lc
    assert abs(est["value"] - 2.0 * np.abs(np.linalg.eigvalsh(m)).max()) < 1e-3 * est["value"]


def test_fit_and_probe():
    graph, labels = two_blocks()
    pairs = fe.Pairs.generate(labels, 200, seed=4)
    train, test = pairs.split(0.8, seed=0)
    s, trace, params = fe.fit(graph, train, k=8, iterations=30, seed=5)
    assert s.shape == (graph.n, 8)
    assert len(trace) == 31
    assert np.allclose(np.linalg.norm(s, axis=1), 1.0)
    assert set(params) == {"p_star", "d_star", "eta", "lambda"}

    again, _, _ = fe.fit(graph, train, k=8, iterations=30, seed=5)
    assert np.array_equal(s, again)

    metrics, weights = fe.fit_and_score(s, train, test)
    assert metrics["n_test"] == len(test)
    assert len(weights) == 2 * 8 + 1
    assert 0.0 <= metrics["accuracy"] <= 1.0
    assert fe.evaluate(s, pairs)["n_train"] > 0


def test_errors_are_python_exceptions():
    for bad in (
        lambda: fe.Pairs(3, [(0, 0, 1)]),
        lambda: fe.Pairs(3, [(0, 1, 2)]),
        lambda: fe.Graph(2, [(0, 5)]),
        lambda: fe.fit(fe.Graph(2, [(0, 1)]), fe.Pairs(2, []), gradient_mode="nope"),
    ):
        try:
            bad()
        except ValueError:
            continue
        raise AssertionError("expected ValueError")
    try:
        fe.Graph.from_edge_list("/nonexistent/edges.txt")
    except OSError:
        pass
    else:
        raise AssertionError("expected OSError")


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_") and callable(fn):
            fn()
            print(f"ok {name}")
