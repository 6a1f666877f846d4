"""Smoke test for the hypercomm Python bindings.

Build and install the extension first, e.g.

    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/hypercomm-*.whl

then run ``python python/smoke_test.py``.
"""

import math
import os
import tempfile

import hypercomm


def check(cond, what):
    if not cond:
        raise AssertionError(what)
    print(f"ok  {what}")


def main():
    check(hypercomm.phi(300, 3) == 4_500_250, "phi(300, 3)")

    h, truth, alpha = hypercomm.generate(2, 40, 2, 3, 0.5, seed=7)
    check(h.n == 40 and h.m == 3 and len(h) == h.num_edges > 0, f"generate -> {h!r}")
    check(len(truth) == 40 and set(truth) == {1, 2}, "planted labels")
    check(len(alpha) == 40 and all(len(row) == 3 for row in alpha), "planted embedding shape")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "g.hg")
        h.write(path)
        again = hypercomm.Hypergraph.load(path)
        check(again.edges() == h.edges(), "write/load round trip")

    small = hypercomm.Hypergraph(4, 3, [[1, 2, 3], [2, 3], [4]])
    check(small.degrees() == [1, 2, 2, 1], "degrees")
    check(math.isclose(small.estimate_sparsity(), 3 / 14), "estimate_sparsity")
    try:
        hypercomm.Hypergraph(3, 2, [[1, 5]])
    except ValueError as e:
        check("5" in str(e), "out-of-range vertex raises ValueError")
    else:
        raise AssertionError("expected ValueError")

    cfg = hypercomm.FitConfig(2, 3, s_n=0.5, lambda0=0.0025, seed=1)
    res = hypercomm.fit(h, cfg)
    trace = res.loss_trace
    check(all(b <= a for a, b in zip(trace, trace[1:])), f"non-increasing trace over {res.outer_iters} iterations")
    check(len(res.labels) == 40 and len(res.alpha_hat) == 40 and len(res.centers) == 2, "fit result shapes")
    check(res.eta_trace[0] == 40 / 0.5, "automatic learning rate n / s_n")
    err = hypercomm.hamming_error(truth, res.labels, 2)
    check(0.0 <= err <= 0.5, f"embedding fit error {err:.4f}")

    for name, detect in [("wptg", hypercomm.wptg_detect), ("shp", hypercomm.shp_detect)]:
        labels = detect(h, 2, seed=1)
        check(len(labels) == 40, f"{name} error {hypercomm.hamming_error(truth, labels, 2):.4f}")

    check(hypercomm.hellinger(alpha, alpha, 3, 0.5) == 0.0, "hellinger of identical embeddings")
    d_fit = hypercomm.hellinger(res.alpha_hat, alpha, 3, 0.5)
    check(0.0 < d_fit < 1.0, f"hellinger(fit, truth) = {d_fit:.4f}")
    check(hypercomm.hamming_error([1, 1, 2], [2, 2, 1], 2) == 0.0, "hamming ignores label names")

    rows = hypercomm.benchmark(1, [24], [0.3], reps=1, methods=["wptg", "shp"], r=3)
    check(len(rows) == 2 and all(r["sd"] == 0.0 for r in rows), "single-replication benchmark")
    try:
        hypercomm.benchmark(1, [24], [0.3], methods=["tensor-score"])
    except ValueError as e:
        check("tensor-score" in str(e), "unsupported method rejected")
    else:
        raise AssertionError("expected ValueError")

    print("all smoke checks passed")


if __name__ == "__main__":
    main()
