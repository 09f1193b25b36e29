"""Smoke test for the sdr_py extension module.

Build and install first, e.g. `maturin develop -m crates/python/Cargo.toml`,
then run `python crates/python/python/smoke_test.py`.
"""

import json
import math
import random

import sdr_py


def make_data(n, p, seed):
    rng = random.Random(seed)
    w = [rng.gauss(0, 1) for _ in range(p)]
    x = [[rng.gauss(0, 1 + 3 / (j + 1)) for j in range(p)] for _ in range(n)]
    y = [sum(a * b for a, b in zip(row, w)) + rng.gauss(0, 0.5) for row in x]
    return x, y


def center(x, y):
    n, p = len(x), len(x[0])
    mx = [sum(r[j] for r in x) / n for j in range(p)]
    my = sum(y) / n
    return [[r[j] - mx[j] for j in range(p)] for r in x], [v - my for v in y]


def main():
    x, y = make_data(80, 6, 1)
    xc, yc = center(x, y)

    assert len(sdr_py.METHODS) == 9

    for method, gamma in [("PCA", None), ("PLS", 0.0), ("BARSHAN", 1.0), ("LSPCA", 0.1), ("PV", None)]:
        r = sdr_py.fit(method, xc, yc, 2, gamma=gamma)
        b = r.basis()
        if method == "PV":
            assert b is None
        else:
            assert len(b) == 6 and len(b[0]) == 2, method
            for i in range(2):
                for j in range(2):
                    dot = sum(b[k][i] * b[k][j] for k in range(6))
                    assert abs(dot - (i == j)) < 1e-8, (method, dot)
        z = r.reduce(xc)
        assert len(z) == 80 and len(z[0]) == 2
        back = sdr_py.Reducer.from_json(r.to_json())
        assert back.reduce(xc) == z, method

    coef, intercept = sdr_py.ols(x, y)
    pred = [sum(c * v for c, v in zip(coef, row)) + intercept for row in x]
    full = sdr_py.Pipeline("OLS", x, y, 6)
    assert abs(sdr_py.mse(pred, y) - full.mse(x, y)) < 1e-9

    # PCA keeping every direction spans the same space as OLS
    pca = sdr_py.Pipeline("PCA", x, y, 6)
    assert abs(pca.mse(x, y) - full.mse(x, y)) < 1e-8

    try:
        sdr_py.fit("LSPCA", xc, yc, 2)
    except ValueError:
        pass
    else:
        raise AssertionError("LSPCA without gamma should fail")

    report = json.loads(sdr_py.simulate("fast", "well", 60, ["PCA", "OLS"], 2, seed=3, n_test=200))
    summaries = {s["method"]: s for s in report["settings"][0]["summaries"]}
    assert set(summaries) == {"PCA", "OLS"}
    assert all(s["failures"] == 0 and math.isfinite(s["mean_test_mse"]) for s in summaries.values())
    print("sdr_py smoke test passed")


if __name__ == "__main__":
    main()
