"""Smoke test for the tsrecon Python extension.

Build first with `cargo build --release -p tsrecon-python`, then run
`python3 python/smoke_test.py` (or point TSRECON_LIB at the built library).
"""

import importlib.machinery
import importlib.util
import math
import os
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_extension():
    candidates = [os.environ.get("TSRECON_LIB")] + [
        str(ROOT / "target" / profile / "libtsrecon.so") for profile in ("release", "debug")
    ]
    for path in filter(None, candidates):
        if Path(path).exists():
            loader = importlib.machinery.ExtensionFileLoader("tsrecon", path)
            spec = importlib.util.spec_from_file_location("tsrecon", path, loader=loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            return module
    sys.exit("libtsrecon.so not found; run `cargo build --release -p tsrecon-python`")


def main():
    ts = load_extension()

    y = ts.random_walk_plus_noise(150, step_sd=0.02, noise_sd=1.0, seed=1)
    d = y.difference()
    assert len(d) == 149 and d.start_time == 1
    acf = ts.sample_acf(d, 10)
    assert len(acf["correlations"]) == 11 and acf["correlations"][0] == 1.0
    assert acf["correlations"][1] < -0.2, acf["correlations"][1]

    model = ts.ArmaModel(ar=[0.6], ma=[0.3], mean=1.0, noise_variance=2.0)
    x = model.simulate(200, seed=3)
    assert math.isfinite(model.log_likelihood(x))
    fit = ts.fit_arma(x, order=(1, 1))
    assert abs(fit["model"].ar[0] - 0.6) < 0.2, fit["model"]
    searched = ts.fit_arma(x, p_max=2, q_max=2)
    assert searched["aicc"] <= fit["aicc"] + 1e-9
    w = ts.whiten(x, order=(1, 1))
    assert ts.ljung_box(w, 10, 2)["p_value"] > 0.01

    raw = ts.cross_correlation(x, w, 5)
    assert raw["lags"] == list(range(-5, 6))
    pw = ts.prewhitened_ccf(x, w, 5)
    assert pw["mode"] == "prewhitened-x"

    # response driven by x three steps earlier
    noise = ts.ArmaModel(noise_variance=0.01).simulate(200, seed=8).values
    xv = x.values
    resp = ts.TimeSeries(3, [2.0 * xv[t - 3] + noise[t] for t in range(3, 200)])
    scan = ts.lag_scan(resp, x, 8)
    assert scan["entries"][0]["lag"] == 3, scan["entries"][0]
    m = ts.fit_transfer(resp, [(x, "x", [-3])], p=0, q=0)
    (_, offset, coef), = m.coefficients
    assert offset == -3 and abs(coef - 2.0) < 0.05, m.equation
    pred = m.predict([x], 150, 160)
    assert len(pred["mean"]) == 11 and all(s > 0 for s in pred["std_errors"])
    held = ts.holdout_eval(resp, [(x, "x", [-3])], [(50, 69)])
    base = ts.holdout_eval(resp, [], [(50, 69)])
    assert held["pooled_rmse"] < base["pooled_rmse"]

    cols = [(f"p{j}", [(j + 1) * v + 0.01 * ((7 * t + j) % 5) for t, v in enumerate(xv)]) for j in range(6)]
    pcs = ts.pca(0, cols, 2)
    assert pcs["explained_variance"][0] > pcs["explained_variance"][1]
    assert isinstance(pcs["scores"][0], ts.TimeSeries)

    shifted = ts.TimeSeries(1900, [v + (8.0 if t >= 100 else 0.0) for t, v in enumerate(noise[:200])])
    seg = ts.segment(shifted, max_breaks=2, max_order=1)
    assert any(abs(b - 2000) <= 2 for b in seg["breakpoint_times"]), seg["breakpoint_times"]
    score = ts.mdl_score(shifted, seg["breakpoints"], [s["order"] for s in seg["segments"]])
    assert abs(score - seg["mdl"]) < 1e-8

    try:
        ts.sample_acf(ts.TimeSeries(0, [1.0, 2.0]), 5)
    except ts.TsreconError as e:
        assert isinstance(e, ValueError)
    else:
        raise AssertionError("expected TsreconError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
