#!/usr/bin/env python3
"""Regenerates tests/fixtures/*.json from scipy, scikit-learn and torch.

The C++ tests load these files and compare against the frozen values, so the
reference libraries are only needed when the fixtures change.

    python3 tests/oracles/gen_fixtures.py
"""
import json
import pathlib

import numpy as np
from scipy import signal, stats
from sklearn.metrics import precision_recall_fscore_support
import torch

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
rng = np.random.default_rng(20240611)


def dump(name, obj):
    OUT.mkdir(exist_ok=True)
    (OUT / name).write_text(json.dumps(obj, indent=1) + "\n")


def wilcoxon_cases():
    cases = []
    # Exact branch: continuous data, no ties, no zeros.
    for n in [3, 5, 6, 8, 10, 12, 15, 20, 25]:
        for shift in [0.0, 0.4, 1.0]:
            a = rng.normal(size=n)
            b = a - shift - rng.normal(size=n)
            r = stats.wilcoxon(a, b, method="exact")
            d = a - b
            wp = float(stats.rankdata(np.abs(d))[d > 0].sum())
            cases.append({"a": a.tolist(), "b": b.tolist(), "statistic": float(r.statistic),
                          "w_plus": wp, "p_value": float(r.pvalue), "method": "exact"})
    # Normal branch with ties and zeros: scipy's approx with continuity and tie correction.
    # Sizes count non-zero differences, which is what selects the branch.
    for n in [26, 30, 40, 60]:
        while True:
            a = np.round(rng.normal(size=n + 8) * 3)
            b = np.round(rng.normal(size=n + 8) * 3 - 0.5)
            if np.count_nonzero(a - b) >= n:
                break
        r = stats.wilcoxon(a, b, method="approx", correction=True, zero_method="wilcox")
        d = a - b
        d = d[d != 0]
        wp = float(stats.rankdata(np.abs(d))[d > 0].sum())
        cases.append({"a": a.tolist(), "b": b.tolist(), "statistic": float(r.statistic),
                      "w_plus": wp, "p_value": float(r.pvalue), "method": "normal_approx"})
    return cases


def welch_cases():
    cases = []
    for n, fs, seg in [(512, 128.0, 256), (600, 128.0, 256), (200, 100.0, 256), (1000, 250.0, 128)]:
        t = np.arange(n) / fs
        x = np.sin(2 * np.pi * 10.0 * t) + 0.5 * rng.normal(size=n) + 0.3
        nper = min(seg, n)
        f, p = signal.welch(x, fs=fs, window="hann", nperseg=nper, noverlap=nper // 2,
                            detrend="constant", scaling="density", return_onesided=True)
        cases.append({"x": x.tolist(), "fs": fs, "segment": seg, "freqs": f.tolist(), "density": p.tolist()})
    return cases


def spearman_cases():
    cases = []
    for n in [4, 7, 10]:
        x = rng.integers(0, 5, size=n).astype(float)
        y = rng.normal(size=n)
        cases.append({"x": x.tolist(), "y": y.tolist(), "rho": float(stats.spearmanr(x, y).statistic)})
    x = np.arange(10, dtype=float)
    cases.append({"x": x.tolist(), "y": (x ** 3).tolist(), "rho": 1.0})
    return cases


def class_report_cases():
    cases = []
    for k, n in [(2, 30), (4, 50), (3, 12)]:
        truth = rng.integers(0, k, size=n)
        pred = np.where(rng.random(n) < 0.6, truth, rng.integers(0, k, size=n))
        if k == 3:
            pred[pred == 2] = 0  # class 2 never predicted: zero-division path
        p, r, f, s = precision_recall_fscore_support(truth, pred, labels=list(range(k)), zero_division=0)
        cases.append({"k": k, "truth": truth.tolist(), "pred": pred.tolist(), "precision": p.tolist(),
                      "recall": r.tolist(), "f1": f.tolist(), "support": s.tolist(),
                      "accuracy": float((truth == pred).mean()), "macro_f1": float(f.mean())})
    return cases


def adamw_case():
    torch.manual_seed(0)
    w = torch.tensor(rng.normal(size=6), dtype=torch.float64, requires_grad=True)
    grads = rng.normal(size=(5, 6)) * np.array([[1.0], [0.1], [2.0], [0.5], [0.01]])
    init = w.detach().clone()
    opt = torch.optim.AdamW([w], lr=0.01, betas=(0.9, 0.999), eps=1e-8, weight_decay=0.05, amsgrad=True)
    traj = []
    for g in grads:
        w.grad = torch.tensor(g, dtype=torch.float64)
        opt.step()
        traj.append(w.detach().tolist())
    return {"lr": 0.01, "weight_decay": 0.05, "init": init.tolist(), "grads": grads.tolist(), "trajectory": traj}


if __name__ == "__main__":
    dump("wilcoxon.json", wilcoxon_cases())
    dump("welch.json", welch_cases())
    dump("spearman.json", spearman_cases())
    dump("class_report.json", class_report_cases())
    dump("adamw.json", adamw_case())
    print("fixtures written to", OUT)
