#!/usr/bin/env python3
"""Reference values for bench::summarize, computed with numpy/scipy.

Writes stats_oracle.json next to this file. Re-run only to regenerate the
frozen fixture; the tests never call this script.
"""
import json
import pathlib

import numpy as np
from scipy import stats


def t975(df):
    return stats.t.ppf(0.975, df) if df <= 30 else stats.norm.ppf(0.975)


def summarize(xs):
    a = np.asarray(xs, dtype=np.float64)
    mean = a.mean()
    sd = a.std(ddof=1)
    return {
        "mean": float(mean),
        "stddev": float(sd),
        "cv_pct": float(sd / mean * 100),
        "ci95_pct": float(t975(len(a) - 1) * sd / (np.sqrt(len(a)) * mean) * 100),
        "median": float(np.median(a)),
    }


def main():
    rng = np.random.default_rng(20180516)
    cases = []
    for i in range(100):
        n = int(rng.integers(2, 41))
        scale = float(10 ** rng.uniform(-4, 2))
        xs = (rng.lognormal(0.0, 0.3, n) * scale).tolist()
        cases.append({"samples": xs, **summarize(xs)})
    cases.append({"samples": [2.0, 4.0], **summarize([2.0, 4.0])})
    out = pathlib.Path(__file__).with_name("stats_oracle.json")
    out.write_text(json.dumps({"cases": cases}, indent=1) + "\n")


if __name__ == "__main__":
    main()
