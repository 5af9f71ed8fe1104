"""Run (or load from cache) the figure ensembles and print their headline numbers.

    python3 scripts/run_figures.py [--jobs N] [--cache DIR] [--out DIR] [avg4 ecc513ii twonoise5 trig_t32]

CSV files land in --out exactly as with ``softqec run``.
"""
from __future__ import annotations

import argparse
import os
from pathlib import Path

import numpy as np

from softqec.config import load_experiments
from softqec.protocol import run_ensemble, write_ensemble_csv, write_trace_csv

ROOT = Path(__file__).resolve().parents[1]
FIGURES = ("avg4", "ecc513ii", "twonoise5", "trig_t32")
AVG4_REFERENCE = {"a": 14.3, "b": 15.0, "c": 9.73, "d": 1.36}


def ensembles(fig, args):
    out = {}
    for exp in load_experiments(ROOT / "configs" / f"{fig}.yaml"):
        res = run_ensemble(exp.config, exp.n_realizations, exp.exclusion, jobs=args.jobs, cache_dir=args.cache)
        write_trace_csv(res.traces, Path(args.out) / f"{exp.output}_records.csv")
        write_ensemble_csv(res, Path(args.out) / f"{exp.output}_summary.csv")
        out[exp.name] = res
    return out


def report_avg4(res):
    for panel, ref in AVG4_REFERENCE.items():
        r = res[f"fig_avg4_{panel}"]
        trig = sum(t.n_triggers > 0 for t in r.traces)
        print(f"avg4 ({panel}): ratio {r.qec_ratio:6.2f} (reference {ref}); end 1-F' {1 - r.end_mean['F_single']:.3e}"
              f" vs DD {1 - r.end_mean['F_single_D']:.3e}; {trig}/{len(r.traces)} realizations triggered")


def report_ecc(res):
    for name, r in res.items():
        wm, nm, np_ = (r.infidelity(k)[-1] for k in ("F_a", "F_D", "F_NP"))
        print(f"{name}: final WM {wm:.3e}  NM {nm:.3e}  NP {np_:.3e}  NM/WM {nm / wm:.2f}  SP {r.mean['sp'][-1]:.4f}")


def report_two(res):
    s, b = res["fig_twonoise5_slow"], res["fig_twonoise5_bimodal"]
    for key in ("F_a", "Fp_a"):
        a, c = np.nanmean(s.infidelity(key)), np.nanmean(b.infidelity(key))
        print(f"twonoise5 {key}: slow {a:.3e}  bimodal {c:.3e}  ratio {c / a:.1f}")
    for r, lbl in ((s, "slow"), (b, "bimodal")):
        print(f"twonoise5 {lbl}: end ratio {r.qec_ratio:.2f}")


def report_trig(res):
    for name, r in res.items():
        tr = r.traces[0]
        pattern = " ".join(f"{1 - x.F_a:.1e}{'*' if x.trigger else ''}" for x in tr.records)
        print(f"{name}: {tr.n_triggers} trigger(s); 1-F_a per measurement (* = in window): {pattern}")


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("figures", nargs="*", default=list(FIGURES), choices=FIGURES)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--cache", default=os.environ.get("SOFTQEC_CACHE", str(ROOT / ".softqec_cache")))
    ap.add_argument("--out", default=str(ROOT / "results"))
    args = ap.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    reports = {"avg4": report_avg4, "ecc513ii": report_ecc, "twonoise5": report_two, "trig_t32": report_trig}
    for fig in args.figures:
        reports[fig](ensembles(fig, args))


if __name__ == "__main__":
    main()
