"""Regenerate the shipped pulse-shape library (src/softqec/data/shapes.txt)."""
import argparse
import math

from softqec.shapes import LIBRARY_PATH, calibrate, residuals, save_library


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(LIBRARY_PATH))
    ap.add_argument("--starts", type=int, default=48)
    args = ap.parse_args()

    lib = {
        "S_pi": calibrate(math.pi, 1, n_starts=args.starts, name="S_pi"),
        "S_pi2": calibrate(math.pi / 2, 1, n_starts=args.starts, name="S_pi2"),
        "Q_pi": calibrate(math.pi, 2, n_starts=args.starts, name="Q_pi"),
        "Q_pi2": calibrate(math.pi / 2, 2, n_starts=args.starts, name="Q_pi2"),
    }
    for key, s in lib.items():
        r = residuals(s)
        print(f"{key:6s} peak={s.peak():8.4f} c1={r.c1:+.2e} s1={r.s1:+.2e} s2={r.s2:+.2e} {s.coeffs}")
    save_library(lib, args.out)


if __name__ == "__main__":
    main()
