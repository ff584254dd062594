"""Polishing suite: unpolished vs polished iteration counts and final gaps.

Runs the default generator family and, for comparison, the harder family with
no basis boost (dominance 0).
"""

import argparse

import numpy as np

from pdlp.experiments import polishing_suite


def summarize(label, records):
    plain = np.array([r.plain.stats.iterations for r in records])
    pol = np.array([r.polished.stats.iterations for r in records])
    gaps = np.array([r.polished.residuals.rel_gap for r in records])
    wins = sum(r.polishing_wins for r in records)
    print(f"[{label}] instances={len(records)} wins={wins} "
          f"win_rate={wins / max(len(records), 1):.2f}")
    print(f"[{label}] unpolished iterations median={np.median(plain):.0f} max={plain.max()}")
    print(f"[{label}] polished iterations median={np.median(pol):.0f} max={pol.max()}")
    print(f"[{label}] iteration ratio quartiles="
          + " ".join(f"{v:.2f}" for v in np.percentile(pol / plain, [0, 25, 50, 75, 100])))
    print(f"[{label}] polished rel_gap median={np.median(gaps):.2e} max={gaps.max():.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=50)
    ap.add_argument("--min-iterations", type=int, default=1000)
    ap.add_argument("--verbose", action="store_true", help="one line per instance")
    ap.add_argument("--skip-hard", action="store_true")
    args = ap.parse_args()
    families = [("default", 0.3)] + ([] if args.skip_hard else [("dominance-0", 0.0)])
    for label, dom in families:
        records = polishing_suite(args.size, args.min_iterations, dominance=dom)
        if args.verbose:
            for r in records:
                print(f"seed={r.seed} plain={r.plain.stats.iterations} "
                      f"polished={r.polished.stats.iterations} "
                      f"polish_iters={r.polished.stats.polish_iterations} "
                      f"status={r.polished.status.value} "
                      f"rel_gap={r.polished.residuals.rel_gap:.2e}")
        summarize(label, records)


if __name__ == "__main__":
    main()
