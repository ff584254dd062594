"""Wall time of the sharded sparse product at increasing thread counts."""

import argparse
import os

os.environ.setdefault("NUMBA_NUM_THREADS", "8")

from pdlp.experiments import spmv_timing  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nnz", type=int, default=10_000_000)
    ap.add_argument("--threads", type=int, nargs="+", default=[2, 4, 8])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    print(f"cpus={os.cpu_count()} numba_pool={os.environ['NUMBA_NUM_THREADS']}")
    for t in args.threads:
        r = spmv_timing(args.nnz, t, args.repeats)
        one, (many, eff) = r["seconds"][1][0], r["seconds"][t]
        print(f"threads={t} workers={eff} nnz={r['nnz']} t1_ms={one * 1e3:.1f} "
              f"tN_ms={many * 1e3:.1f} speedup={r['speedup']:.2f}")


if __name__ == "__main__":
    main()
