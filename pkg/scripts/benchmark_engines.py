#!/usr/bin/env python3
"""Per-round cost of the incremental and naive engines on complete binary trees."""
import argparse

from tmcts.harness import affine_fit, benchmark_engines


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--min-depth", type=int, default=6)
    p.add_argument("--max-depth", type=int, default=14)
    p.add_argument("--repeats", type=int, default=15)
    p.add_argument("--seed", type=int, default=0)
    a = p.parse_args()
    pts = benchmark_engines(range(a.min_depth, a.max_depth + 1), repeats=a.repeats, seed=a.seed)
    print(f"{'depth':>5} {'fast us':>9} {'naive us':>10} {'ratio':>7}")
    for pt in pts:
        print(f"{pt.depth:>5} {pt.fast_us:>9.1f} {pt.naive_us:>10.1f} {pt.naive_us / pt.fast_us:>7.1f}")
    slope, icpt, r2 = affine_fit([pt.depth for pt in pts], [pt.fast_us for pt in pts])
    print(f"fast ~ {icpt:.1f} + {slope:.2f} * depth us, R^2 = {r2:.3f}")


if __name__ == "__main__":
    main()
