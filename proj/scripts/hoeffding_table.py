"""Writes the frozen reference table for the Hoeffding-adjusted threshold.

Each row holds p0, delta, alpha, n and min(1, p0 + delta) + sqrt(ln(1/alpha) / (2n))
evaluated with 50 significant digits from the nearest doubles of the
inputs, which is what the C++ reader parses.
"""
import random
import sys

import mpmath

mpmath.mp.dps = 50


def threshold(p0, delta, alpha, n):
    up = min(mpmath.mpf(1), mpmath.mpf(p0) + mpmath.mpf(delta))
    return up + mpmath.sqrt(mpmath.log(1 / mpmath.mpf(alpha)) / (2 * n))


def main(path):
    rng = random.Random(20240611)
    rows = [("0.9", "0", "0.05", 200), ("0.8", "0.025", "0.05", 50), ("0.99", "0.025", "0.05", 50)]
    while len(rows) < 50:
        p0 = f"{rng.uniform(0.3, 0.99):.4f}"
        delta = rng.choice(["0", "0.01", "0.025", "0.05"])
        alpha = rng.choice(["0.01", "0.05", "0.1", "0.2", f"{rng.uniform(0.001, 0.5):.5f}"])
        n = rng.choice([1, 2, 5, 10, 30, 87, 100, 250, 1000, 5000, rng.randint(1, 20000)])
        rows.append((p0, delta, alpha, n))
    with open(path, "w") as f:
        f.write("p0,delta,alpha,n,expected\n")
        for p0, delta, alpha, n in rows:
            t = threshold(float(p0), float(delta), float(alpha), n)
            f.write(f"{p0},{delta},{alpha},{n},{mpmath.nstr(t, 30)}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/hoeffding_table.csv")
