#!/usr/bin/env python3
"""Regenerate the benchmark CSV files under data/.

wisconsin comes from the copy bundled with scikit-learn; australian, german,
pageblocks and votes come from the KEEL files bundled in the keel-ds wheel
(pip download keel-ds --no-deps -d <dir>). No other network access needed.
"""
import argparse
import csv
import glob
import os
import zipfile


def write(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    print(f"{path}: {len(rows)} rows")


def keel_rows(zf, member):
    text = zf.read(member).decode()
    return [[c.strip() for c in line.split(",")]
            for line in text.splitlines() if line.strip() and not line.startswith("@")]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--keel-wheel", required=True)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    args = ap.parse_args()
    os.makedirs(args.out, exist_ok=True)

    from sklearn.datasets import load_breast_cancer
    bc = load_breast_cancer()
    names = [n.replace(" ", "_") for n in bc.feature_names]
    rows = [[repr(float(v)) for v in x] + ["M" if t == 0 else "B"] for x, t in zip(bc.data, bc.target)]
    write(os.path.join(args.out, "wisconsin.csv"), names + ["diagnosis"], rows)

    wheel = sorted(glob.glob(args.keel_wheel))[-1]
    zf = zipfile.ZipFile(wheel)
    base = "keel_ds/data/"

    rows = keel_rows(zf, base + "balanced/raw/australian.dat")
    write(os.path.join(args.out, "australian.csv"), [f"A{i}" for i in range(1, 15)] + ["class"], rows)

    rows = keel_rows(zf, base + "balanced/raw/german.dat")
    write(os.path.join(args.out, "german.csv"), [f"A{i}" for i in range(1, 21)] + ["class"], rows)

    rows = keel_rows(zf, base + "imbalanced/raw/page-blocks0.dat")
    header = ["height", "length", "area", "eccen", "p_black", "p_and", "mean_tr", "blackpix", "blackand",
              "wb_trans", "class"]
    write(os.path.join(args.out, "pageblocks.csv"), header, rows)

    rows = keel_rows(zf, base + "balanced/raw/housevotes.dat")
    rows = [[{"y": "1", "n": "0"}[v] for v in r[:-1]] + [r[-1]] for r in rows]
    write(os.path.join(args.out, "votes.csv"), [f"V{i}" for i in range(1, 17)] + ["party"], rows)


if __name__ == "__main__":
    main()
