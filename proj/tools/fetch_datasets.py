#!/usr/bin/env python3
"""Materialize the benchmark datasets under data/.

Produces
  data/vowel.scale   528-sample vowel training set in svmlight format,
                     features min-max scaled to [-1, 1] (svm-scale convention)
  data/ml-100k/u.data  MovieLens 100k ratings, tab separated

Both are extracted from wheels on the package index (keel_ds and recbole
bundle the raw files), so only `pip download` access is needed.
"""

import argparse
import glob
import os
import subprocess
import sys
import tempfile
import zipfile


def download_wheel(name, dest, cache=None):
    pattern = name.replace("-", "_") + "-*.whl"
    if cache:
        cached = glob.glob(os.path.join(cache, pattern))
        if cached:
            return cached[0]
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", name, "-d", dest],
        check=True,
    )
    wheels = glob.glob(os.path.join(dest, pattern))
    if not wheels:
        raise RuntimeError(f"no wheel found for {name}")
    return wheels[0]


def write_vowel(wheel, out_path):
    raw = zipfile.ZipFile(wheel).read("keel_ds/data/balanced/raw/vowel.dat").decode()
    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        fields = line.split(",")
        # TT, speaker, sex, F0..F9, class; TT == 0 marks the 528-sample training part
        if int(fields[0]) != 0:
            continue
        rows.append(([float(v) for v in fields[3:13]], int(fields[13])))
    if len(rows) != 528:
        raise RuntimeError(f"expected 528 vowel rows, got {len(rows)}")
    lo = [min(r[0][j] for r in rows) for j in range(10)]
    hi = [max(r[0][j] for r in rows) for j in range(10)]
    with open(out_path, "w") as f:
        for feats, label in rows:
            parts = [str(label)]
            for j, v in enumerate(feats):
                s = -1.0 + 2.0 * (v - lo[j]) / (hi[j] - lo[j])
                if s != 0.0:
                    parts.append(f"{j + 1}:{s:.6g}")
            f.write(" ".join(parts) + "\n")


def write_ml100k(wheel, out_path):
    raw = zipfile.ZipFile(wheel).read("recbole/dataset_example/ml-100k/ml-100k.inter").decode()
    lines = raw.splitlines()[1:]  # drop the typed header
    if len(lines) != 100000:
        raise RuntimeError(f"expected 100000 ratings, got {len(lines)}")
    with open(out_path, "w") as f:
        f.write("\n".join(lines) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data"))
    parser.add_argument("--wheel-dir", help="directory with previously downloaded wheels")
    args = parser.parse_args()
    out = os.path.abspath(args.out)
    os.makedirs(os.path.join(out, "ml-100k"), exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        vowel = os.path.join(out, "vowel.scale")
        if not os.path.exists(vowel):
            write_vowel(download_wheel("keel-ds", tmp, args.wheel_dir), vowel)
        udata = os.path.join(out, "ml-100k", "u.data")
        if not os.path.exists(udata):
            write_ml100k(download_wheel("recbole", tmp, args.wheel_dir), udata)
    print(f"datasets ready in {out}")


if __name__ == "__main__":
    main()
