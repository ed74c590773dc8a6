#!/usr/bin/env python3
"""Fetch the five benchmark datasets and cache them as sparse text files.

The library itself never touches the network; this script is the out-of-band
fetcher. Primary source is the LIBSVM binary-dataset collection, with the UCI
archive as a fallback for the datasets it hosts. Every file is converted to
the sparse "label idx:val ..." format under data/ and sanity-checked against
the expected record and attribute counts.

Usage: python3 scripts/fetch_datasets.py [--out data] [--only name ...]
"""

import argparse
import sys
import urllib.request
from pathlib import Path

LIBSVM_BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/"
UCI_BASE = "https://archive.ics.uci.edu/ml/machine-learning-databases/"

# name -> (libsvm file, uci fallback, expected records, expected attributes)
DATASETS = {
    "australian": ("australian", "statlog/australian/australian.dat", 690, 14),
    "breast-cancer": ("breast-cancer",
                      "breast-cancer-wisconsin/breast-cancer-wisconsin.data", 683, None),
    "diabetes": ("diabetes", None, 768, 8),
    "fourclass": ("fourclass", None, 862, 2),
    "heart": ("heart", "statlog/heart/heart.dat", 270, 13),
}


def download(url: str) -> str:
    print(f"  fetching {url}")
    with urllib.request.urlopen(url, timeout=60) as resp:
        return resp.read().decode("utf-8", errors="replace")


def sparse_from_libsvm(text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        raw = raw.strip()
        if raw:
            lines.append(raw)
    return lines


def sparse_from_uci(name: str, text: str) -> list[str]:
    lines = []
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw:
            continue
        if name == "breast-cancer":
            cells = raw.split(",")
            if "?" in cells:
                continue  # drop records with missing values
            label, attrs = cells[-1], cells[1:-1]  # first column is the sample id
        else:  # australian / heart: whitespace separated, label last
            cells = raw.split()
            label, attrs = cells[-1], cells[:-1]
        feats = " ".join(f"{i + 1}:{v}" for i, v in enumerate(attrs))
        lines.append(f"{label} {feats}")
    return lines


def n_attributes(lines: list[str]) -> int:
    max_idx = 0
    for line in lines:
        for tok in line.split()[1:]:
            idx = int(tok.split(":")[0])
            max_idx = max(max_idx, idx)
    return max_idx


def fetch(name: str, out_dir: Path) -> bool:
    libsvm_file, uci_path, want_records, want_atts = DATASETS[name]
    lines = None
    try:
        lines = sparse_from_libsvm(download(LIBSVM_BASE + libsvm_file))
    except Exception as err:
        print(f"  libsvm source failed: {err}")
        if uci_path is not None:
            try:
                lines = sparse_from_uci(name, download(UCI_BASE + uci_path))
            except Exception as err2:
                print(f"  uci fallback failed: {err2}")
    if not lines:
        print(f"  FAILED: no source reachable for {name}")
        return False

    if want_records is not None and len(lines) != want_records:
        print(f"  WARNING: {name} has {len(lines)} records, expected {want_records}")
    if want_atts is not None:
        atts = n_attributes(lines)
        if atts != want_atts:
            print(f"  WARNING: {name} has {atts} attributes, expected {want_atts}")

    out = out_dir / f"{name}.libsvm"
    out.write_text("\n".join(lines) + "\n")
    print(f"  wrote {out} ({len(lines)} records)")
    return True


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--only", nargs="*", help="subset of dataset names")
    args = parser.parse_args()

    names = args.only or list(DATASETS)
    unknown = [n for n in names if n not in DATASETS]
    if unknown:
        parser.error(f"unknown dataset(s): {', '.join(unknown)}")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name in names:
        print(f"{name}:")
        if not fetch(name, out_dir):
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
