#!/usr/bin/env python3
"""Convert the KEEL copies of the UCI benchmarks shipped in the `keel-ds` wheel
into headered CSV files readable by `featgenn`.

Usage:
    pip download --no-deps keel-ds -d /tmp/keel
    python3 tools/prepare_keel_data.py /tmp/keel/keel_ds-*.whl data/

The KEEL files carry no header row, so generic column names are generated and
the last column is written as `class`.
"""
import argparse
import csv
import io
import sys
import zipfile

DATASETS = {
    # output name -> member inside the wheel
    "spambase": "keel_ds/data/balanced/raw/spambase.dat",
    "ionosphere": "keel_ds/data/balanced/raw/ionosphere.dat",
    "german": "keel_ds/data/balanced/raw/german.dat",
}


def convert(raw: str, out_path: str) -> int:
    rows = []
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("@"):
            continue
        rows.append([field.strip() for field in line.split(",")])
    width = len(rows[0])
    header = [f"a{i + 1}" for i in range(width - 1)] + ["class"]
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return len(rows)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("wheel", help="path to a keel_ds wheel")
    parser.add_argument("out_dir", help="directory for the CSV files")
    args = parser.parse_args()
    with zipfile.ZipFile(args.wheel) as wheel:
        for name, member in DATASETS.items():
            raw = io.TextIOWrapper(wheel.open(member), encoding="utf-8").read()
            n = convert(raw, f"{args.out_dir}/{name}.csv")
            print(f"{name}: {n} rows")
    return 0


if __name__ == "__main__":
    sys.exit(main())
