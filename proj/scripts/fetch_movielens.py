#!/usr/bin/env python3
"""Writes data/ml-100k/u.data.

Downloads the official GroupLens archive when the network allows it, and
otherwise rebuilds the file from the copy bundled in the pytorch-widedeep
wheel (same 100000 ratings, same column order).
"""

import argparse
import hashlib
import io
import pathlib
import subprocess
import sys
import tempfile
import urllib.request
import zipfile

GROUPLENS = "https://files.grouplens.org/datasets/movielens/ml-100k.zip"
WHEEL_MEMBER = "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli"
EXPECTED_MD5 = "6e47046882bad158b0efbb84cd5cb987"


def from_grouplens():
    with urllib.request.urlopen(GROUPLENS, timeout=30) as response:
        archive = zipfile.ZipFile(io.BytesIO(response.read()))
    return archive.read("ml-100k/u.data")


def from_wheel():
    import pandas as pd

    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--dest", tmp, "pytorch-widedeep==1.7.0"],
            check=True,
            stdout=subprocess.DEVNULL,
        )
        wheel = next(pathlib.Path(tmp).glob("pytorch_widedeep-*.whl"))
        frame = pd.read_parquet(io.BytesIO(zipfile.ZipFile(wheel).read(WHEEL_MEMBER)))
    frame = frame[["user_id", "movie_id", "rating", "timestamp"]]
    return frame.to_csv(sep="\t", header=False, index=False).encode()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/ml-100k/u.data")
    args = parser.parse_args()

    try:
        data = from_grouplens()
        source = "grouplens"
    except Exception as err:  # no network: fall back to the mirror
        print(f"grouplens download failed ({err}); using the pytorch-widedeep wheel", file=sys.stderr)
        data = from_wheel()
        source = "pytorch-widedeep wheel"

    digest = hashlib.md5(data).hexdigest()
    if digest != EXPECTED_MD5:
        print(f"warning: md5 {digest} differs from the reference {EXPECTED_MD5}", file=sys.stderr)
    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(data)
    rows = data.count(b"\n")
    print(f"wrote {out} ({rows} ratings, from {source})")


if __name__ == "__main__":
    main()
