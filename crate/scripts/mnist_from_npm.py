#!/usr/bin/env python3
"""Rebuild gzipped IDX files from the digits bundled in the `mnist` npm package.

The package stores each 28x28 digit as floats rounded to three decimals of
byte/255; rounding back to the nearest byte recovers the original pixels.

usage: npm pack mnist && tar xzf mnist-*.tgz
       python3 scripts/mnist_from_npm.py package/src/digits data/mnist
"""
import gzip
import json
import struct
import sys
from pathlib import Path


def main(src: Path, dst: Path) -> None:
    images = bytearray()
    labels = bytearray()
    for digit in range(10):
        raw = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(raw) % 784 == 0
        for v in raw:
            b = round(v * 255)
            assert abs(b / 255 - v) < 5e-4, v
            images.append(b)
        labels.extend([digit] * (len(raw) // 784))
    n = len(labels)
    dst.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(dst / "mnist-10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images)
    with gzip.GzipFile(dst / "mnist-10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels)
    print(f"wrote {n} images to {dst}")


if __name__ == "__main__":
    main(Path(sys.argv[1]), Path(sys.argv[2]))
