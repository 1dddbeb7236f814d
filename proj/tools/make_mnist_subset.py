#!/usr/bin/env python3
"""Build a 10k-digit MNIST subset in gzipped IDX format.

Source: the `mnist` npm package (MIT), which ships 10,000 MNIST digits as
JSON arrays of 784 intensities in [0, 1] rounded to three decimals.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/make_mnist_subset.py package/src/digits data/

Digits are interleaved with a fixed shuffle so that any contiguous index
range is close to class-balanced.
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path

SHUFFLE_SEED = 20170831


def main(src: Path, dst: Path) -> None:
    samples = []
    for digit in range(10):
        values = json.loads((src / f"{digit}.json").read_text())["data"]
        assert len(values) % 784 == 0
        for k in range(len(values) // 784):
            pixels = bytes(min(255, max(0, round(v * 255))) for v in values[k * 784:(k + 1) * 784])
            samples.append((pixels, digit))
    random.Random(SHUFFLE_SEED).shuffle(samples)

    dst.mkdir(parents=True, exist_ok=True)
    n = len(samples)
    with gzip.GzipFile(dst / "mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">BBBBIII", 0, 0, 0x08, 3, n, 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with gzip.GzipFile(dst / "mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">BBBBI", 0, 0, 0x08, 1, n))
        f.write(bytes(label for _, label in samples))
    print(f"wrote {n} digits to {dst}")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit("usage: make_mnist_subset.py <npm-mnist-digits-dir> <out-dir>")
    main(Path(sys.argv[1]), Path(sys.argv[2]))
