"""Convert the digits bundled in the `mnist` npm package (MIT, Juan Cazala)
into gzipped IDX files.

Usage: python3 convert_npm_mnist.py <path/to/package/src/digits> <out_dir>

The npm package stores pixels as value/255 rounded to three decimals; the
original bytes are recovered with round(value * 255). Samples are written in a
fixed shuffled order (numpy PCG64, seed 20231019) so that any prefix is class
balanced.
"""
import gzip
import json
import struct
import sys

import numpy as np


def main(src, out):
    images, labels = [], []
    for digit in range(10):
        with open(f"{src}/{digit}.json") as f:
            flat = np.asarray(json.load(f)["data"], dtype=np.float64)
        px = np.rint(flat * 255.0).astype(np.uint8).reshape(-1, 28, 28)
        images.append(px)
        labels.append(np.full(len(px), digit, dtype=np.uint8))
    images = np.concatenate(images)
    labels = np.concatenate(labels)
    order = np.random.default_rng(20231019).permutation(len(labels))
    images, labels = images[order], labels[order]
    n = len(labels)
    with gzip.GzipFile(f"{out}/mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        f.write(images.tobytes())
    with gzip.GzipFile(f"{out}/mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels.tobytes())
    print(n, np.bincount(labels))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
