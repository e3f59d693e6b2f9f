#!/usr/bin/env python3
"""Regenerate the desk-scale MNIST subset committed under data/mnist/.

Reads a full MNIST distribution (the four standard IDX files) and writes a
balanced subset: 300 training samples per class (3000 total; the harness
splits validation off the tail) and 100 test samples per class (1000 total),
shuffled with a fixed seed so the output is reproducible.

Usage:
    tools/make_mnist_subset.py --source <dir-with-full-mnist> --dest data/mnist
"""

import argparse
import struct
from pathlib import Path

import numpy as np

TRAIN_PER_CLASS = 300
TEST_PER_CLASS = 100
SEED = 0


def read_idx_images(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, count, rows, cols = struct.unpack(">IIII", f.read(16))
        if magic != 0x803:
            raise ValueError(f"{path} is not an IDX image file")
        data = np.frombuffer(f.read(count * rows * cols), dtype=np.uint8)
    return data.reshape(count, rows * cols)


def read_idx_labels(path: Path) -> np.ndarray:
    with open(path, "rb") as f:
        magic, count = struct.unpack(">II", f.read(8))
        if magic != 0x801:
            raise ValueError(f"{path} is not an IDX label file")
        return np.frombuffer(f.read(count), dtype=np.uint8)


def write_idx_images(path: Path, images: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, images.shape[0], 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def balanced_subset(images, labels, per_class, rng):
    xs, ys = [], []
    for c in range(10):
        idx = np.flatnonzero(labels == c)
        take = rng.permutation(idx)[:per_class]
        if take.size < per_class:
            raise ValueError(f"class {c} has only {take.size} samples")
        xs.append(images[take])
        ys.append(np.full(per_class, c, dtype=np.uint8))
    x = np.vstack(xs)
    y = np.concatenate(ys)
    p = rng.permutation(y.size)
    return x[p], y[p]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--source", required=True, help="directory with the full MNIST IDX files")
    ap.add_argument("--dest", default="data/mnist", help="output directory")
    args = ap.parse_args()

    src = Path(args.source)
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)
    rng = np.random.RandomState(SEED)

    train_x, train_y = balanced_subset(
        read_idx_images(src / "train-images-idx3-ubyte"),
        read_idx_labels(src / "train-labels-idx1-ubyte"),
        TRAIN_PER_CLASS,
        rng,
    )
    test_x, test_y = balanced_subset(
        read_idx_images(src / "t10k-images-idx3-ubyte"),
        read_idx_labels(src / "t10k-labels-idx1-ubyte"),
        TEST_PER_CLASS,
        rng,
    )

    write_idx_images(dest / "train-images-idx3-ubyte", train_x)
    write_idx_labels(dest / "train-labels-idx1-ubyte", train_y)
    write_idx_images(dest / "t10k-images-idx3-ubyte", test_x)
    write_idx_labels(dest / "t10k-labels-idx1-ubyte", test_y)
    print(f"wrote {train_y.size} train and {test_y.size} test samples to {dest}")


if __name__ == "__main__":
    main()
