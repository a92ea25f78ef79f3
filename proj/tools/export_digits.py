#!/usr/bin/env python3
"""One-time export of the scikit-learn 8x8 digits set to IDX files.

Writes data/digits-{train,test}-{images,labels}.idx: the first 1000 samples
train, the remaining 797 test. Pixel intensities (0..16) are rescaled to
bytes so the loader's /255 puts them back in [0, 1].

Point KNET_MNIST_DIR at a directory holding a real MNIST export to swap the
full-size set in without touching any config.
"""

import struct
import sys
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def write_images(path: Path, images: np.ndarray) -> None:
    n, h, w = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, h, w))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path: Path, labels: np.ndarray) -> None:
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.astype(np.uint8).tobytes())


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"
    out.mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    images = np.round(digits.images * 255.0 / 16.0).astype(np.uint8)
    labels = digits.target

    n_train = 1000
    write_images(out / "digits-train-images.idx", images[:n_train])
    write_labels(out / "digits-train-labels.idx", labels[:n_train])
    write_images(out / "digits-test-images.idx", images[n_train:])
    write_labels(out / "digits-test-labels.idx", labels[n_train:])
    print(f"wrote {n_train} train / {len(labels) - n_train} test samples to {out}")


if __name__ == "__main__":
    main()
