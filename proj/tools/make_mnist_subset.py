#!/usr/bin/env python3
"""Write the 5000-record MNIST sample bundled with mlxtend as gzipped IDX files.

Usage: make_mnist_subset.py OUT_DIR [path/to/mlxtend.whl]

Without a wheel path the installed mlxtend package is used. The output pair
(images-idx3-ubyte.gz, labels-idx1-ubyte.gz) is read by `qelm ingest`.
"""
import gzip
import os
import struct
import sys
import zipfile


def load_csv(wheel):
    member = "mlxtend/data/data/mnist_5k.csv.gz"
    if wheel:
        raw = zipfile.ZipFile(wheel).read(member)
    else:
        import mlxtend
        with open(os.path.join(os.path.dirname(mlxtend.__file__), "data", "data", "mnist_5k.csv.gz"), "rb") as f:
            raw = f.read()
    rows = gzip.decompress(raw).decode().splitlines()
    images, labels = [], []
    for row in rows:
        vals = [int(float(v)) for v in row.split(",")]
        images.append(bytes(vals[:-1]))
        labels.append(vals[-1])
    return images, labels


def main():
    out = sys.argv[1]
    wheel = sys.argv[2] if len(sys.argv) > 2 else None
    images, labels = load_csv(wheel)
    os.makedirs(out, exist_ok=True)
    with gzip.GzipFile(os.path.join(out, "images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        for img in images:
            f.write(img)
    with gzip.GzipFile(os.path.join(out, "labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))
    print(f"wrote {len(images)} records to {out}")


if __name__ == "__main__":
    main()
