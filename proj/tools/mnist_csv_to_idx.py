#!/usr/bin/env python3
"""Convert a CSV of MNIST rows (784 pixel columns followed by a label) into
gzip-compressed IDX files.

Used to produce data/mnist-5k/ from the 5000-image MNIST sample shipped with
mlxtend (mlxtend/data/data/mnist_5k.csv.gz).
"""
import argparse
import gzip
import struct


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv", help="input .csv or .csv.gz")
    ap.add_argument("out_prefix", help="writes <prefix>-images-idx3-ubyte.gz and <prefix>-labels-idx1-ubyte.gz")
    args = ap.parse_args()

    opener = gzip.open if args.csv.endswith(".gz") else open
    pixels, labels = bytearray(), bytearray()
    with opener(args.csv, "rt") as fh:
        for line in fh:
            fields = line.strip().split(",")
            if len(fields) != 785:
                continue
            pixels.extend(int(float(v)) for v in fields[:784])
            labels.append(int(float(fields[784])))
    n = len(labels)

    # mtime=0 keeps the output byte-stable.
    with gzip.GzipFile(args.out_prefix + "-images-idx3-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">IIII", 0x00000803, n, 28, 28))
        fh.write(bytes(pixels))
    with gzip.GzipFile(args.out_prefix + "-labels-idx1-ubyte.gz", "wb", mtime=0) as fh:
        fh.write(struct.pack(">II", 0x00000801, n))
        fh.write(bytes(labels))
    print(f"wrote {n} samples")


if __name__ == "__main__":
    main()
