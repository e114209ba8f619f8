#!/usr/bin/env python3
"""Convert an SMPL-style model archive (.npz or a chumpy-free .pkl) to BSM1."""

import argparse
import pickle
import struct
import sys

import numpy as np


def load(path):
    if path.endswith(".npz"):
        return dict(np.load(path, allow_pickle=False))
    with open(path, "rb") as f:
        return pickle.load(f, encoding="latin1")


def dense(a):
    return np.asarray(a.toarray() if hasattr(a, "toarray") else a, dtype=np.float64)


def convert(src, num_betas=None):
    v = dense(src["v_template"])
    n = v.shape[0]
    shapedirs = dense(src["shapedirs"])
    if num_betas is not None:
        shapedirs = shapedirs[:, :, :num_betas]
    s = shapedirs.shape[2]
    posedirs = dense(src["posedirs"]).reshape(3 * n, -1)
    regressor = dense(src["J_regressor"])
    weights = dense(src["weights"])
    j = weights.shape[1]
    if posedirs.shape[1] != 9 * (j - 1):
        sys.exit(f"posedirs has {posedirs.shape[1]} columns, expected {9 * (j - 1)}")
    parents = np.asarray(src["kintree_table"])[0].astype(np.int64)
    parents[parents > j] = -1
    faces = np.asarray(src["f"], dtype=np.uint32)

    out = bytearray(b"BSM1")
    out += struct.pack("<5I", n, j, s, faces.shape[0], 0)
    for m in (v, shapedirs.reshape(3 * n, s), posedirs, regressor, weights):
        out += np.ascontiguousarray(m, dtype="<f4").tobytes()
    out += parents.astype("<i4").tobytes()
    out += faces.astype("<u4").tobytes()
    return bytes(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("model", help="SMPL model file (.npz or .pkl)")
    ap.add_argument("out", help="output .bsm1 path")
    ap.add_argument("--num-betas", type=int, help="keep only the first k shape directions")
    args = ap.parse_args()
    data = convert(load(args.model), args.num_betas)
    with open(args.out, "wb") as f:
        f.write(data)


if __name__ == "__main__":
    main()
