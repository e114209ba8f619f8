"""Converts a synthetic SMPL-layout archive and poses it with the CLI."""

import json
import os
import subprocess
import sys
import tempfile

import numpy as np

exe, script = sys.argv[1], sys.argv[2]
rng = np.random.default_rng(4)
n, j, s = 30, 5, 3
parents = np.array([4294967295, 0, 1, 0, 3], dtype=np.uint32)
weights = rng.random((n, j))
weights /= weights.sum(1, keepdims=True)
regressor = rng.random((j, n))
regressor /= regressor.sum(1, keepdims=True)
faces = np.arange(n, dtype=np.uint32).reshape(-1, 3)
model = dict(
    v_template=rng.normal(size=(n, 3)) * 0.1,
    shapedirs=rng.normal(size=(n, 3, 10)) * 0.01,
    posedirs=rng.normal(size=(n, 3, 9 * (j - 1))) * 0.001,
    J_regressor=regressor,
    weights=weights,
    kintree_table=np.stack([parents, np.arange(j, dtype=np.uint32)]),
    f=faces,
)

with tempfile.TemporaryDirectory() as d:
    npz = os.path.join(d, "m.npz")
    np.savez(npz, **model)
    bsm = os.path.join(d, "m.bsm1")
    subprocess.run([sys.executable, script, npz, bsm, "--num-betas", str(s)], check=True)
    raw = open(bsm, "rb").read()
    assert raw[:4] == b"BSM1"
    assert np.frombuffer(raw[4:24], "<u4").tolist() == [n, j, s, n // 3, 0]

    poses = os.path.join(d, "p.json")
    json.dump([[0.0] * (3 * j)], open(poses, "w"))
    obj = os.path.join(d, "rest.obj")
    subprocess.run([exe, "pose", "--model", bsm, "--poses", poses, "--out", obj], check=True)
    verts = np.array([[float(x) for x in l.split()[1:4]] for l in open(obj) if l.startswith("v ")])
    assert verts.shape == (n, 3)
    assert np.abs(verts - model["v_template"]).max() < 1e-6, np.abs(verts - model["v_template"]).max()

    beta = ",".join(["0.5", "-1", "2"])
    subprocess.run([exe, "pose", "--model", bsm, "--poses", poses, "--beta", beta, "--out", obj], check=True)
    shaped = np.array([[float(x) for x in l.split()[1:4]] for l in open(obj) if l.startswith("v ")])
    expect = model["v_template"] + model["shapedirs"][:, :, :s] @ np.array([0.5, -1.0, 2.0])
    assert np.abs(shaped - expect).max() < 1e-6
print("converter ok")
