"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Also runs one end-to-end workload per backend (a 64-unit GCN trained on
800 random graphs, and a 20-tree forest on 800 x 1024 fingerprint-like
bits) and checks that both backends give bit-identical outputs.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from molbench.kernels import available_backends


def kernel_cases(rng):
    n_edges, n_nodes, d = 60_000, 20_000, 64
    v = rng.normal(size=(n_edges, d))
    idx = np.sort(rng.integers(0, n_nodes, size=n_edges))
    X = rng.integers(0, 2, size=(800, 1024)).astype(float)
    Xc = rng.integers(0, 5, size=(800, 64)) * 0.25
    y = rng.normal(size=800)
    rows = rng.integers(0, 800, size=800)
    feats = rng.permutation(1024)[:32]
    return {
        "scatter_add_rows": lambda k: k.scatter_add_rows(v, idx, n_nodes),
        "segment_max": lambda k: k.segment_max(v, idx, n_nodes),
        "best_split (binary)": lambda k: k.best_split(X, y, rows, feats, 1),
        "best_split (general)": lambda k: k.best_split(Xc, y, rows, np.arange(32), 1),
    }


WORKLOAD = r"""
import hashlib, sys, time, numpy as np
from molbench import kernels
from molbench.graphrep import MolGraph
from molbench.models import ModelConfig, train, rf_fit, rf_predict
rng = np.random.default_rng(0)
graphs = []
for _ in range(800):
    n = int(rng.integers(5, 30))
    e = np.array([(int(rng.integers(0, i)), i) for i in range(1, n)])
    graphs.append(MolGraph(rng.normal(size=(n, 6)), e))
y = rng.normal(size=800)
t = time.perf_counter()
m = train(ModelConfig("gcn", hidden_dim=64, epochs=30, lr=1e-2), graphs, y)
t_gcn = time.perf_counter() - t
X = rng.integers(0, 2, size=(800, 1024)).astype(float)
t = time.perf_counter()
f = rf_fit(X, y, n_trees=20)
t_rf = time.perf_counter() - t
digest = hashlib.sha256(m.predict(graphs).tobytes() + rf_predict(f, X).tobytes()).hexdigest()[:16]
print(kernels.BACKEND, t_gcn, t_rf, digest)
"""


def run_workload(pure: bool):
    env = dict(os.environ)
    env.pop("MOLBENCH_PURE", None)
    if pure:
        env["MOLBENCH_PURE"] = "1"
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True)
    name, t_gcn, t_rf, digest = out.stdout.split()
    return name, float(t_gcn), float(t_rf), digest


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-workload", action="store_true")
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the numpy fallback is available")
    cases = kernel_cases(np.random.default_rng(0))
    print(f"{'kernel':<22}" + "".join(f"{b:>12}" for b in backends) + "     speedup   identical")
    for name, fn in cases.items():
        times = {b: min(timeit.repeat(lambda: fn(k), number=1, repeat=args.repeat)) for b, k in backends.items()}
        outs = [fn(k) for k in backends.values()]
        same = all(np.array_equal(np.asarray(o, dtype=object), np.asarray(outs[0], dtype=object)) for o in outs)
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<22}" + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends) + f"{speed:>11.1f}x{same!s:>12}")

    if args.skip_workload:
        return
    print()
    print(f"{'workload':<22}{'gcn train':>12}{'rf fit':>12}")
    digests = set()
    for pure in ([False, True] if "cython" in backends else [True]):
        name, t_gcn, t_rf, digest = run_workload(pure)
        digests.add(digest)
        print(f"{name:<22}{t_gcn:>11.2f}s{t_rf:>11.2f}s")
    print(f"bit-identical outputs across backends: {len(digests) == 1}")


if __name__ == "__main__":
    main()
