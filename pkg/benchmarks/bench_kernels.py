"""Compare the compiled kernels with the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--rows 20000]

Prints one line per kernel with the best-of-``repeat`` wall time of each
backend and the speed-up.  Results are checked for agreement first.
"""
import argparse
import timeit

import numpy as np

from conegroup._kernels import _pyfallback, facet_margins, quad_margins, sproc_min_batch
from conegroup.cones import Polyhedral
from conegroup.gallery import cone_3_1, generator_3_1
from conegroup.linalg import expm

try:
    from conegroup._kernels import _fast
except ImportError:
    _fast = None


def cases(rows, seed):
    rng = np.random.default_rng(seed)
    K = cone_3_1()
    Y = rng.normal(size=(rows, 4))
    G = rng.normal(size=(12, 5))
    G[:, 0] = np.abs(G[:, 0]) + 0.5
    H = Polyhedral(G).facets
    Y5 = rng.normal(size=(rows, 5))
    ts = np.linspace(0.0, 100.0, 2001)
    A = generator_3_1()
    Ms = np.array([expm(A, t).T @ K.Qn @ expm(A, t) for t in ts])
    his = 2 * np.linalg.norm(Ms, ord=2, axis=(1, 2)) / np.min(np.abs(np.linalg.eigvalsh(K.Qn)))
    return {
        f"quad_margins ({rows} x 4)": lambda impl: quad_margins(Y, K.Qn, K.apex_unit, impl=impl),
        f"facet_margins ({rows} x 5, {H.shape[0]} facets)":
            lambda impl: facet_margins(Y5, H, impl=impl),
        f"sproc_min_batch ({len(ts)} x 4x4)":
            lambda impl: sproc_min_batch(Ms, K.Qn, his, impl=impl)[1],
    }


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--rows", type=int, default=20000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    if _fast is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    print(f"{'kernel':<42} {'cython':>10} {'numpy':>10} {'speed-up':>9}")
    for name, fn in cases(args.rows, args.seed).items():
        a, b = fn(_fast), fn(_pyfallback)
        if not np.allclose(a, b, atol=1e-8):
            raise SystemExit(f"{name}: backends disagree (max diff {np.abs(a - b).max():.3g})")
        tf = min(timeit.repeat(lambda: fn(_fast), number=1, repeat=args.repeat))
        tp = min(timeit.repeat(lambda: fn(_pyfallback), number=1, repeat=args.repeat))
        print(f"{name:<42} {tf * 1e3:>8.2f}ms {tp * 1e3:>8.2f}ms {tp / tf:>8.1f}x")


if __name__ == "__main__":
    main()
