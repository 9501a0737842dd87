"""Compare the compiled and pure-Python Fincke-Pohst kernels on random lattices."""

import argparse
import time

import numpy as np

from hodgelocus import _fpenum_py

try:
    from hodgelocus import _fpenum
except ImportError:  # extension not built
    _fpenum = None


def random_R(rng, n):
    A = rng.normal(size=(n, n)) + 2 * np.eye(n)
    R = np.linalg.qr(A)[1]
    return R * np.sign(np.diag(R))[:, None]


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ranks", default="3,4,5,6")
    ap.add_argument("--radius2", type=float, default=40.0)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    print(f"{'rank':>4} {'points':>8} {'python_s':>10} {'compiled_s':>11} {'speedup':>8} agree")
    for n in (int(x) for x in args.ranks.split(",")):
        R = random_R(rng, n)
        tp, a = best_of(lambda: _fpenum_py.fincke_pohst(R, args.radius2), args.repeat)
        if _fpenum is None:
            print(f"{n:>4} {len(a):>8} {tp:>10.4f} {'n/a':>11} {'n/a':>8} -")
            continue
        tc, b = best_of(lambda: _fpenum.fincke_pohst(R, args.radius2), args.repeat)
        agree = {tuple(x) for x in np.asarray(a)} == {tuple(x) for x in np.asarray(b)}
        print(f"{n:>4} {len(a):>8} {tp:>10.4f} {tc:>11.4f} {tp / tc:>8.1f} {agree}")


if __name__ == "__main__":
    main()
