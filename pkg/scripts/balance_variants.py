"""Compare readings of the balance constant on the same CBD samples.

max_gs: max over GS lines (the definition used by the library).
mean_gs: mean over GS lines. raw_max: max over the raw basis vectors.
Size reduction leaves GS vectors unchanged, so it has no column here.
"""

import argparse

import numpy as np

from modcdpr.cyclotomic import embed_coeffs
from modcdpr.harness import cbd_coeffs, trial_rng
from modcdpr.modgs import embedded_gram_diag


def ratios(norms: np.ndarray) -> np.ndarray:
    n = norms.shape[-1]
    return norms.sum(-1) / (n * np.exp(np.log(norms).mean(-1)))


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=300)
    ap.add_argument("--d", type=int, default=4)
    args = ap.parse_args()
    print("k,max_gs,mean_gs,raw_max")
    for k in range(6, 11):
        n = 2 ** (k - 1)
        acc = np.zeros(3)
        for t in range(args.trials):
            c = cbd_coeffs((args.d, args.d, n), 2, trial_rng(k, t))
            r = ratios(embedded_gram_diag(c))
            raw = ratios((np.abs(embed_coeffs(c)) ** 2).sum(1))
            acc += (r.max(), r.mean(), raw.max())
        m = acc / args.trials
        print(f"{k},{m[0]:.4f},{m[1]:.4f},{m[2]:.4f}")


if __name__ == "__main__":
    main()
