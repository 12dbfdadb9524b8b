"""Covariance rank of random encodings and the Fourier content of reuploading.

Part one samples random encoding circuits and reports the numerical rank of
the primary-mapping covariance against the 4**n - 1 ceiling.  Part two builds
integer-frequency reuploading circuits and shows that coefficients beyond the
layer count vanish.
"""

import argparse
import math

import numpy as np

from evsampler.analysis import (
    circuit_output_function,
    fourier_coefficients,
    primary_covariance,
    random_encoding,
)
from evsampler.reuploading import FLIPPED_Z, build_reuploading
from evsampler.rng import keyed_generator


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--qubits", type=int, nargs="+", default=[1, 2])
    ap.add_argument("--gates", type=int, default=10)
    ap.add_argument("--layers", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("covariance rank of random encodings")
    print(f"{'n':>3} {'trial':>6} {'rank':>5} {'bound':>6}")
    for n in args.qubits:
        for trial in range(args.trials):
            circuit, weights = random_encoding(n, n, args.gates,
                                               seed=args.seed + 97 * trial)
            rep = primary_covariance(circuit, weights, seed=args.seed)
            print(f"{n:>3} {trial:>6} {rep.numerical_rank:>5} {4**n - 1:>6}")

    print("\nfourier coefficients of integer-frequency reuploading (M=1)")
    print(f"{'L':>3} {'max |c_k|, |k| <= L':>22} {'max |c_k|, |k| > L':>21}")
    for layers in args.layers:
        rc = build_reuploading(1, layers)
        weights = keyed_generator(args.seed, 5).uniform(-math.pi, math.pi,
                                                        size=rc.n_weights)
        weights[list(rc.data_weight_indices())] = 1.0
        f = circuit_output_function(rc.circuit, weights, FLIPPED_Z)
        spec = fourier_coefficients(f, dims=1, cutoff=layers + 2)
        inside = max(abs(spec.coefficient([k])) for k in range(-layers, layers + 1))
        print(f"{layers:>3} {inside:>22.4f} {spec.max_abs_above(layers):>21.2e}")


if __name__ == "__main__":
    main()
