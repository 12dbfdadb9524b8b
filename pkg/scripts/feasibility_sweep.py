"""Sweep the qubit-budget bound over output dimension and observable spread.

Prints the necessary qubit count n_min as a table over M (outputs) and Lambda
(-lambda_min * lambda_max per observable); larger output vectors demand more
qubits, wider spectra fewer.
"""

import argparse
import math

from evsampler.analysis import check_feasibility
from evsampler.circuits import SpectralSummary


def summary_for(lam: float) -> SpectralSummary:
    r = math.sqrt(lam)
    return SpectralSummary(lambda_min=-r, lambda_max=r,
                           spectral_norm=r, capital_lambda=lam)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outputs", type=int, nargs="+",
                    default=[10, 30, 100, 300, 1000])
    ap.add_argument("--lambdas", type=float, nargs="+",
                    default=[0.25, 0.5, 1.0, 2.0, 4.0])
    ap.add_argument("--epsilon", type=float, default=0.1)
    args = ap.parse_args()

    header = "M \\ Lambda" + "".join(f"{lam:>8g}" for lam in args.lambdas)
    print(f"required n_min at epsilon={args.epsilon}")
    print(header)
    for m in args.outputs:
        cells = []
        for lam in args.lambdas:
            rep = check_feasibility(64, m, args.epsilon, [summary_for(lam)] * m)
            cells.append(f"{int(rep.required_n):>8d}")
        print(f"{m:>10d}" + "".join(cells))

    rep = check_feasibility(64, args.outputs[0], args.epsilon,
                            [summary_for(args.lambdas[0])] * args.outputs[0])
    print(f"\nbound maximized at q* = {rep.q_star:g} "
          f"(coefficient {rep.coefficient_at_q_star:.5f})")


if __name__ == "__main__":
    main()
