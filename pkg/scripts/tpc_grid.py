"""Solve the long-term power-control grid and print per-policy diagnostics.

One line per (scheme, M, rho, SNR); about 4 minutes on one core for the default grid.
"""

import argparse
import time

from miso_outage import analytic, tpc
from miso_outage.model import db_to_linear


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--M", nargs="+", type=int, default=[2, 4])
    parser.add_argument("--rho", nargs="+", type=float, default=[0.5, 0.9, 0.999])
    parser.add_argument("--snr-db", nargs="+", type=float, default=[0.0, 5.0, 10.0, 15.0, 20.0])
    parser.add_argument("--R", type=float, default=2.0)
    args = parser.parse_args(argv)

    print("scheme,M,rho,snr_db,mean_power,max_dev,pout_tpc,pout_short,seconds")
    for scheme in tpc.TPC_SCHEMES:
        for M in args.M:
            for rho in args.rho:
                for snr in args.snr_db:
                    P = float(db_to_linear(snr))
                    t0 = time.perf_counter()
                    pol = tpc.solve_policy(scheme, M, args.R, P, rho)
                    dt = time.perf_counter() - t0
                    if scheme == tpc.USPA_TPC:
                        short = float(analytic.pout_uspa(M, args.R, P))
                    else:
                        short = float(analytic.pout_bfic(M, args.R, P, rho))
                    print(
                        f"{scheme},{M},{rho},{snr},{tpc.mean_power(pol):.9f},"
                        f"{tpc.max_stationarity_deviation(pol):.3e},{tpc.pout_tpc(pol):.6e},{short:.6e},{dt:.1f}",
                        flush=True,
                    )


if __name__ == "__main__":
    main()
