"""Write the CSV data (and optional matplotlib scripts) behind figures 1-5."""

import argparse
import sys

from miso_outage import cli


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="figures")
    parser.add_argument("--only", nargs="+", type=int, default=[1, 2, 3, 4, 5], choices=range(1, 6))
    parser.add_argument("--plot-script", action="store_true")
    args = parser.parse_args(argv)

    worst = 0
    for n in args.only:
        extra = ["--plot-script"] if args.plot_script else []
        code = cli.main(["figure", str(n), "--outdir", args.outdir] + extra)
        print(f"figure {n}: exit {code}", file=sys.stderr)
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
