"""Run the acceptance criteria and print one PASS/FAIL line each.

Takes roughly 8-10 minutes on a single core (criterion 7 solves 60
power-control policies; criteria 1 and 6 draw 10^7 samples per point).

    python scripts/run_acceptance.py [-k criterion_03]
"""

import argparse
import pathlib
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[1]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("-k", default=None, help="pytest -k expression to select criteria")
    args = parser.parse_args(argv)
    cmd = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider", "--rootdir", str(ROOT)]
    if args.k:
        cmd += ["-k", args.k]
    return int(pytest.main(cmd))


if __name__ == "__main__":
    sys.exit(main())
