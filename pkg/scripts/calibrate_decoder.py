#!/usr/bin/env python3
"""Run the h = 0 decoder calibration and print the certified operating point.

Thin wrapper over `rqss calibrate`. Exit code 2 means the calibration
failed its verification or optimality certificate.
"""

import argparse
import sys

from rqss.cli import main as rqss_main


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="output directory (default: print JSON to stdout)")
    parser.add_argument("--nmax", type=int, default=20, help="mode cutoff (default: 20)")
    parser.add_argument("--cache-dir", default=None, help="coefficient cache directory")
    args = parser.parse_args(argv)

    job = ["calibrate", "--nmax", str(args.nmax)]
    if args.out:
        job += ["--out", args.out]
    if args.cache_dir:
        job += ["--cache-dir", args.cache_dir]
    return rqss_main(job)


if __name__ == "__main__":
    sys.exit(main())
