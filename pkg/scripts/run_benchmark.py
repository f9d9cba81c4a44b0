#!/usr/bin/env python3
"""Sum rate versus transmit SNR against exhaustive, greedy, and SUS baselines.

Runs the full scheduler once per statistical window and the SUS baseline
per TTI, on shared channel draws, across SNR 0-20 dB. Extra CLI flags
(e.g. --epsilon, --ttis, --bits) pass straight through to
`statsched benchmark`.
"""

import sys

from statsched.cli import main

if __name__ == "__main__":
    argv = [
        "benchmark",
        "--snr",
        "0,5,10,15,20",
        "--ttis",
        "200",
        "--seed",
        "11",
        "--out",
        "benchmark.csv",
    ]
    sys.exit(main(argv + sys.argv[1:]))
