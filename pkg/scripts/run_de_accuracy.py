#!/usr/bin/env python3
"""Sum-rate approximation accuracy versus antenna count.

Sweeps the deterministic-equivalent relative error against a 1000-draw
Monte-Carlo reference over n_t in {16, 32, 64, 128} and writes a CSV.
Extra CLI flags (e.g. --channel random, --bits, --snr) pass straight
through to `statsched de-accuracy`.
"""

import sys

from statsched.cli import main

if __name__ == "__main__":
    argv = ["de-accuracy", "--trials", "10", "--seed", "42", "--out", "de_accuracy.csv"]
    sys.exit(main(argv + sys.argv[1:]))
