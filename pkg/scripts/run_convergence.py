#!/usr/bin/env python3
"""Objective-versus-iteration traces of the momentum Frank-Wolfe scheduler.

Averages convergence traces over random correlation draws for activation
reward weights 0, 10 and 20 and writes one trace row per iteration.
Extra CLI flags pass straight through to `statsched converge`.
"""

import sys

from statsched.cli import main

if __name__ == "__main__":
    argv = [
        "converge",
        "--penalties",
        "0,10,20",
        "--iters",
        "500",
        "--trials",
        "100",
        "--seed",
        "7",
        "--channel",
        "random",
        "--out",
        "convergence.csv",
    ]
    sys.exit(main(argv + sys.argv[1:]))
