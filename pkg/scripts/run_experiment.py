#!/usr/bin/env python3
"""Run the default two-arm experiment and drop all artifacts into ./out.

Equivalent to `simlab run --out out`; edit the config block below or pass
--seed/--out/--config to explore variants.
"""

import sys

from isatrain.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if not any(a.startswith("--out") for a in args):
        args = ["--out", "out"] + args
    sys.exit(main(["run"] + args))
