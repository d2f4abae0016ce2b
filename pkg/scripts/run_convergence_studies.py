#!/usr/bin/env python3
"""Joint (dt, ds) refinement studies for every scenario with refinable
residuals; prints the residual tables and measured orders."""

import pathlib
import sys

from gstrands import cli

HERE = pathlib.Path(__file__).resolve().parent

STUDY_CONFIGS = [
    ("chiral_study.yaml", 3),
    ("peakon_strand.yaml", 3),
    ("cdb_study.yaml", 3),
    ("verify_action.yaml", 3),
]


def main():
    failures = 0
    for name, levels in STUDY_CONFIGS:
        print(f"== {name} (levels={levels})")
        code = cli.main(["study", str(HERE / "configs" / name), "--levels", str(levels)])
        if code != 0:
            print(f"   exited with {code}")
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    import os
    os.chdir(HERE)
    sys.exit(main())
