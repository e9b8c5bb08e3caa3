"""Run the shipped configs and print the paired comparisons.

    python scripts/run_benchmarks.py                 # all ten configs
    python scripts/run_benchmarks.py lame_airy rect_navier
"""
import argparse
import sys
from pathlib import Path

from biharmonic_pinn import cli

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"
PAIRS = [
    ("lame_dense", "lame_airy"),
    ("foundation_solo", "foundation_conjugate"),
    ("circular_dense", "circular_parametric"),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="config stems (default: all)")
    ap.add_argument("--output-root", default="runs")
    args = ap.parse_args(argv)

    names = args.names or sorted(p.stem for p in CONFIG_DIR.glob("*.toml"))
    root = Path(args.output_root).resolve()
    failed = []
    for name in names:
        code, _ = cli.run(CONFIG_DIR / f"{name}.toml", root / name)
        if code != cli.EXIT_OK:
            failed.append(name)
    for a, b in PAIRS:
        if (root / a / "history.csv").is_file() and (root / b / "history.csv").is_file():
            print()
            print(cli.compare(root / a, root / b)[1])
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
