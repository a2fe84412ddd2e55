#!/usr/bin/env python3
"""Run the three-variant comparison on one shared dataset.

Writes a config file per variant (classical baseline, circuit classifier
with classical weights, circuit classifier with quantum-held weights moved
by teleportation), runs them through the compare mode, and leaves a single
combined CSV ready for plotting accuracy-versus-round curves.
"""
import argparse
import sys
from pathlib import Path

from qfedring.cli import main as cli_main

VARIANTS = {
    "cfl": {"model": "cfl"},
    "qfl-classical": {"model": "qfl-classical"},
    "qfl-quantum": {"model": "qfl-quantum", "transport": "teleport"},
}


def parse_args(argv):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out-dir", default="comparison", help="where configs and the CSV land")
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--clients", type=int, default=3)
    p.add_argument("--local-epochs", type=int, default=5)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--noise", type=float, default=0.1)
    return p.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    config_paths = []
    for name, settings in VARIANTS.items():
        lines = dict(settings)
        lines.update(
            rounds=args.rounds,
            clients=args.clients,
            local_epochs=args.local_epochs,
            seed=args.seed,
            noise=args.noise,
        )
        path = out_dir / f"{name}.cfg"
        path.write_text("".join(f"{k} = {v}\n" for k, v in lines.items()))
        config_paths.append(str(path))

    csv_path = out_dir / "comparison.csv"
    code = cli_main(["--compare", *config_paths, "--out", str(csv_path)])
    if code == 0:
        print(f"combined metrics: {csv_path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
