"""Batch command-line interface: run scripts and validate saved state dirs."""
from __future__ import annotations

import argparse
import sys

from .core import OpError
from .io import load_state_dir, save_state_dir
from .script import parse_script, ScriptRunner


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mwz", description="Interactive probabilistic model construction "
        "for tabular data")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a script file")
    p_run.add_argument("script")
    p_run.add_argument("--seed", type=int, default=0,
                       help="seed propagated into every inference run")
    p_run.add_argument("--out", help="directory to save the final state into")
    p_val = sub.add_parser("validate", help="check a saved state directory")
    p_val.add_argument("dir")
    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            with open(args.script, encoding="utf-8") as f:
                text = f.read()
        except OSError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
        runner = ScriptRunner(seed=args.seed)
        try:
            commands = parse_script(text)
            for cmd in commands:
                runner.execute(cmd)
                for line in runner.transcript:
                    print(line)
                runner.transcript.clear()
            if args.out:
                save_state_dir(runner.vs.state, args.out)
        except OpError as e:
            for line in runner.transcript:
                print(line)
            loc = f" at {e.location}" if e.location else ""
            print(f"error [{e.kind.name}]{loc}: {e.message}", file=sys.stderr)
            return 1
        return 0

    if args.command == "validate":
        try:
            load_state_dir(args.dir)
        except OpError as e:
            print(f"invalid: [{e.kind.name}] {e.message}", file=sys.stderr)
            return 1
        print("ok")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
