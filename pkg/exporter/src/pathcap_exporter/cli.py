"""Command line: train the regime models or export a checkpoint."""

from __future__ import annotations

import argparse
import json
import sys

from .export import ExportError, ExportSpec, export
from .regimes import RegimeConfig, train_regimes


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="pathcap-export")
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train-regimes", help="train and export the three desk-scale regimes")
    t.add_argument("--out", required=True)
    t.add_argument("--n-train", type=int, default=RegimeConfig.n_train)
    t.add_argument("--full-scale", action="store_true", help="use the full 600/400/200 hidden widths")

    e = sub.add_parser("export", help="export a checkpoint via a mapping spec")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--mapping", required=True, help="JSON file: {layers: [...], activation: {...}}")
    e.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "train-regimes":
        cfg = RegimeConfig.full_scale() if args.full_scale else RegimeConfig()
        if args.n_train != cfg.n_train:
            cfg = RegimeConfig(n_train=args.n_train, hidden=cfg.hidden)
        artifacts = train_regimes(cfg, args.out)
        for a in artifacts:
            print(
                f"{a.name:7s} train_acc={a.train_accuracy:.4f} "
                f"test_acc={a.test_accuracy:.4f} -> {a.model_dir}"
            )
        return 0
    try:
        out = export(ExportSpec.from_mapping_file(args.checkpoint, args.mapping, args.out))
    except ExportError as exc:
        print(f"export error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps({"exported": str(out)}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
