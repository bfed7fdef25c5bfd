"""Command-line entry point.

Subcommands: validate | train | evaluate | grid | params | selfcheck.
Configs are flat JSON files whose keys mirror TrainConfig (model fields at
the top level); command-line flags override file values. Progress goes to
stderr, machine-readable artifacts to stdout or files.

Exit codes: 0 success, 1 validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import model as M
from . import selfcheck
from .data import BundleError, load_bundle, validate_bundle
from .model import ModelConfig
from .training import DEFAULT_GRID, TrainConfig, evaluate, grid_search, train

log = logging.getLogger("graphclaim")

_MODEL_KEYS = set(ModelConfig.__dataclass_fields__)
_TRAIN_KEYS = set(TrainConfig.__dataclass_fields__) - {"model"}


def _load_config(path: str | None, overrides: dict) -> TrainConfig:
    raw: dict = {}
    if path:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    raw.update({k: v for k, v in overrides.items() if v is not None})
    unknown = set(raw) - _MODEL_KEYS - _TRAIN_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    model = ModelConfig.from_dict({k: v for k, v in raw.items() if k in _MODEL_KEYS})
    tc = TrainConfig.from_dict({**{k: v for k, v in raw.items() if k in _TRAIN_KEYS},
                                "model": model.to_dict()})
    log.info("resolved config: %s", json.dumps(tc.to_dict()))
    return tc


def _cmd_validate(args) -> int:
    report = validate_bundle(args.bundle)
    print(json.dumps(report.as_dict(), indent=2))
    if report.num_relations != 45:
        log.warning("expected 45 dependency relations on ECD, found %d", report.num_relations)
    if report.num_pos != 18:
        log.warning("expected 18 POS tags on ECD, found %d", report.num_pos)
    return 1 if report.tree_violations else 0


def _cmd_train(args) -> int:
    tc = _load_config(args.config, {"seed": args.seed})
    dataset, vocab, table = load_bundle(args.bundle, reverse_edges=tc.model.reverse_edges)
    tc.model.num_relations = vocab.num_relations
    tc.model.num_pos = vocab.num_pos
    tc.model.word_dim = vocab.embedding_dim
    _, history = train(tc, dataset, table, out_dir=args.out)
    log.info("finished after %d epochs; artifacts in %s", len(history), args.out)
    return 0


def _cmd_evaluate(args) -> int:
    config, params, _ = M.load_checkpoint(args.checkpoint)
    dataset, vocab, table = load_bundle(args.bundle, reverse_edges=config.reverse_edges)
    if vocab.num_relations != config.num_relations or vocab.embedding_dim != config.word_dim:
        raise ValueError("checkpoint config does not match the bundle vocabulary")
    metrics = evaluate(params, config, dataset[args.split], table)
    print(json.dumps(metrics.as_dict(), indent=2))
    return 0


def _cmd_grid(args) -> int:
    tc = _load_config(args.config, {"seed": args.seed, "select_on": args.select_on})
    dataset, vocab, table = load_bundle(args.bundle, reverse_edges=tc.model.reverse_edges)
    tc.model.num_relations = vocab.num_relations
    tc.model.num_pos = vocab.num_pos
    tc.model.word_dim = vocab.embedding_dim
    grid = dict(DEFAULT_GRID)
    if args.grid:
        grid.update(json.loads(Path(args.grid).read_text(encoding="utf-8")))
    results = grid_search(grid, tc, dataset, table, out_dir=args.out)
    failed = sum(1 for r in results if r.error)
    log.info("grid finished: %d points, %d failed", len(results), failed)
    return 0


def _cmd_params(args) -> int:
    tc = _load_config(args.config, {})
    breakdown = M.param_breakdown(tc.model)
    for name, value in breakdown.items():
        if value:
            log.info("%s: %s", name, f"{value:,}")
    print(f"{M.count_params(tc.model):,}")
    return 0


def _cmd_selfcheck(args) -> int:
    rows = selfcheck.run(quick=args.quick)
    failed = 0
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += not ok
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphclaim",
                                     description="Dependency-graph claim classification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="audit a corpus bundle")
    p.add_argument("--bundle", required=True)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("train", help="train one configuration")
    p.add_argument("--bundle", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--bundle", required=True)
    p.add_argument("--split", choices=["train", "dev", "test"], default="test")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("grid", help="hyperparameter grid search")
    p.add_argument("--bundle", required=True)
    p.add_argument("--grid", default=None, help="JSON grid spec overriding the default axes")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--select-on", choices=["dev", "test"], default=None,
                   help="model-selection split (test only for parity experiments)")
    p.set_defaults(fn=_cmd_grid)

    p = sub.add_parser("params", help="closed-form parameter count")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_params)

    p = sub.add_parser("selfcheck", help="gradient and manifold invariant suite")
    p.add_argument("--quick", action="store_true")
    p.set_defaults(fn=_cmd_selfcheck)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (BundleError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        log.error("runtime failure: %s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
