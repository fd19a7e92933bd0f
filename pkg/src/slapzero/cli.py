"""Command line entry point: train, synth {build,train,grid}, eval, play,
canon-bench. Exit codes: 0 success, 1 usage error, 2 runtime error."""
from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import board as board_mod
from . import config as config_mod
from . import symmetry
from .board import BLACK, WHITE, BoardConfig, Status
from .evaluation import evaluate_checkpoint
from .mcts import MctsAgent, NetEvaluator, SearchConfig
from .net import PolicyValueNet, Trainer, load_checkpoint, save_checkpoint
from .pipeline import SelfPlayPipeline
from .seeding import sub_rng, sub_seed
from .synthetic import (ConvergenceRecord, GRID_SPEC, build_dataset,
                        encode_arrays, grid_combinations, grid_driver,
                        load_dataset, save_dataset, supervised_run)

_VAL_SET_SIZE = 1776


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _load_run_config(args) -> config_mod.RunConfig:
    if getattr(args, "config", None):
        cfg = config_mod.from_file(args.config)
    else:
        cfg = config_mod.RunConfig()
    if getattr(args, "mode", None):
        cfg.mode = args.mode
    if getattr(args, "games", None) is not None:
        cfg.games = args.games
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "board_size", None) is not None:
        cfg.board_size = args.board_size
    return cfg


def _validation_arrays(cfg: config_mod.RunConfig):
    """Fixed seeded synthetic validation set for lr adaptation."""
    board_cfg = BoardConfig(size=cfg.board_size)
    seeds = [sub_seed(cfg.seed, "valset", i) for i in range(8)]
    dataset = build_dataset(board_cfg, seeds,
                            split_seed=sub_seed(cfg.seed, "valsplit"))
    mode = {"slap": "slap", "augment8": "raw", "slap_cc": "cc_raw"}[cfg.mode]
    return encode_arrays(dataset.validation, mode)


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    if args.workers and args.workers > 1:
        print("note: training is single-process for determinism; "
              "--workers applies to eval", file=sys.stderr)
    run_dir = args.out or f"runs/train-{cfg.mode}-seed{cfg.seed}"
    os.makedirs(run_dir, exist_ok=True)
    cfg.to_file(os.path.join(run_dir, "config.json"))
    board_cfg = BoardConfig(size=cfg.board_size)
    hyper = cfg.train_hyper()
    if args.resume:
        net, hyper, step = load_checkpoint(args.resume, cfg.net_config())
        trainer = Trainer(net, hyper)
        trainer.step_count = step
    else:
        net = PolicyValueNet(cfg.net_config(),
                             init_seed=sub_seed(cfg.seed, "net-init"))
        trainer = Trainer(net, hyper)
    validation = None if args.no_validation else _validation_arrays(cfg)
    pipeline = SelfPlayPipeline(board_cfg, net, trainer, cfg.search,
                                cfg.rl_schedule(), cfg.mode, cfg.seed,
                                run_dir=run_dir, validation_arrays=validation)
    pipeline.run()
    print(run_dir)
    return 0


def cmd_synth_build(args) -> int:
    board_cfg = BoardConfig(size=args.board_size or 8)
    if args.seeds:
        seeds = args.seeds
    else:
        seeds = [sub_seed(args.seed or 0, "dataset", i) for i in range(8)]
    dataset = build_dataset(board_cfg, seeds,
                            split_seed=args.split_seed)
    out = args.out or "dataset"
    save_dataset(dataset, out)
    print(json.dumps({"out": out,
                      "total": len(dataset.train) + len(dataset.validation),
                      "train": len(dataset.train),
                      "validation": len(dataset.validation)}, sort_keys=True))
    return 0


def cmd_synth_train(args) -> int:
    dataset = load_dataset(args.dataset)
    mode = "slap" if args.use_slap else args.mode
    from .net import TrainHyper
    hyper = TrainHyper(optimizer="sgd" if args.sgd else "adam",
                       lr=args.lr, l2=args.l2)
    from .net import NetConfig
    net_config = NetConfig(board_size=dataset.config.size,
                           in_channels=8 if mode == "slap_cc" else 4,
                           num_res_blocks=args.num_res_blocks,
                           extra_act_fc=args.extra_act_fc,
                           dropout=args.dropout)
    record = supervised_run(dataset, mode, hyper, args.iterations,
                            seed=args.seed or 0, net_config=net_config,
                            train_limit=args.train_limit)
    payload = json.dumps(record.to_json(), sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(payload + "\n")
    print(payload)
    return 0


def cmd_synth_grid(args) -> int:
    dataset = load_dataset(args.dataset)
    with open(args.spec) as f:
        spec = json.load(f)
    unknown = set(spec) - set(GRID_SPEC)
    if unknown:
        raise UsageError(f"unknown grid keys: {sorted(unknown)}")
    combos = grid_combinations({k: tuple(v) for k, v in spec.items()}
                               if spec else None)
    out = args.out or "grid-results"
    os.makedirs(out, exist_ok=True)
    records = grid_driver(dataset, combos, args.iterations,
                          seed=args.seed or 0, out_dir=out)
    ranking = [r.to_json() for r in records]
    with open(os.path.join(out, "ranking.json"), "w") as f:
        json.dump(ranking, f, sort_keys=True, indent=2)
    print(json.dumps({"out": out, "runs": len(records)}, sort_keys=True))
    return 0


def cmd_eval(args) -> int:
    if not os.path.exists(args.checkpoint):
        raise FileNotFoundError(f"checkpoint not found: {args.checkpoint}")
    cfg = _load_run_config(args)
    board_cfg = BoardConfig(size=cfg.board_size)
    spec = {"checkpoint": args.checkpoint,
            "use_slap": cfg.mode == "slap",
            "extend_cc": cfg.mode == "slap_cc",
            "net_playouts": cfg.eval.net_playouts,
            "c_puct": cfg.search.c_puct}
    tiers = args.tiers or cfg.eval.tiers
    report = evaluate_checkpoint(spec, board_cfg, seed=cfg.seed, tiers=tiers,
                                 games_per_tier=args.games_per_tier
                                 or cfg.eval.games_per_tier,
                                 workers=args.workers)
    payload = json.dumps(report.to_json(), sort_keys=True, indent=2)
    if args.out:
        with open(args.out, "w") as f:
            f.write(payload + "\n")
    print(payload)
    return 0


def cmd_play(args) -> int:
    cfg = _load_run_config(args)
    board_cfg = BoardConfig(size=cfg.board_size)
    net, _, _ = load_checkpoint(args.checkpoint)
    evaluator = NetEvaluator(net, use_slap=cfg.mode == "slap",
                             extend_cc=cfg.mode == "slap_cc")
    search = SearchConfig(c_puct=cfg.search.c_puct, n_playouts=args.playouts)
    agent = MctsAgent(evaluator, search, rng=sub_rng(cfg.seed, "play"),
                      greedy=True)
    human = BLACK if args.human_color.upper() == "X" else WHITE
    state = board_mod.new_game(board_cfg)
    print(board_mod.format_state(state))
    while state.status is Status.ONGOING:
        if state.to_move == human:
            try:
                line = input("your move (r,c): ").strip()
            except EOFError:
                print("bye")
                return 0
            try:
                r, c = (int(x) for x in line.split(","))
                state = state.play(r * board_cfg.size + c)
            except Exception:
                print("illegal input, use r,c with an empty in-range cell")
                continue
        else:
            move = agent.move(state)
            print(f"agent plays {move // board_cfg.size},{move % board_cfg.size}")
            state = state.play(move)
        print(board_mod.format_state(state))
    if state.status is Status.DRAW:
        print("draw")
    else:
        who = "you" if state.winner == human else "agent"
        print(f"{who} win{'' if who == 'you' else 's'}")
    return 0


def cmd_canon_bench(args) -> int:
    n = args.n_states
    rng = sub_rng(args.seed or 0, "canon-bench")
    board_cfg = BoardConfig(size=args.board_size or 8)
    states = []
    for _ in range(n):
        state = board_mod.new_game(board_cfg)
        for _ in range(int(rng.integers(0, 30))):
            if state.status is not Status.ONGOING:
                break
            state = state.play(int(rng.choice(state.legal_moves())))
        states.append(board_mod.encode_planes(state))
    policies = [np.full(board_cfg.size ** 2, 1.0 / board_cfg.size ** 2)
                for _ in range(n)]
    t0 = time.perf_counter()
    for planes in states:
        symmetry.slap(planes)
    slap_seconds = time.perf_counter() - t0
    t0 = time.perf_counter()
    for planes, pi in zip(states, policies):
        symmetry.augment_8(planes, pi)
    augment_seconds = time.perf_counter() - t0
    bytes_per_state = states[0].nbytes if states else 0
    report = {
        "n_states": n,
        "slap_seconds": slap_seconds,
        "augment8_seconds": augment_seconds,
        "slap_states_per_second": n / slap_seconds if slap_seconds else None,
        "augment8_states_per_second": (n / augment_seconds
                                       if augment_seconds else None),
        "stored_entries": {"slap": n, "augment8": 8 * n},
        "stored_bytes": {"slap": n * bytes_per_state,
                         "augment8": 8 * n * bytes_per_state},
    }
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="slapzero")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="run config JSON file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", help="output directory or file")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--board-size", type=int, default=None)

    p = sub.add_parser("train", help="self-play reinforcement learning run")
    add_common(p)
    p.add_argument("--mode", choices=("augment8", "slap", "slap_cc"))
    p.add_argument("--games", type=int, default=None)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--no-validation", action="store_true",
                   help="skip the synthetic validation set / lr adaptation")
    p.set_defaults(func=cmd_train)

    synth = sub.add_parser("synth", help="synthetic supervised experiments")
    synth_sub = synth.add_subparsers(dest="synth_command", required=True)

    p = synth_sub.add_parser("build", help="generate the labeled dataset")
    add_common(p)
    p.add_argument("--seeds", type=int, nargs="*", default=None,
                   help="8 explicit set seeds (default: derived from --seed)")
    p.add_argument("--split-seed", type=int, default=0)
    p.set_defaults(func=cmd_synth_build)

    p = synth_sub.add_parser("train", help="one supervised A/B arm")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--mode", choices=("augment8", "slap", "slap_cc"),
                   default="augment8")
    p.add_argument("--use_slap", action="store_true")
    p.add_argument("--iterations", type=int, default=1000)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--l2", type=float, default=1e-4)
    p.add_argument("--sgd", action="store_true")
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--num-res-blocks", type=int, default=0)
    p.add_argument("--extra-act-fc", action="store_true")
    p.add_argument("--train-limit", type=int, default=None)
    p.set_defaults(func=cmd_synth_train)

    p = synth_sub.add_parser("grid", help="hyperparameter grid driver")
    add_common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--spec", required=True, help="JSON grid spec file")
    p.add_argument("--iterations", type=int, default=1000)
    p.set_defaults(func=cmd_synth_grid)

    p = sub.add_parser("eval", help="multi-tier evaluation of a checkpoint")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("augment8", "slap", "slap_cc"))
    p.add_argument("--tiers", type=int, nargs="*", default=None)
    p.add_argument("--games-per-tier", type=int, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("play", help="interactive terminal game")
    add_common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("augment8", "slap", "slap_cc"))
    p.add_argument("--human-color", choices=("X", "O", "x", "o"), default="X")
    p.add_argument("--playouts", type=int, default=400)
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("canon-bench",
                       help="canonicalization vs augmentation micro-benchmark")
    add_common(p)
    p.add_argument("--n-states", type=int, default=1000)
    p.set_defaults(func=cmd_canon_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (KeyboardInterrupt, BrokenPipeError):
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
