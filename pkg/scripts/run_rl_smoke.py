"""Short self-play reinforcement learning run plus a baseline evaluation.

Runs a reduced-budget training loop in one or more storage modes, then plays
the resulting nets and a uniform-random reference against a pure-MCTS
opponent so the two winning rates can be compared on identical seeds.
"""
import argparse
import json
import os

import numpy as np

from slapzero.board import BoardConfig
from slapzero.evaluation import play_match
from slapzero.mcts import (MctsAgent, NetEvaluator, RandomAgent, SearchConfig,
                           pure_mcts_agent)
from slapzero.net import PolicyValueNet, TrainHyper, Trainer
from slapzero.pipeline import RlSchedule, SelfPlayPipeline, default_schedule
from slapzero.config import RunConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--modes", nargs="*", default=["augment8", "slap"])
    parser.add_argument("--games", type=int, default=100)
    parser.add_argument("--playouts", type=int, default=200)
    parser.add_argument("--eval-games", type=int, default=10)
    parser.add_argument("--opponent-playouts", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="results/rl-smoke")
    args = parser.parse_args()

    board_cfg = BoardConfig(size=8)
    os.makedirs(args.out, exist_ok=True)
    summary = {}

    def make_opponent(rng):
        return pure_mcts_agent(args.opponent_playouts, rng)

    def rate_for(make_agent):
        wins, ties, _, _ = play_match(make_agent, make_opponent,
                                      args.eval_games, board_cfg,
                                      seed=args.seed + 99)
        return (wins + 0.5 * ties) / args.eval_games

    summary["random_rate"] = rate_for(lambda rng: RandomAgent(rng))

    for mode in args.modes:
        run_cfg = RunConfig(mode=mode, games=args.games, seed=args.seed)
        net = PolicyValueNet(run_cfg.net_config(), init_seed=args.seed)
        trainer = Trainer(net, TrainHyper(lr=1e-3, l2=1e-4, batch_size=512,
                                          autoclip=True))
        base = default_schedule(mode, args.games)
        schedule = RlSchedule(games_total=args.games,
                              initial_capacity=base.initial_capacity,
                              late_capacity=base.late_capacity)
        run_dir = os.path.join(args.out, mode)
        pipeline = SelfPlayPipeline(board_cfg, net, trainer,
                                    SearchConfig(n_playouts=args.playouts),
                                    schedule, mode, root_seed=args.seed,
                                    run_dir=run_dir)
        metrics = pipeline.run()
        losses = [(m["game"], m["loss"]) for m in metrics
                  if m["loss"] is not None]
        slope = (float(np.polyfit([g for g, _ in losses],
                                  [l for _, l in losses], 1)[0])
                 if len(losses) > 1 else None)

        evaluator = NetEvaluator(net, use_slap=(mode == "slap"),
                                 extend_cc=(mode == "slap_cc"))
        net_rate = rate_for(lambda rng: MctsAgent(
            evaluator, SearchConfig(n_playouts=400), rng=rng, greedy=True))
        summary[mode] = {"loss_slope": slope, "net_rate": net_rate,
                         "games": args.games, "run_dir": run_dir}
        print(json.dumps({mode: summary[mode]}, sort_keys=True))

    with open(os.path.join(args.out, "summary.json"), "w") as f:
        json.dump(summary, f, sort_keys=True, indent=2)
    print(json.dumps(summary, sort_keys=True))


if __name__ == "__main__":
    main()
