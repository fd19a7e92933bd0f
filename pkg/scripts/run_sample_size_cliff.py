"""Training-set size sweep for the canonical-storage sample-size cliff.

Canonical (one entry per position) storage needs roughly 8x fewer stored
entries, but below a critical number of distinct positions it stops reaching
the convergence threshold while the augmented arm still does. This sweep
trains both arms at several train-set truncations and records which converge.
"""
import argparse
import json
import os

from slapzero.board import BoardConfig
from slapzero.net import NetConfig, TrainHyper
from slapzero.synthetic import build_dataset, load_dataset, supervised_run

DEFAULT_LIMITS = (1258, 2516, 5032, 10064)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", default=None)
    parser.add_argument("--limits", type=int, nargs="*",
                        default=list(DEFAULT_LIMITS))
    parser.add_argument("--iterations", type=int, default=10000)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--out", default="results/sample-size-cliff")
    args = parser.parse_args()

    if args.dataset:
        dataset = load_dataset(args.dataset)
    else:
        dataset = build_dataset(BoardConfig(size=8), seeds=tuple(range(8)),
                                split_seed=0)
    hyper = TrainHyper(optimizer="adam", lr=1e-3, l2=1e-4, batch_size=512)
    net_config = NetConfig(board_size=8, in_channels=4)
    os.makedirs(args.out, exist_ok=True)

    rows = []
    for limit in args.limits:
        for mode in ("slap", "augment8"):
            record = supervised_run(dataset, mode, hyper, args.iterations,
                                    seed=args.seed, net_config=net_config,
                                    train_limit=limit,
                                    label=f"{mode}-{limit}")
            row = {"mode": mode, "train_limit": limit,
                   "final_loss": record.final_loss,
                   "iterations_to_2.9": record.iterations_to[2.9],
                   "converged": record.iterations_to[2.9] is not None}
            rows.append(row)
            print(json.dumps(row, sort_keys=True))
    with open(os.path.join(args.out, "sweep.json"), "w") as f:
        json.dump(rows, f, sort_keys=True, indent=2)


if __name__ == "__main__":
    main()
