"""Supervised A/B benchmark: canonical storage vs 8-fold augmentation.

Builds (or reuses) the seeded synthetic dataset, trains one arm per storage
mode with the best known configuration, and reports iterations to the loss
thresholds plus the relative speedup.
"""
import argparse
import json
import os

from slapzero.board import BoardConfig
from slapzero.net import NetConfig, TrainHyper
from slapzero.synthetic import build_dataset, load_dataset, save_dataset, supervised_run


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", default=None,
                        help="existing dataset directory (default: build one)")
    parser.add_argument("--iterations", type=int, default=10000)
    parser.add_argument("--seed", type=int, default=2024)
    parser.add_argument("--train-limit", type=int, default=None)
    parser.add_argument("--out", default="results/supervised-ab")
    args = parser.parse_args()

    if args.dataset:
        dataset = load_dataset(args.dataset)
    else:
        dataset = build_dataset(BoardConfig(size=8), seeds=tuple(range(8)),
                                split_seed=0)
        save_dataset(dataset, os.path.join(args.out, "dataset"))

    hyper = TrainHyper(optimizer="adam", lr=1e-3, l2=1e-4, batch_size=512)
    net_config = NetConfig(board_size=8, in_channels=4)
    os.makedirs(args.out, exist_ok=True)
    records = {}
    for mode in ("slap", "augment8"):
        record = supervised_run(dataset, mode, hyper, args.iterations,
                                seed=args.seed, net_config=net_config,
                                train_limit=args.train_limit, label=mode)
        records[mode] = record
        with open(os.path.join(args.out, f"{mode}.json"), "w") as f:
            json.dump(record.to_json(), f, sort_keys=True, indent=2)
        print(f"{mode}: final loss {record.final_loss}, "
              f"iterations to 3.0 = {record.iterations_to[3.0]}")

    slap_iters = records["slap"].iterations_to[3.0]
    aug_iters = records["augment8"].iterations_to[3.0]
    summary = {"slap_iterations_to_3.0": slap_iters,
               "augment8_iterations_to_3.0": aug_iters,
               "speedup": (1.0 - slap_iters / aug_iters
                           if slap_iters and aug_iters else None)}
    with open(os.path.join(args.out, "summary.json"), "w") as f:
        json.dump(summary, f, sort_keys=True, indent=2)
    print(json.dumps(summary, sort_keys=True))


if __name__ == "__main__":
    main()
