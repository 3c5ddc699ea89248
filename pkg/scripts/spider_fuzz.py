"""Fuzz spider fusion on random connected commutative networks.

For each network: fuse, check that a single spider (or scalar, or bare wire)
remains, compare evaluations, and replay the fusion in shuffled orders.

Usage: python3 scripts/spider_fuzz.py [--count 500] [--seed 0] [--max-dim 4] [--replays 3]
"""
from __future__ import annotations

import argparse
import random
import time

import numpy as np

from frobayes.diagram import ObjectRef
from frobayes.models import ClassicalBackend
from frobayes.rewrite import SPIDER, eval_graph, normal_form_key, random_network, spider_fuse


def main() -> int:
    ap = argparse.ArgumentParser(description="spider fusion fuzzer")
    ap.add_argument("--count", type=int, default=500)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-dim", type=int, default=4)
    ap.add_argument("--max-nodes", type=int, default=8)
    ap.add_argument("--replays", type=int, default=3)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    backend = ClassicalBackend()
    worst, leftover, unstable = 0.0, 0, 0
    t0 = time.perf_counter()
    for k in range(args.count):
        obj = ObjectRef("A", "classical", rng.randint(1, args.max_dim))
        g = random_network(rng, obj, max_nodes=args.max_nodes)
        f = spider_fuse(g)
        leftover += sum(1 for n in f.nodes.values() if n.kind == SPIDER) > 1
        worst = max(worst, float(np.max(np.abs(eval_graph(f, backend) - eval_graph(g, backend)), initial=0.0)))
        keys = {normal_form_key(spider_fuse(g, random.Random(args.seed * 7919 + k * 31 + j))) for j in range(args.replays)}
        unstable += len(keys) != 1
    dt = time.perf_counter() - t0
    print(f"networks: {args.count}  unfused: {leftover}  order-dependent: {unstable}  "
          f"max eval diff: {worst:.2e}  time: {dt:.2f} s")
    return 0 if leftover == unstable == 0 and worst <= 1e-9 else 1


if __name__ == "__main__":
    raise SystemExit(main())
