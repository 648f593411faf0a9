"""Summarise a Gibbs posterior on uniform-square data under each loss.

Unstructured data gives a diffuse posterior over partitions, so the point
estimate alone says little; the credible ball bounds show how far the
posterior mass reaches from it.

    python3 scripts/uniform_square.py --n 200 --seed 7
"""

import argparse
import time

from clustsum import GreedyConfig, LossKind, greedy_minimize
from clustsum.simulate import GibbsConfig, gen_uniform_square, gibbs_gmm
from clustsum.uncertainty import credible_ball


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--iters", type=int, default=12000)
    ap.add_argument("--restarts", type=int, default=5)
    ap.add_argument("--alpha", type=float, default=0.05)
    args = ap.parse_args()

    t0 = time.perf_counter()
    data = gen_uniform_square(args.n, seed=args.seed)
    sample = gibbs_gmm(data, GibbsConfig(iters=args.iters, burnin=args.iters // 6, seed=args.seed))
    print(f"gibbs: {sample.n_draws} draws in {time.perf_counter() - t0:.1f}s")

    cfg = GreedyConfig(restarts=args.restarts, seed=args.seed)
    for kind in LossKind:
        res = greedy_minimize(sample, kind, cfg)
        print(f"{kind.value:>6}: K={res.k:<3d} EPL={res.epl:.4f} agreeing restarts {res.restarts_agreeing}")

    center = greedy_minimize(sample, "vi", cfg).partition
    ball = credible_ball(center, sample, "vi", args.alpha)
    print(f"\n{ball.level:.0%} VI ball: radius {ball.radius:.3f}, {len(ball.members)} distinct members")
    for name, bounds in (
        ("horizontal", ball.horizontal_bounds),
        ("vertical upper", ball.vertical_upper_bounds),
        ("vertical lower", ball.vertical_lower_bounds),
    ):
        ks = sorted({b.k for b in bounds})
        print(f"  {name:<15} K={ks} distance {bounds[0].distance:.3f} ({len(bounds)} tied)")


if __name__ == "__main__":
    main()
