"""Synthetic hourly wind record for the trail-like site (deterministic)."""
import argparse
import csv
import math
import random


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--days", type=int, default=30)
    ap.add_argument("--seed", type=int, default=20170301)
    ap.add_argument("--out", default="trail_like_wind.csv")
    args = ap.parse_args()

    rng = random.Random(args.seed)
    sigma = 0.45
    mu = math.log(3.0) - 0.5 * sigma * sigma  # mean speed 3 m/s
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_s", "speed_mps", "dir_rad"])
        for h in range(args.days * 24):
            u = rng.random()
            if u < 0.6:
                d = rng.gauss(math.pi, 0.35)  # from the south
            elif u < 0.9:
                d = rng.gauss(0.0, 0.35)  # from the north
            else:
                d = rng.uniform(0.0, 2.0 * math.pi)
            d %= 2.0 * math.pi
            s = rng.lognormvariate(mu, sigma)
            w.writerow([h * 3600, f"{s:.4f}", f"{d:.5f}"])


if __name__ == "__main__":
    main()
