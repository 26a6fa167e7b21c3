"""Tabulate the illumination upper bound against 2^d and the lower-bound growth."""

import argparse
import math
from dataclasses import dataclass

from spindle.schramm import (
    assemble_theorem_chain,
    epsilon0,
    kahn_kalai_lower,
    log_theorem_bound,
    schramm_direction_budget,
)


@dataclass
class TableConfig:
    d_min: int = 3
    d_max: int = 40


def rows(cfg: TableConfig):
    for d in range(cfg.d_min, cfg.d_max + 1):
        log_b = log_theorem_bound(d)
        yield {
            "d": d,
            "log2_bound": log_b / math.log(2),
            "bound_below_2^d": log_b < d * math.log(2),
            "epsilon0": epsilon0(d),
            "budget": schramm_direction_budget(d, epsilon0(d)) if d <= 6 else float("nan"),
            "log2_lower": math.log2(kahn_kalai_lower(d)),
            "chain_holds": assemble_theorem_chain(d).holds,
        }


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--d-min", type=int, default=TableConfig.d_min)
    p.add_argument("--d-max", type=int, default=TableConfig.d_max)
    a = p.parse_args(argv)
    cols = ["d", "log2_bound", "bound_below_2^d", "epsilon0", "budget", "log2_lower", "chain_holds"]
    print(",".join(cols))
    for r in rows(TableConfig(a.d_min, a.d_max)):
        print(",".join(f"{r[c]:.6g}" if isinstance(r[c], float) else str(r[c]) for c in cols))


if __name__ == "__main__":
    main()
