"""Quadrature convergence for cap volumes and the width identities on S^3."""

import argparse
import math
from dataclasses import dataclass

from spindle.width_s3 import convergence_study, identity_report


@dataclass
class ConvergenceConfig:
    rho: float = 0.8
    offset: float = 0.4
    grids: tuple = (32, 64, 128, 256, 512)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--rho", type=float, default=ConvergenceConfig.rho)
    p.add_argument("--offset", type=float, default=ConvergenceConfig.offset)
    a = p.parse_args(argv)
    cfg = ConvergenceConfig(a.rho, a.offset)
    study = convergence_study(cfg.rho, cfg.offset, cfg.grids)
    print("grid,volume_error,ratio_to_previous")
    for i, (g, e) in enumerate(zip(study["grids"], study["errors"])):
        ratio = study["ratios"][i - 1] if i else float("nan")
        print(f"{g},{e:.3e},{ratio:.4f}")
    rep = identity_report(cfg.rho, "quadrature", 400)
    print(f"# identities at grid 400, width {math.degrees(2 * cfg.rho):.2f} deg: "
          f"{rep.residual_blaschke:.2e} {rep.residual_allendoerfer:.2e} {rep.residual_duality:.2e}")


if __name__ == "__main__":
    main()
