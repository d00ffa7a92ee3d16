"""Generate the two bundled 201 x 101 covariate grids (elevation and slope analogues).

Elevation is a stationary Gaussian-smoothed white-noise field; slope is
the norm of its finite-difference gradient. Both live on 5-unit cells with
the lower-left corner at the origin.
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from gibbscl.covariates import CovariateGrid, write_grid

NCOLS, NROWS, CELL = 201, 101, 5.0


def make_grids(seed: int = 20070101, smooth: float = 20.0):
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((NROWS, NCOLS))
    field = gaussian_filter(noise, smooth, mode="reflect")
    field /= field.std()
    elev = 140.0 + 8.0 * field
    gy, gx = np.gradient(elev, CELL)
    slope = np.hypot(gx, gy)
    return (CovariateGrid(elev, 0.0, 0.0, CELL, "elevation"),
            CovariateGrid(slope, 0.0, 0.0, CELL, "slope"))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src/gibbscl/data"))
    ap.add_argument("--seed", type=int, default=20070101)
    args = ap.parse_args()
    for g in make_grids(args.seed):
        write_grid(g, Path(args.out) / f"{g.name}.asc")
        print(f"wrote {g.name}: range [{g.values.min():.3f}, {g.values.max():.3f}]")


if __name__ == "__main__":
    main()
