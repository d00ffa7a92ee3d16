"""Pixel-image covariates: grid files, lookups, standardization, synthetic noise."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .pattern import ObservationWindow


class CovariateError(ValueError):
    """Raised for malformed grids, out-of-grid lookups and degenerate inputs."""


@dataclass(frozen=True)
class CovariateGrid:
    """Piecewise-constant image on square cells.

    ``values[row, col]`` with row 0 at the lowest y (files store the top row
    first; :func:`read_grid` flips them).
    """

    values: np.ndarray
    x0: float
    y0: float
    cellsize: float
    name: str = ""
    standardization: tuple[float, float] | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.values, dtype=float))
        if v.ndim != 2 or v.size == 0:
            raise CovariateError("grid values must be a non-empty 2-d array")
        if not np.all(np.isfinite(v)):
            raise CovariateError(f"grid {self.name!r} has non-finite values")
        if self.cellsize <= 0:
            raise CovariateError("cellsize must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    @property
    def geometry(self) -> tuple:
        return (self.ncols, self.nrows, self.x0, self.y0, self.cellsize)

    @property
    def extent(self) -> ObservationWindow:
        return ObservationWindow(
            self.x0,
            self.x0 + self.ncols * self.cellsize,
            self.y0,
            self.y0 + self.nrows * self.cellsize,
        )

    def cell_index(self, points) -> tuple[np.ndarray, np.ndarray]:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        ext = self.extent
        if not np.all(ext.contains(pts)):
            bad = pts[~ext.contains(pts)][0]
            raise CovariateError(f"point {tuple(bad)} outside grid {ext.bounds}")
        ix = np.floor((pts[:, 0] - self.x0) / self.cellsize).astype(np.int64)
        iy = np.floor((pts[:, 1] - self.y0) / self.cellsize).astype(np.int64)
        # points on the right/top edge belong to the last cell
        np.clip(ix, 0, self.ncols - 1, out=ix)
        np.clip(iy, 0, self.nrows - 1, out=iy)
        return iy, ix

    def lookup(self, points) -> np.ndarray:
        """Vectorized nearest-pixel values."""
        iy, ix = self.cell_index(points)
        return self.values[iy, ix]

    def rescaled(self, window: ObservationWindow) -> "CovariateGrid":
        """Same pixels stretched so the grid's lower-left corner and width match ``window``."""
        factor = window.width / (self.ncols * self.cellsize)
        return replace(self, x0=window.xmin, y0=window.ymin, cellsize=self.cellsize * factor)


def value_at(grid: CovariateGrid, u) -> float:
    """Value of the pixel containing ``u``."""
    return float(grid.lookup(np.asarray(u, dtype=float).reshape(1, 2))[0])


def standardize(grid: CovariateGrid) -> CovariateGrid:
    """Center and scale pixel values (population standard deviation)."""
    mean = float(grid.values.mean())
    sd = float(grid.values.std())
    if not sd > 1e-12 * max(1.0, abs(mean)):
        raise CovariateError(f"grid {grid.name!r} has zero variance")
    return replace(grid, values=(grid.values - mean) / sd, standardization=(mean, sd))


def read_grid(path, name: str | None = None) -> CovariateGrid:
    """Read a text grid with ``ncols/nrows/xllcorner/yllcorner/cellsize`` headers."""
    path = Path(path)
    header = {}
    with open(path) as fh:
        for _ in range(5):
            parts = fh.readline().split()
            if len(parts) != 2:
                raise CovariateError(f"{path}: malformed header line {parts}")
            header[parts[0].lower()] = parts[1]
        rows = np.loadtxt(fh, dtype=float, ndmin=2)
    try:
        ncols, nrows = int(header["ncols"]), int(header["nrows"])
        x0, y0 = float(header["xllcorner"]), float(header["yllcorner"])
        cellsize = float(header["cellsize"])
    except KeyError as exc:
        raise CovariateError(f"{path}: missing header {exc}") from None
    if rows.shape != (nrows, ncols):
        raise CovariateError(f"{path}: expected {nrows}x{ncols} values, got {rows.shape}")
    return CovariateGrid(rows[::-1], x0, y0, cellsize, name or path.stem)


def write_grid(grid: CovariateGrid, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(f"ncols {grid.ncols}\nnrows {grid.nrows}\n")
        fh.write(f"xllcorner {grid.x0!r}\nyllcorner {grid.y0!r}\ncellsize {grid.cellsize!r}\n")
        np.savetxt(fh, grid.values[::-1], fmt="%.10g")


@dataclass(frozen=True)
class CovariateStack:
    """Covariate grids sharing one pixel geometry."""

    grids: tuple[CovariateGrid, ...] = field(default_factory=tuple)

    def __post_init__(self):
        grids = tuple(self.grids)
        object.__setattr__(self, "grids", grids)
        if grids:
            g0 = grids[0].geometry
            for g in grids[1:]:
                if not np.allclose(g.geometry, g0, rtol=1e-12, atol=0):
                    raise CovariateError(
                        f"grid {g.name!r} geometry {g.geometry} differs from {g0}"
                    )

    def __len__(self) -> int:
        return len(self.grids)

    @property
    def names(self) -> list[str]:
        return [g.name for g in self.grids]

    @property
    def standardization(self) -> list:
        return [g.standardization for g in self.grids]

    @property
    def extent(self) -> ObservationWindow | None:
        return self.grids[0].extent if self.grids else None

    def values_at(self, points) -> np.ndarray:
        """Matrix of covariate values, one column per grid."""
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if not self.grids:
            return np.zeros((len(pts), 0))
        iy, ix = self.grids[0].cell_index(pts)
        return np.column_stack([g.values[iy, ix] for g in self.grids])

    def linear_image(self, coefs, intercept: float = 0.0) -> CovariateGrid:
        """Pixel image ``intercept + sum_k coefs[k] * grid_k``."""
        coefs = np.asarray(coefs, dtype=float)
        if len(coefs) != len(self.grids):
            raise CovariateError("coefficient count does not match the stack")
        if not self.grids:
            raise CovariateError("empty stack has no pixel geometry")
        img = np.full(self.grids[0].values.shape, float(intercept))
        for c, g in zip(coefs, self.grids):
            if c != 0.0:
                img += c * g.values
        g0 = self.grids[0]
        return CovariateGrid(img, g0.x0, g0.y0, g0.cellsize, "trend")

    def standardized(self) -> "CovariateStack":
        return CovariateStack(tuple(standardize(g) for g in self.grids))

    def rescaled(self, window: ObservationWindow) -> "CovariateStack":
        return CovariateStack(tuple(g.rescaled(window) for g in self.grids))

    @classmethod
    def from_directory(cls, path, pattern: str = "*.asc") -> "CovariateStack":
        files = sorted(Path(path).glob(pattern))
        if not files:
            raise CovariateError(f"no grid files matching {pattern!r} in {path}")
        return cls(tuple(read_grid(f) for f in files))


def constant_grid(window: ObservationWindow, value: float = 1.0, name: str = "const") -> CovariateGrid:
    """1x1-pixel-per-unit constant image covering ``window`` (for homogeneous models)."""
    side = max(window.width, window.height)
    return CovariateGrid(np.full((1, 1), float(value)), window.xmin, window.ymin, side, name)


def toeplitz_correlation(q: int, rho: float = 0.7, decouple_first_two: bool = True) -> np.ndarray:
    """Correlation matrix rho^|i-j|, with the (1, 2) entries zeroed if requested."""
    idx = np.arange(q)
    omega = rho ** np.abs(idx[:, None] - idx[None, :])
    if decouple_first_two and q >= 2:
        omega[0, 1] = omega[1, 0] = 0.0
    return omega


def mixing_matrix(omega: np.ndarray) -> np.ndarray:
    """Upper-triangular V with V^T V = omega (Cholesky)."""
    try:
        lower = np.linalg.cholesky(np.asarray(omega, dtype=float))
    except np.linalg.LinAlgError:
        raise CovariateError("correlation matrix is not positive definite") from None
    return lower.T


def synthesize_correlated_noise(q: int, true_grids, seed, omega=None) -> CovariateStack:
    """Prepend ``true_grids`` to ``q - len(true_grids)`` white-noise images and mix them.

    Each pixel vector x(u) becomes z(u) = V^T x(u) where V^T V = omega; the
    default omega is :func:`toeplitz_correlation`. Because V is the Cholesky
    factor and omega[0, 1] = 0, the first two outputs equal the first two inputs.
    """
    if q < 1:
        raise CovariateError("q must be >= 1")
    true_grids = list(true_grids)[:q]
    if not true_grids:
        raise CovariateError("at least one true covariate grid is required")
    g0 = true_grids[0]
    rng = np.random.default_rng(seed)
    layers = [g.values for g in true_grids]
    for _ in range(q - len(true_grids)):
        layers.append(rng.standard_normal(g0.values.shape))
    x = np.stack(layers, axis=-1)
    if omega is None:
        omega = toeplitz_correlation(q)
    v = mixing_matrix(omega)
    z = x @ v  # row vector x^T V == (V^T x)^T
    names = [g.name for g in true_grids] + [f"noise{k}" for k in range(len(true_grids) + 1, q + 1)]
    return CovariateStack(
        tuple(
            CovariateGrid(z[..., k], g0.x0, g0.y0, g0.cellsize, names[k])
            for k in range(q)
        )
    )


def product_covariates(grids, n_products: int) -> list[CovariateGrid]:
    """Standardized elementwise products of standardized grid pairs (i < j, lexicographic)."""
    base = [standardize(g) if g.standardization is None else g for g in grids]
    out = []
    for i in range(len(base)):
        for j in range(i + 1, len(base)):
            if len(out) == n_products:
                return out
            g = replace(base[i], values=base[i].values * base[j].values,
                        name=f"{base[i].name}*{base[j].name}", standardization=None)
            out.append(standardize(g))
    if len(out) < n_products:
        raise CovariateError(f"only {len(out)} distinct products available")
    return out
