"""Cell-centered momentum lattice, states over it, and the primitive calculus.

The lattice covers [-p_max, p_max]^3 with every node coordinate an odd
multiple of h/2.  No node ever sits on a coordinate plane or at the origin,
so 1/p0 stays finite at zero mass and the transverse radius p1^2 + p2^2
never vanishes.  The map p -> -p is an exact permutation of the nodes.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MomentumGrid",
    "State",
    "build_grid",
    "inner_product",
    "norm",
    "derivative",
    "derivative_matrix",
    "parity",
    "gaussian_packet",
]


@functools.lru_cache(maxsize=None)
def derivative_matrix(n: int, spacing: float, order: int) -> np.ndarray:
    """Dense one-dimensional first-derivative stencil matrix.

    Central differences of the requested order in the interior, one-sided
    closures of the same order at the edges.  The bottom rows are the
    negated mirror of the top rows, so reflection about the grid midpoint
    anticommutes with the matrix exactly (not just up to stencil error).
    """
    if order not in (2, 4):
        raise ValueError(f"stencil order must be 2 or 4, got {order}")
    if n < order + 1:
        raise ValueError(f"grid too small for order-{order} stencil: n={n}")
    d = np.zeros((n, n))
    if order == 2:
        for i in range(1, n - 1):
            d[i, i - 1] = -0.5
            d[i, i + 1] = 0.5
        d[0, :3] = [-1.5, 2.0, -0.5]
    else:
        c = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
        for i in range(2, n - 2):
            d[i, i - 2 : i + 3] = c
        d[0, :5] = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        d[1, :5] = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0
    half = order // 2
    # mirror closure: row (n-1-i) = -reversed(row i)
    for i in range(half):
        d[n - 1 - i, :] = -d[i, ::-1]
    d /= spacing
    d.setflags(write=False)
    return d


@dataclass(frozen=True)
class MomentumGrid:
    """Parity-symmetric cell-centered lattice with the measure h^3/p0 per node.

    Nodes are enumerated lexicographically over (axis1, axis2, axis3); the
    flat index of (i, j, k) is (i*n + j)*n + k.
    """

    n_per_axis: int
    p_max: float
    mass: float
    blocks: int = 1
    fiber_dim: int = 1

    @property
    def spacing(self) -> float:
        return 2.0 * self.p_max / self.n_per_axis

    @property
    def size(self) -> int:
        return self.n_per_axis**3

    @functools.cached_property
    def axis_coords(self) -> np.ndarray:
        n = self.n_per_axis
        h = self.spacing
        c = -self.p_max + (np.arange(n) + 0.5) * h
        c.setflags(write=False)
        return c

    @functools.cached_property
    def momenta(self) -> np.ndarray:
        """Node coordinates, shape (3, n^3)."""
        c = self.axis_coords
        p1, p2, p3 = np.meshgrid(c, c, c, indexing="ij")
        out = np.stack([p1.ravel(), p2.ravel(), p3.ravel()])
        out.setflags(write=False)
        return out

    @functools.cached_property
    def energies(self) -> np.ndarray:
        """p0 = sqrt(mass^2 + |p|^2) at every node."""
        p = self.momenta
        e = np.sqrt(self.mass**2 + p[0] ** 2 + p[1] ** 2 + p[2] ** 2)
        e.setflags(write=False)
        return e

    @functools.cached_property
    def weights(self) -> np.ndarray:
        """Quadrature weight h^3/p0 per node."""
        w = self.spacing**3 / self.energies
        w.setflags(write=False)
        return w

    def state_shape(self) -> tuple[int, int, int]:
        return (self.blocks, self.fiber_dim, self.size)

    def field_shape(self) -> tuple[int, int, int, int, int]:
        n = self.n_per_axis
        return (self.blocks, self.fiber_dim, n, n, n)


def build_grid(n_per_axis: int, p_max: float, mass: float, blocks: int = 1) -> MomentumGrid:
    """Validate parameters and construct the lattice.

    n_per_axis must be even (parity closure) and at least 8; mass >= 0;
    blocks is 1 or 2.
    """
    if n_per_axis % 2 != 0:
        raise ValueError(f"n_per_axis must be even, got {n_per_axis}")
    if n_per_axis < 8:
        raise ValueError(f"n_per_axis must be at least 8, got {n_per_axis}")
    if not p_max > 0:
        raise ValueError(f"p_max must be positive, got {p_max}")
    if mass < 0:
        raise ValueError(f"mass must be nonnegative, got {mass}")
    if blocks not in (1, 2):
        raise ValueError(f"blocks must be 1 or 2, got {blocks}")
    return MomentumGrid(n_per_axis=n_per_axis, p_max=float(p_max), mass=float(mass), blocks=blocks)


@dataclass
class State:
    """Amplitudes over the lattice, shape (blocks, fiber_dim, n^3).

    Treat instances as values: operations return new states and never
    mutate their inputs.
    """

    amplitudes: np.ndarray
    grid: MomentumGrid
    label: str = ""

    def __post_init__(self):
        want = self.grid.state_shape()
        if self.amplitudes.shape != want:
            raise ValueError(f"amplitudes shape {self.amplitudes.shape} != {want}")
        if self.amplitudes.dtype != np.complex128:
            self.amplitudes = self.amplitudes.astype(np.complex128)

    def copy(self, label: str | None = None) -> "State":
        return State(self.amplitudes.copy(), self.grid, self.label if label is None else label)

    def fields(self) -> np.ndarray:
        """View shaped (blocks, fiber_dim, n, n, n)."""
        return self.amplitudes.reshape(self.grid.field_shape())

    def inner(self, other: "State") -> complex:
        return inner_product(self, other)

    def norm(self) -> float:
        w = self.grid.weights
        return float(np.sqrt(np.sum((self.amplitudes.real**2 + self.amplitudes.imag**2) * w)))

    def normalized(self, label: str | None = None) -> "State":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero state")
        return State(self.amplitudes / nrm, self.grid, self.label if label is None else label)

    def block_part(self, b: int) -> "State":
        """Copy with every block except b zeroed."""
        amp = np.zeros_like(self.amplitudes)
        amp[b] = self.amplitudes[b]
        return State(amp, self.grid, f"{self.label}|block{b + 1}")

    def block_norms(self) -> np.ndarray:
        w = self.grid.weights
        return np.sqrt(np.sum((self.amplitudes.real**2 + self.amplitudes.imag**2) * w, axis=(1, 2)))

    def __add__(self, other: "State") -> "State":
        _check_same_grid(self.grid, other.grid)
        return State(self.amplitudes + other.amplitudes, self.grid)

    def __sub__(self, other: "State") -> "State":
        _check_same_grid(self.grid, other.grid)
        return State(self.amplitudes - other.amplitudes, self.grid)

    def __mul__(self, scalar) -> "State":
        return State(self.amplitudes * scalar, self.grid)

    __rmul__ = __mul__

    def __neg__(self) -> "State":
        return State(-self.amplitudes, self.grid)


def _check_same_grid(a: MomentumGrid, b: MomentumGrid) -> None:
    if a != b:
        raise ValueError("states live on different grids")


def inner_product(phi: State, psi: State) -> complex:
    """Discrete inner product with the h^3/p0 measure.

    Conjugate-linear in the first argument, linear in the second.
    """
    _check_same_grid(phi.grid, psi.grid)
    w = phi.grid.weights
    return complex(np.sum(np.conj(phi.amplitudes) * psi.amplitudes * w))


def norm(psi: State) -> float:
    return psi.norm()


def derivative(psi: State, axis: int, order: int = 4) -> State:
    """Partial derivative along a momentum axis (0, 1 or 2) by finite differences."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    g = psi.grid
    d = derivative_matrix(g.n_per_axis, g.spacing, order)
    f = psi.fields()
    out = np.tensordot(d, f, axes=(1, 2 + axis))
    out = np.moveaxis(out, 0, 2 + axis)
    return State(np.ascontiguousarray(out).reshape(g.state_shape()), g)


def parity(psi: State) -> State:
    """Pull back by p -> -p: an exact node permutation of the lattice."""
    f = psi.fields()[..., ::-1, ::-1, ::-1]
    return State(np.ascontiguousarray(f).reshape(psi.grid.state_shape()), psi.grid)


def gaussian_packet(
    grid: MomentumGrid,
    center,
    width: float,
    block_weights=None,
    label: str = "",
) -> State:
    """Normalized Gaussian packet exp(-|p - center|^2 / (2 width^2)).

    Requires |center| + 3*width < p_max so the state is supported away from
    the lattice boundary.  Block weights distribute the common profile over
    the blocks; they default to an equal split.
    """
    center = np.asarray(center, dtype=float)
    if center.shape != (3,):
        raise ValueError(f"center must have 3 components, got shape {center.shape}")
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    reach = float(np.linalg.norm(center)) + 3.0 * width
    if not reach < grid.p_max:
        raise ValueError(
            f"packet reaches {reach:.3f} >= p_max={grid.p_max}; "
            "shrink the width or move the center inward"
        )
    if block_weights is None:
        block_weights = np.full(grid.blocks, 1.0 / np.sqrt(grid.blocks), dtype=complex)
    else:
        block_weights = np.asarray(block_weights, dtype=complex)
        if block_weights.shape != (grid.blocks,):
            raise ValueError(f"need {grid.blocks} block weights, got shape {block_weights.shape}")
        wn = np.linalg.norm(block_weights)
        if wn == 0.0:
            raise ValueError("block weights are all zero")
        block_weights = block_weights / wn
    p = grid.momenta
    d2 = (p[0] - center[0]) ** 2 + (p[1] - center[1]) ** 2 + (p[2] - center[2]) ** 2
    profile = np.exp(-d2 / (2.0 * width**2))
    amp = block_weights[:, None, None] * profile[None, None, :]
    return State(amp, grid, label).normalized(label)
