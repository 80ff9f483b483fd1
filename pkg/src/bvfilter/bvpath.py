"""Bounded-variation steering paths: jumps plus a piecewise-linear part.

A path nu has finitely many jumps, a continuous part sampled on the time
grid, and starts from zero just before time 0 (a jump at t = 0 is allowed
and models an initial displacement of the signal).  Each component's total
variation over the horizon is budgeted by the fuel bound K.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import TimeGrid


@dataclass(frozen=True)
class BVPath:
    """Steering input sampled on a time grid.

    Attributes
    ----------
    grid : TimeGrid
        Time grid the path lives on; jump times are nodes of this grid.
    continuous : ndarray, shape (steps + 1, m)
        Continuous part at the grid nodes, zero at node 0.
    jump_nodes : ndarray of int, shape (J,)
        Strictly increasing node indices carrying jumps (node 0 allowed).
    jump_sizes : ndarray, shape (J, m)
    fuel : float
        Bound K on each component's total variation.
    """

    grid: TimeGrid
    continuous: np.ndarray
    jump_nodes: np.ndarray
    jump_sizes: np.ndarray
    fuel: float

    def __post_init__(self):
        cont = np.asarray(self.continuous, dtype=float)
        if cont.ndim == 1:
            cont = cont[:, None]
        if cont.shape[0] != self.grid.steps + 1:
            raise ValueError(
                f"continuous part has {cont.shape[0]} samples, grid has "
                f"{self.grid.steps + 1} nodes"
            )
        nodes = np.asarray(self.jump_nodes, dtype=int)
        sizes = np.asarray(self.jump_sizes, dtype=float)
        if sizes.ndim == 1:
            sizes = sizes.reshape(len(nodes), -1) if len(nodes) else sizes.reshape(0, cont.shape[1])
        if sizes.shape != (len(nodes), cont.shape[1]):
            raise ValueError(f"jump sizes shape {sizes.shape} does not match nodes/dim")
        if len(nodes) and (np.any(nodes < 0) or np.any(nodes > self.grid.steps)):
            raise ValueError("jump node index outside the grid")
        if len(nodes) > 1 and np.any(np.diff(nodes) <= 0):
            raise ValueError("jump nodes must be strictly increasing")
        object.__setattr__(self, "continuous", cont)
        object.__setattr__(self, "jump_nodes", nodes)
        object.__setattr__(self, "jump_sizes", sizes)
        object.__setattr__(self, "fuel", float(self.fuel))

    @property
    def m(self) -> int:
        return self.continuous.shape[1]

    @classmethod
    def from_knots(
        cls,
        grid: TimeGrid,
        jumps=(),
        continuous_knots=(),
        fuel: float = np.inf,
    ) -> "BVPath":
        """Build a path from (time, vector) jump pairs and linear knots.

        Jump times are snapped to the nearest grid node; two jumps landing
        on the same node is an error.  The continuous part interpolates the
        knots linearly at the grid nodes and is held constant outside the
        knot range; with no knots it is identically zero.
        """
        m = None
        for _, v in list(jumps) + list(continuous_knots):
            m = len(np.atleast_1d(v))
            break
        if m is None:
            m = 1
        cont = np.zeros((grid.steps + 1, m))
        if continuous_knots:
            kt = np.asarray([t for t, _ in continuous_knots], dtype=float)
            kv = np.asarray([np.atleast_1d(v) for _, v in continuous_knots], dtype=float)
            if np.any(np.diff(kt) <= 0):
                raise ValueError("continuous knot times must be strictly increasing")
            for i in range(m):
                cont[:, i] = np.interp(grid.nodes, kt, kv[:, i])
        node_idx = []
        sizes = []
        for t, v in jumps:
            node_idx.append(grid.index_of(float(t)))
            sizes.append(np.atleast_1d(np.asarray(v, dtype=float)))
        order = np.argsort(node_idx) if node_idx else []
        node_idx = np.asarray(node_idx, dtype=int)[order] if len(node_idx) else np.zeros(0, int)
        sizes = np.asarray(sizes, dtype=float)[order] if len(sizes) else np.zeros((0, m))
        if len(node_idx) > 1 and np.any(np.diff(node_idx) == 0):
            raise ValueError("two jumps snapped onto the same grid node")
        return cls(grid, cont, node_idx, sizes, fuel)

    @classmethod
    def zero(cls, grid: TimeGrid, m: int, fuel: float = np.inf) -> "BVPath":
        return cls(grid, np.zeros((grid.steps + 1, m)), np.zeros(0, int), np.zeros((0, m)), fuel)

    def jump_at(self, node: int):
        """Jump vector at a grid node, or None."""
        pos = np.searchsorted(self.jump_nodes, node)
        if pos < len(self.jump_nodes) and self.jump_nodes[pos] == node:
            return self.jump_sizes[pos]
        return None

    def increment(self, k: int):
        """Increment over cell [t_k, t_{k+1}].

        Returns (dc, jump) where dc is the continuous increment and jump is
        the jump vector at node k + 1 or None.  The jump at node 0 is not
        part of any cell; it belongs to initialization.
        """
        if not 0 <= k < self.grid.steps:
            raise ValueError(f"cell index {k} outside 0..{self.grid.steps - 1}")
        dc = self.continuous[k + 1] - self.continuous[k]
        return dc, self.jump_at(k + 1)

    def values(self) -> np.ndarray:
        """Path values at the grid nodes (right-continuous), shape (steps+1, m)."""
        out = self.continuous.copy()
        for node, size in zip(self.jump_nodes, self.jump_sizes):
            out[node:] += size
        return out

    def total_variation(self, component: int | None = None) -> np.ndarray | float:
        """Per-component total variation: jump sizes plus polygonal length."""
        tv = np.sum(np.abs(self.jump_sizes), axis=0) + np.sum(
            np.abs(np.diff(self.continuous, axis=0)), axis=0
        )
        if component is None:
            return tv
        return float(tv[component])


def bv_total_variation(path: BVPath, component: int | None = None):
    return path.total_variation(component)


def bv_increment(path: BVPath, k: int):
    return path.increment(k)
