"""Soft geometric block model sampling on the flat torus.

A sample is (graph, labels, positions): a balanced random labelling into
communities {1, 2}, i.i.d. uniform latent positions on T^d, and an
independent Bernoulli edge for every unordered pair {i, j} with success
probability F_in(X_i - X_j) when the labels agree and F_out otherwise.

Edge draws come from a counter-based generator keyed on
(seed, min(i, j), max(i, j)), so the adjacency matrix is bit-identical
no matter how sampling work is scheduled or chunked.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import Constant, Indicator, Waxman, _radial_values

__all__ = [
    "SgbmParams",
    "Graph",
    "DegreeStats",
    "torus_displacement",
    "torus_norm",
    "sample_labelling",
    "sample_positions",
    "sample_graph",
    "degree_stats",
    "write_graph",
    "read_graph",
    "write_labels",
    "read_labels",
    "write_positions",
]


@dataclass(frozen=True)
class SgbmParams:
    n: int
    d: int
    f_in: object
    f_out: object
    seed: int

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError(f"n must be even and >= 2 for balanced blocks, got {self.n}")
        if self.d < 1:
            raise ValueError("dimension must be a positive integer")
        if self.f_in.d != self.d or self.f_out.d != self.d:
            raise ValueError("kernels must share the model dimension")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must fit in 64 unsigned bits")


@dataclass
class Graph:
    n: int
    adjacency: np.ndarray  # (n, n) uint8, symmetric, zero diagonal

    def __post_init__(self):
        a = self.adjacency
        if a.shape != (self.n, self.n):
            raise ValueError(f"adjacency shape {a.shape} does not match n = {self.n}")

    def dense(self):
        """Adjacency as float64, the form the eigensolver wants."""
        return self.adjacency.astype(np.float64)

    def edge_count(self):
        return int(self.adjacency.sum()) // 2


@dataclass
class DegreeStats:
    z_in: np.ndarray  # same-label neighbor counts
    z_out: np.ndarray  # different-label neighbor counts


def torus_displacement(x, y):
    """Coordinate-wise x - y wrapped into [-1/2, 1/2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return np.mod(x - y + 0.5, 1.0) - 0.5


def torus_norm(x):
    """l-infinity norm of a wrapped displacement (or a batch of them)."""
    x = np.asarray(x, dtype=float)
    return np.max(np.abs(x), axis=-1)


# --- counter-based pair randomness --------------------------------------
#
# splitmix64 finalizer: a stateless uint64 -> uint64 mixer.  Each unordered
# pair maps to one counter, so edge draws need no sequential stream and no
# coordination between workers.

_SM_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_SM_MULT1 = np.uint64(0xBF58476D1CE4E5B9)
_SM_MULT2 = np.uint64(0x94D049BB133111EB)


def _mix64(z):
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):  # modular arithmetic is the point
        z = z + _SM_GAMMA
        z = (z ^ (z >> np.uint64(30))) * _SM_MULT1
        z = (z ^ (z >> np.uint64(27))) * _SM_MULT2
    return z ^ (z >> np.uint64(31))


def pair_uniform(seed, i, j):
    """Uniform[0,1) draw for unordered pair {i, j}, independent of order.

    Vectorized over i, j arrays.  The counter packs (min, max) into one
    word (node ids fit easily in 32 bits at this scale) and is whitened
    twice against the seed.
    """
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    lo = np.minimum(i, j)
    hi = np.maximum(i, j)
    counter = (lo << np.uint64(32)) | hi
    bits = _mix64(_mix64(np.uint64(seed)) ^ counter)
    return bits.astype(np.float64) * 2.0**-64


def sample_labelling(n, rng):
    """Uniformly random balanced labelling into {1, 2}."""
    if n < 2 or n % 2:
        raise ValueError(f"n must be even and >= 2, got {n}")
    labels = np.ones(n, dtype=np.int8)
    labels[rng.choice(n, size=n // 2, replace=False)] = 2
    return labels


def sample_positions(n, d, rng):
    """i.i.d. uniform positions on [-1/2, 1/2)^d."""
    return rng.random((n, d)) - 0.5


def sample_graph(params):
    """Sample (Graph, labels, positions) from the model.

    Labels and positions come from a seeded numpy generator; each edge
    coin comes from pair_uniform, so the matrix does not depend on the
    row-block size used below.
    """
    n, d = params.n, params.d
    rng = np.random.default_rng(params.seed)
    labels = sample_labelling(n, rng)
    positions = sample_positions(n, d, rng)

    adjacency = np.zeros((n, n), dtype=np.uint8)
    rows = np.arange(n, dtype=np.uint64)
    block = max(1, min(n, 2**22 // max(n, 1)))  # keep scratch arrays ~tens of MB
    for start in range(0, n, block):
        stop = min(start + block, n)
        disp = positions[start:stop, None, :] - positions[None, :, :]
        disp = np.mod(disp + 0.5, 1.0) - 0.5
        dist = np.max(np.abs(disp), axis=-1)
        p_in = _radial_values(params.f_in, dist)
        p_out = _radial_values(params.f_out, dist)
        same = labels[start:stop, None] == labels[None, :]
        prob = np.where(same, p_in, p_out)
        u = pair_uniform(params.seed, rows[start:stop, None], rows[None, :])
        upper = rows[None, :] > rows[start:stop, None]  # strict upper triangle only
        adjacency[start:stop, :] = ((u < prob) & upper).astype(np.uint8)
    adjacency |= adjacency.T
    return Graph(n=n, adjacency=adjacency), labels, positions


def degree_stats(graph, labels):
    """Per-node counts of same-label and different-label neighbors."""
    labels = np.asarray(labels)
    if labels.shape != (graph.n,):
        raise ValueError(f"labels have shape {labels.shape}, graph has n = {graph.n}")
    a = graph.adjacency
    same = (labels[:, None] == labels[None, :]).astype(np.uint8)
    z_in = (a * same).sum(axis=1).astype(np.int64)
    z_out = a.sum(axis=1).astype(np.int64) - z_in
    return DegreeStats(z_in=z_in, z_out=z_out)


# --- file formats --------------------------------------------------------
#
# Edge list: header "n d seed", then one "i j" line per edge, 0-indexed,
# i < j, in row-major order.  Labels: one of {1, 2} per line.  Positions:
# CSV with d coordinate columns.


def write_graph(path, graph, d, seed):
    i, j = np.nonzero(np.triu(graph.adjacency, k=1))
    with open(path, "w") as fh:
        fh.write(f"{graph.n} {d} {seed}\n")
        for a, b in zip(i, j):
            fh.write(f"{a} {b}\n")


def read_graph(path):
    """Returns (Graph, d, seed) from an edge-list file."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise ValueError(f"{path}: expected header 'n d seed'")
        n, d, seed = int(header[0]), int(header[1]), int(header[2])
        adjacency = np.zeros((n, n), dtype=np.uint8)
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{line_no}: expected 'i j'")
            a, b = int(parts[0]), int(parts[1])
            if not (0 <= a < b < n):
                raise ValueError(f"{path}:{line_no}: need 0 <= i < j < n, got {a} {b}")
            adjacency[a, b] = adjacency[b, a] = 1
    return Graph(n=n, adjacency=adjacency), d, seed


def write_labels(path, labels):
    with open(path, "w") as fh:
        for lab in labels:
            fh.write(f"{int(lab)}\n")


def read_labels(path):
    labels = np.loadtxt(path, dtype=np.int8, ndmin=1)
    if not np.all((labels == 1) | (labels == 2)):
        raise ValueError(f"{path}: labels must be 1 or 2")
    return labels


def write_positions(path, positions):
    n, d = positions.shape
    header = ",".join(f"x{axis}" for axis in range(d))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in positions:
            fh.write(",".join(repr(float(c)) for c in row) + "\n")
