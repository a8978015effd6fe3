"""Graph container, edge-list IO, SBM generation, link splits, k-hop extraction.

Edge-list file format: one "u v" pair per line (any whitespace), `#` starts a
comment, and an optional first data line "N <num_nodes>" overrides the node
count. Feature files hold one "id f1 ... fd" line per node.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class EdgeListParseError(ValueError):
    def __init__(self, line_no: int, text: str):
        super().__init__(f"line {line_no}: cannot parse edge {text!r}")
        self.line_no = line_no


class SelfLoopError(ValueError):
    def __init__(self, line_no: int, node: int):
        super().__init__(f"line {line_no}: self-loop on node {node}")
        self.line_no = line_no


class NoNegativesAvailable(ValueError):
    """Graph too dense to sample the requested number of non-edges."""


@dataclass(frozen=True)
class Graph:
    """Undirected graph: node count, canonical edge tuple, node features.

    Edges are stored sorted with u < v, deduplicated, and validated against
    self-loops and out-of-range endpoints. Instances are immutable.
    """

    num_nodes: int
    edges: tuple
    features: np.ndarray

    def __post_init__(self):
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop ({u},{v})")
            if not (0 <= u < v < self.num_nodes):
                raise ValueError(f"edge ({u},{v}) out of range for {self.num_nodes} nodes")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")
        if self.features.shape[0] != self.num_nodes:
            raise ValueError("feature rows must equal num_nodes")
        self.features.setflags(write=False)

    @classmethod
    def from_edges(cls, num_nodes: int, edges, features: np.ndarray | None = None) -> "Graph":
        canon = sorted({(min(u, v), max(u, v)) for u, v in edges})
        if features is None:
            features = np.zeros((num_nodes, 0))
        return cls(num_nodes, tuple(canon), np.asarray(features, dtype=float))

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> frozenset:
        return frozenset(self.edges)

    def adjacency(self) -> sp.csr_matrix:
        return edges_to_adjacency(self.num_nodes, self.edges)

    def with_features(self, features: np.ndarray) -> "Graph":
        return Graph(self.num_nodes, self.edges, np.asarray(features, dtype=float))


def edges_to_adjacency(num_nodes: int, edges) -> sp.csr_matrix:
    """Symmetric 0/1 CSR adjacency from an iterable of (u, v) pairs."""
    if len(edges) == 0:
        return sp.csr_matrix((num_nodes, num_nodes))
    arr = np.asarray(list(edges), dtype=np.int64)
    rows = np.concatenate([arr[:, 0], arr[:, 1]])
    cols = np.concatenate([arr[:, 1], arr[:, 0]])
    data = np.ones(len(rows))
    return sp.csr_matrix((data, (rows, cols)), shape=(num_nodes, num_nodes))


@dataclass(frozen=True)
class LabeledPair:
    u: int
    v: int
    label: int
    split: str


@dataclass(frozen=True)
class LinkDataset:
    """Labeled node pairs with train/valid/test tags plus the message-passing
    adjacency, which holds train-split positive edges only (hidden valid/test
    edges never leak into propagation)."""

    mp_adjacency: sp.csr_matrix
    pairs: tuple
    features: np.ndarray

    @property
    def num_nodes(self) -> int:
        return self.mp_adjacency.shape[0]

    def split_arrays(self, split: str):
        """(pairs N x 2, labels N) for one split, in stored order."""
        sel = [p for p in self.pairs if p.split == split]
        if not sel:
            return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
        pairs = np.array([[p.u, p.v] for p in sel], dtype=np.int64)
        labels = np.array([p.label for p in sel], dtype=np.int64)
        return pairs, labels


@dataclass(frozen=True)
class Subgraph:
    """k-hop neighborhood of a candidate link, reindexed to local ids."""

    node_ids: tuple
    local_edges: tuple
    local_features: np.ndarray
    anchor: tuple
    label: int

    def __post_init__(self):
        n = len(self.node_ids)
        if len(set(self.node_ids)) != n:
            raise ValueError("duplicate node ids")
        if not all(0 <= a < n for a in self.anchor):
            raise ValueError("anchor outside subgraph")
        for u, v in self.local_edges:
            if not (0 <= u < v < n):
                raise ValueError(f"local edge ({u},{v}) invalid")

    @property
    def num_nodes(self) -> int:
        return len(self.node_ids)

    def adjacency(self) -> sp.csr_matrix:
        return edges_to_adjacency(self.num_nodes, self.local_edges)

    def with_features(self, features: np.ndarray) -> "Subgraph":
        return Subgraph(self.node_ids, self.local_edges,
                        np.asarray(features, dtype=float), self.anchor, self.label)


def load_edge_list(path) -> Graph:
    """Parse an edge-list file into a deduplicated undirected Graph."""
    edges = []
    max_id = -1
    header_nodes = None
    seen_data = False
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            if not seen_data and tokens[0] == "N" and len(tokens) == 2:
                try:
                    header_nodes = int(tokens[1])
                except ValueError:
                    raise EdgeListParseError(line_no, raw.strip())
                seen_data = True
                continue
            seen_data = True
            if len(tokens) != 2:
                raise EdgeListParseError(line_no, raw.strip())
            try:
                u, v = int(tokens[0]), int(tokens[1])
            except ValueError:
                raise EdgeListParseError(line_no, raw.strip())
            if u == v:
                raise SelfLoopError(line_no, u)
            if u < 0 or v < 0:
                raise EdgeListParseError(line_no, raw.strip())
            edges.append((u, v))
            max_id = max(max_id, u, v)
    num_nodes = header_nodes if header_nodes is not None else max_id + 1
    if max_id >= num_nodes:
        raise ValueError(f"edge endpoint {max_id} exceeds declared node count {num_nodes}")
    return Graph.from_edges(num_nodes, edges)


def save_edge_list(g: Graph, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"N {g.num_nodes}\n")
        for u, v in g.edges:
            fh.write(f"{u} {v}\n")


def load_features(path, num_nodes: int) -> np.ndarray:
    """Read "id f1 ... fd" rows; every node id must appear exactly once."""
    rows = {}
    dim = None
    with open(path) as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            try:
                node = int(tokens[0])
                vals = [float(t) for t in tokens[1:]]
            except ValueError:
                raise EdgeListParseError(line_no, raw.strip())
            if dim is None:
                dim = len(vals)
            elif len(vals) != dim:
                raise ValueError(f"line {line_no}: expected {dim} features, got {len(vals)}")
            if node in rows or not 0 <= node < num_nodes:
                raise ValueError(f"line {line_no}: bad or repeated node id {node}")
            rows[node] = vals
    if len(rows) != num_nodes:
        raise ValueError(f"feature file covers {len(rows)} of {num_nodes} nodes")
    return np.array([rows[i] for i in range(num_nodes)], dtype=float)


def generate_sbm(blocks: int, per_block: int, p_in: float, p_out: float, seed: int) -> Graph:
    """Stochastic-block-model graph, deterministic per seed."""
    if not (0.0 <= p_in <= 1.0 and 0.0 <= p_out <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    if blocks < 1 or per_block < 1:
        raise ValueError("blocks and per_block must be positive")
    rng = np.random.default_rng(seed)
    n = blocks * per_block
    block_of = np.arange(n) // per_block
    iu, ju = np.triu_indices(n, k=1)
    p = np.where(block_of[iu] == block_of[ju], p_in, p_out)
    keep = rng.random(len(iu)) < p
    edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
    return Graph.from_edges(n, edges)


def init_features(g: Graph, dim: int, seed: int) -> Graph:
    """Overwrite features with i.i.d. Uniform(-1, 1) entries."""
    if dim < 1:
        raise ValueError("feature dimension must be >= 1")
    rng = np.random.default_rng(seed)
    return g.with_features(rng.uniform(-1.0, 1.0, size=(g.num_nodes, dim)))


def _split_counts(num_edges: int, ratios) -> tuple:
    """Valid/test sizes floor to their fractions; the remainder goes to train,
    so test never exceeds its configured share."""
    r_train, r_valid, r_test = ratios
    if abs(r_train + r_valid + r_test - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    n_valid = int(np.floor(r_valid * num_edges + 1e-9))
    n_test = int(np.floor(r_test * num_edges + 1e-9))
    n_train = num_edges - n_valid - n_test
    if n_train < 0:
        raise ValueError("ratios leave no room for train split")
    return n_train, n_valid, n_test


def _sample_non_edges(g: Graph, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform non-edges without replacement. Enumerates when the pair space
    is small; otherwise rejection-samples against the edge set."""
    n = g.num_nodes
    total_pairs = n * (n - 1) // 2
    available = total_pairs - g.num_edges
    if count > available:
        raise NoNegativesAvailable(
            f"need {count} non-edges but only {available} exist")
    if count == 0:
        return np.zeros((0, 2), dtype=np.int64)
    if total_pairs <= 5_000_000:
        iu, ju = np.triu_indices(n, k=1)
        mask = np.ones(total_pairs, dtype=bool)
        if g.num_edges:
            arr = np.asarray(g.edges, dtype=np.int64)
            # index of pair (u,v), u<v, in row-major upper-triangle order
            u, v = arr[:, 0], arr[:, 1]
            idx = u * n - u * (u + 1) // 2 + (v - u - 1)
            mask[idx] = False
        pool = np.flatnonzero(mask)
        pick = rng.choice(pool, size=count, replace=False)
        return np.stack([iu[pick], ju[pick]], axis=1).astype(np.int64)
    edge_set = g.edge_set()
    chosen: set = set()
    out = []
    while len(out) < count:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        pair = (min(u, v), max(u, v))
        if pair in edge_set or pair in chosen:
            continue
        chosen.add(pair)
        out.append(pair)
    return np.asarray(out, dtype=np.int64)


def split_links(g: Graph, ratios, seed: int) -> LinkDataset:
    """Partition positive edges by ratio and pair each split with an equal
    count of uniformly sampled negatives, disjoint across splits. The
    message-passing adjacency keeps only train positives."""
    n_train, n_valid, n_test = _split_counts(g.num_edges, ratios)
    rng = np.random.default_rng(seed)
    order = rng.permutation(g.num_edges)
    edges = [g.edges[i] for i in order]
    pos = {
        "train": edges[:n_train],
        "valid": edges[n_train:n_train + n_valid],
        "test": edges[n_train + n_valid:],
    }
    negatives = _sample_non_edges(g, g.num_edges, rng)
    neg = {
        "train": negatives[:n_train],
        "valid": negatives[n_train:n_train + n_valid],
        "test": negatives[n_train + n_valid:],
    }
    pairs = []
    for split in ("train", "valid", "test"):
        for u, v in pos[split]:
            pairs.append(LabeledPair(int(u), int(v), 1, split))
        for u, v in neg[split]:
            pairs.append(LabeledPair(int(u), int(v), 0, split))
    mp_adjacency = edges_to_adjacency(g.num_nodes, pos["train"])
    return LinkDataset(mp_adjacency, tuple(pairs), g.features)


def extract_khop(ds: LinkDataset, pair, k: int, label: int = 0) -> Subgraph:
    """Nodes within k hops of either endpoint over the message-passing
    adjacency. The anchor edge itself is removed from the local edges so the
    target link cannot leak into classification."""
    u, v = int(pair[0]), int(pair[1])
    n = ds.num_nodes
    if not (0 <= u < n and 0 <= v < n) or u == v:
        raise ValueError(f"invalid pair ({u},{v})")
    adj = ds.mp_adjacency
    frontier = {u, v}
    reached = {u, v}
    for _ in range(k):
        nxt = set()
        for node in frontier:
            nxt.update(adj.indices[adj.indptr[node]:adj.indptr[node + 1]].tolist())
        frontier = nxt - reached
        reached |= nxt
        if not frontier:
            break
    node_ids = tuple(sorted(reached))
    local = {node: i for i, node in enumerate(node_ids)}
    local_edges = []
    for node in node_ids:
        for nb in adj.indices[adj.indptr[node]:adj.indptr[node + 1]]:
            nb = int(nb)
            if nb in local and node < nb:
                if {node, nb} == {u, v}:
                    continue
                local_edges.append((local[node], local[nb]))
    local_edges = tuple(sorted(local_edges))
    feats = ds.features[list(node_ids)] if ds.features.shape[1] else np.zeros((len(node_ids), 0))
    return Subgraph(node_ids, local_edges, np.asarray(feats, dtype=float),
                    (local[u], local[v]), int(label))


def build_subgraph_dataset(ds: LinkDataset, k: int, split: str) -> list:
    """One labeled k-hop subgraph per pair of the given split."""
    pairs, labels = ds.split_arrays(split)
    return [extract_khop(ds, (int(p[0]), int(p[1])), k, label=int(y))
            for p, y in zip(pairs, labels)]


_SPLIT_CODES = {"train": 0, "valid": 1, "test": 2}
_CODE_SPLITS = {v: k for k, v in _SPLIT_CODES.items()}


def save_dataset(ds: LinkDataset, path) -> None:
    """npz snapshot of a LinkDataset (message-passing edges, labeled pairs,
    features); loading restores an identical dataset."""
    mp = sp.triu(ds.mp_adjacency, k=1).tocoo()
    np.savez(path,
             num_nodes=np.int64(ds.num_nodes),
             mp_edges=np.stack([mp.row, mp.col], axis=1).astype(np.int64),
             pair_u=np.array([p.u for p in ds.pairs], dtype=np.int64),
             pair_v=np.array([p.v for p in ds.pairs], dtype=np.int64),
             labels=np.array([p.label for p in ds.pairs], dtype=np.int64),
             splits=np.array([_SPLIT_CODES[p.split] for p in ds.pairs], dtype=np.int8),
             features=ds.features)


def load_dataset(path) -> LinkDataset:
    with np.load(path) as doc:
        num_nodes = int(doc["num_nodes"])
        mp_adjacency = edges_to_adjacency(num_nodes, doc["mp_edges"])
        pairs = tuple(LabeledPair(int(u), int(v), int(y), _CODE_SPLITS[int(s)])
                      for u, v, y, s in zip(doc["pair_u"], doc["pair_v"],
                                            doc["labels"], doc["splits"]))
        return LinkDataset(mp_adjacency, pairs, doc["features"])
