"""Trigger-set construction for both link-prediction pathways.

Node-representation pathway: sample a node subset, flip every internal pair
(induced edges removed, internal non-edges added), and overwrite the sampled
nodes' feature rows with a secret uniform vector. The labeled trigger pairs
are exactly the internal pairs, positive where the flipped graph now has an
edge.

Subgraph pathway: sample a fraction of the training subgraphs, invert their
labels, and replace every node feature row with the secret vector; structure
is untouched.

`.gwm` files hold the canonical little-endian serialization below, which is
what registration hashes. Pair and edge lists are sorted, so equal watermarks
always produce identical bytes.
"""

import io
import math
import struct

import numpy as np
import scipy.sparse as sp

from .graph import Graph, Subgraph, edges_to_adjacency
from .nn import PairBatch, SubgraphBatch, evaluate_auc

_MAGIC = b"GWM1"
_KIND_NODE_REP = 0
_KIND_SUBGRAPH = 1
# absorbs float noise at exact-integer ceil boundaries (e.g. 0.35 * 20)
_CEIL_EPS = 1e-9


def watermark_vector(dim: int, seed: int) -> np.ndarray:
    """Secret feature row, i.i.d. Uniform(-1, 1), reproducible per seed."""
    rng = np.random.default_rng(seed)
    return rng.uniform(-1.0, 1.0, size=dim)


class NodeRepWatermark:
    """Trigger set for node-representation models: modified graph state plus
    labeled internal pairs of the sampled subset."""

    def __init__(self, num_nodes: int, nodes: np.ndarray, pairs: np.ndarray,
                 labels: np.ndarray, edges, features: np.ndarray,
                 vector: np.ndarray, rate: float):
        self.num_nodes = int(num_nodes)
        self.nodes = np.asarray(nodes, dtype=np.int64)
        self.pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.edges = tuple(sorted((int(u), int(v)) for u, v in edges))
        self.features = np.asarray(features, dtype=float)
        self.vector = np.asarray(vector, dtype=float)
        self.rate = float(rate)

    @property
    def kind(self) -> str:
        return "node_rep"

    def adjacency(self) -> sp.csr_matrix:
        return edges_to_adjacency(self.num_nodes, self.edges)

    def internal_pair_set(self) -> frozenset:
        """Every unordered pair inside the sampled subset: the flip set."""
        s = sorted(int(v) for v in self.nodes)
        return frozenset((u, v) for i, u in enumerate(s) for v in s[i + 1:])

    def batch(self) -> PairBatch:
        return PairBatch(self.adjacency(), self.features, self.pairs, self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, NodeRepWatermark) and serialize_wm(self) == serialize_wm(other)


class SubgraphWatermark:
    """Trigger set for subgraph classifiers: feature-replaced subgraphs with
    inverted labels."""

    def __init__(self, subgraphs, labels: np.ndarray, vector: np.ndarray,
                 rate: float, indices=None):
        self.subgraphs = list(subgraphs)
        self.labels = np.asarray(labels, dtype=np.int64)
        self.vector = np.asarray(vector, dtype=float)
        self.rate = float(rate)
        self.indices = None if indices is None else np.asarray(indices, dtype=np.int64)
        if len(self.subgraphs) != len(self.labels):
            raise ValueError("one label per subgraph required")

    @property
    def kind(self) -> str:
        return "subgraph"

    def batch(self) -> SubgraphBatch:
        return SubgraphBatch(self.subgraphs, self.labels)

    def __eq__(self, other) -> bool:
        return isinstance(other, SubgraphWatermark) and serialize_wm(self) == serialize_wm(other)


def gen_node_rep_wm(g: Graph, rate: float, seed: int) -> NodeRepWatermark:
    """Build the node-representation trigger set at the given watermarking
    rate (subset size = round(rate * num_nodes), half up)."""
    if not 0.0 < rate < 1.0:
        raise ValueError("watermarking rate must lie in (0, 1)")
    size = int(math.floor(rate * g.num_nodes + 0.5))
    if size < 2:
        raise ValueError(f"subset of {size} nodes has no internal pairs")
    rng = np.random.default_rng(seed)
    nodes = np.sort(rng.choice(g.num_nodes, size=size, replace=False))
    vector = watermark_vector(g.features.shape[1], seed=int(rng.integers(0, 2**63)))
    return build_node_rep_wm(g, nodes, vector, rate)


def build_node_rep_wm(g: Graph, nodes: np.ndarray, vector: np.ndarray,
                      rate: float) -> NodeRepWatermark:
    """Deterministic core: flip all internal pairs of `nodes` and substitute
    their feature rows with `vector`."""
    nodes = np.asarray(sorted(int(v) for v in nodes), dtype=np.int64)
    node_set = set(nodes.tolist())
    edge_set = g.edge_set()
    internal = [(u, v) for i, u in enumerate(nodes.tolist())
                for v in nodes.tolist()[i + 1:]]
    induced = [p for p in internal if p in edge_set]
    absent = [p for p in internal if p not in edge_set]
    pairs = np.asarray(internal, dtype=np.int64).reshape(-1, 2)
    labels = np.asarray([0 if p in edge_set else 1 for p in internal], dtype=np.int64)
    flipped_edges = [e for e in g.edges if not (e[0] in node_set and e[1] in node_set)]
    flipped_edges.extend(absent)
    features = g.features.copy()
    features[nodes] = vector
    assert len(induced) + len(absent) == len(internal)
    return NodeRepWatermark(g.num_nodes, nodes, pairs, labels, flipped_edges,
                            features, vector, rate)


def gen_subgraph_wm(train_subgraphs, rate: float, vector: np.ndarray,
                    seed: int) -> SubgraphWatermark:
    """Sample ceil(rate * T) distinct training subgraphs, invert their labels,
    and replace every feature row with the secret vector."""
    if not 0.0 < rate < 1.0:
        raise ValueError("watermarking rate must lie in (0, 1)")
    total = len(train_subgraphs)
    if total < 1:
        raise ValueError("need at least one training subgraph")
    count = max(1, math.ceil(rate * total - _CEIL_EPS))
    rng = np.random.default_rng(seed)
    indices = np.sort(rng.choice(total, size=count, replace=False))
    vector = np.asarray(vector, dtype=float)
    modified = []
    labels = []
    for idx in indices.tolist():
        sg = train_subgraphs[idx]
        feats = np.tile(vector, (sg.num_nodes, 1))
        inverted = 1 - int(sg.label)
        modified.append(Subgraph(sg.node_ids, sg.local_edges, feats, sg.anchor, inverted))
        labels.append(inverted)
    return SubgraphWatermark(modified, np.asarray(labels), vector, rate, indices)


def _pack_pairs(out: io.BytesIO, pairs) -> None:
    out.write(struct.pack("<I", len(pairs)))
    for u, v in pairs:
        out.write(struct.pack("<II", int(u), int(v)))


def serialize_wm(wm) -> bytes:
    """Canonical byte encoding; registration hashes these bytes."""
    out = io.BytesIO()
    out.write(_MAGIC)
    if isinstance(wm, NodeRepWatermark):
        out.write(struct.pack("<B", _KIND_NODE_REP))
        d = wm.features.shape[1]
        out.write(struct.pack("<IId", wm.num_nodes, d, wm.rate))
        out.write(struct.pack("<I", len(wm.nodes)))
        out.write(np.asarray(np.sort(wm.nodes), dtype="<u4").tobytes())
        order = np.lexsort((wm.pairs[:, 1], wm.pairs[:, 0]))
        out.write(struct.pack("<I", len(order)))
        for i in order:
            out.write(struct.pack("<IIB", int(wm.pairs[i, 0]), int(wm.pairs[i, 1]),
                                  int(wm.labels[i])))
        _pack_pairs(out, wm.edges)
        out.write(np.asarray(wm.vector, dtype="<f8").tobytes())
        out.write(np.ascontiguousarray(wm.features, dtype="<f8").tobytes())
        return out.getvalue()
    if isinstance(wm, SubgraphWatermark):
        out.write(struct.pack("<B", _KIND_SUBGRAPH))
        d = len(wm.vector)
        out.write(struct.pack("<Id", d, wm.rate))
        out.write(np.asarray(wm.vector, dtype="<f8").tobytes())
        records = []
        for sg, label in zip(wm.subgraphs, wm.labels.tolist()):
            rec = io.BytesIO()
            rec.write(struct.pack("<I", sg.num_nodes))
            rec.write(np.asarray(sg.node_ids, dtype="<u4").tobytes())
            _pack_pairs(rec, sorted(sg.local_edges))
            rec.write(struct.pack("<IIB", int(sg.anchor[0]), int(sg.anchor[1]), int(label)))
            records.append(rec.getvalue())
        out.write(struct.pack("<I", len(records)))
        for rec in sorted(records):
            out.write(struct.pack("<I", len(rec)))
            out.write(rec)
        return out.getvalue()
    raise TypeError(f"cannot serialize {type(wm)!r}")


def deserialize_wm(data: bytes):
    try:
        return _deserialize_wm(data)
    except struct.error as exc:
        raise ValueError(f"truncated watermark blob: {exc}") from exc


def _deserialize_wm(data: bytes):
    buf = io.BytesIO(data)
    if buf.read(len(_MAGIC)) != _MAGIC:
        raise ValueError("not a watermark blob")
    (kind,) = struct.unpack("<B", buf.read(1))
    if kind == _KIND_NODE_REP:
        num_nodes, d, rate = struct.unpack("<IId", buf.read(16))
        (n_s,) = struct.unpack("<I", buf.read(4))
        nodes = np.frombuffer(buf.read(4 * n_s), dtype="<u4").astype(np.int64)
        (n_pairs,) = struct.unpack("<I", buf.read(4))
        pairs = np.empty((n_pairs, 2), dtype=np.int64)
        labels = np.empty(n_pairs, dtype=np.int64)
        for i in range(n_pairs):
            u, v, y = struct.unpack("<IIB", buf.read(9))
            pairs[i] = (u, v)
            labels[i] = y
        (n_edges,) = struct.unpack("<I", buf.read(4))
        edges = [struct.unpack("<II", buf.read(8)) for _ in range(n_edges)]
        vector = np.frombuffer(buf.read(8 * d), dtype="<f8").copy()
        features = np.frombuffer(buf.read(8 * num_nodes * d), dtype="<f8").reshape(num_nodes, d).copy()
        if buf.read(1):
            raise ValueError("trailing bytes in watermark blob")
        return NodeRepWatermark(num_nodes, nodes, pairs, labels, edges, features, vector, rate)
    if kind == _KIND_SUBGRAPH:
        d, rate = struct.unpack("<Id", buf.read(12))
        vector = np.frombuffer(buf.read(8 * d), dtype="<f8").copy()
        (count,) = struct.unpack("<I", buf.read(4))
        subgraphs = []
        labels = []
        for _ in range(count):
            (rec_len,) = struct.unpack("<I", buf.read(4))
            rec = io.BytesIO(buf.read(rec_len))
            (n,) = struct.unpack("<I", rec.read(4))
            node_ids = tuple(np.frombuffer(rec.read(4 * n), dtype="<u4").astype(int).tolist())
            (n_edges,) = struct.unpack("<I", rec.read(4))
            edges = tuple(struct.unpack("<II", rec.read(8)) for _ in range(n_edges))
            a0, a1, label = struct.unpack("<IIB", rec.read(9))
            feats = np.tile(vector, (n, 1))
            subgraphs.append(Subgraph(node_ids, edges, feats, (a0, a1), int(label)))
            labels.append(int(label))
        if buf.read(1):
            raise ValueError("trailing bytes in watermark blob")
        return SubgraphWatermark(subgraphs, np.asarray(labels), vector, rate)
    raise ValueError(f"unknown watermark kind {kind}")


def save_wm(wm, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_wm(wm))


def load_wm(path):
    with open(path, "rb") as fh:
        return deserialize_wm(fh.read())


def watermark_auc(model, wm) -> float:
    """AUC of the model on the trigger set, via the pathway's evaluation."""
    return evaluate_auc(model, wm.batch())
