"""Minimax question trees: structure, values, answers and the JSON file format.

Nodes are dense integer ids. Trees built from documents number nodes in
depth-first document order, so the root is node 0 and leaf indices follow
the order in which leaves appear in the text.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .errors import MalformedTree, TreeSyntaxError

MAX = "MAX"
MIN = "MIN"
LABELS = (MAX, MIN)


class Answer(str, Enum):
    WIN = "win"
    LOSE = "lose"

    def flip(self) -> "Answer":
        return Answer.LOSE if self is Answer.WIN else Answer.WIN


@dataclass(frozen=True, eq=False)
class GameTree:
    """Immutable rooted tree with MAX/MIN internal nodes and indexed leaves.

    ``labels[s]`` is ``"MAX"``/``"MIN"`` for internal nodes and ``None`` for
    leaves, ``children[s]`` the ordered child ids, ``names[s]`` the leaf name
    (``None`` on internal nodes). Everything else is derived.
    """

    labels: tuple
    children: tuple
    names: tuple = None

    root: int = field(init=False)
    parent: tuple = field(init=False)
    leaves: tuple = field(init=False)       # leaf index -> node id
    leaf_index: tuple = field(init=False)   # node id -> leaf index, -1 if internal
    postorder: tuple = field(init=False)
    depth: tuple = field(init=False)
    leaf_span: tuple = field(init=False)    # node id -> (first, last + 1) leaf index below it

    def __post_init__(self):
        labels = tuple(self.labels)
        children = tuple(tuple(int(c) for c in ch) for ch in self.children)
        n = len(labels)
        names = self.names
        if names is None:
            names = (None,) * n
        names = tuple(names)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "children", children)
        parent, root = _check_structure(labels, children, names)

        # DFS from the root fixes leaf order and a post-order schedule.
        leaves, post, depth = [], [], [0] * n
        stack = [(root, False)]
        while stack:
            s, expanded = stack.pop()
            if expanded:
                post.append(s)
                continue
            stack.append((s, True))
            if not children[s]:
                leaves.append(s)
            for c in reversed(children[s]):
                depth[c] = depth[s] + 1
                stack.append((c, False))
        leaf_index = [-1] * n
        for i, s in enumerate(leaves):
            leaf_index[s] = i
        names = tuple(
            (names[s] if names[s] is not None else f"l{leaf_index[s]}") if not children[s] else None
            for s in range(n)
        )
        leaf_names = [names[s] for s in leaves]
        if len(set(leaf_names)) != len(leaf_names):
            raise MalformedTree("leaf names must be unique")

        object.__setattr__(self, "names", names)
        object.__setattr__(self, "root", root)
        object.__setattr__(self, "parent", tuple(parent))
        object.__setattr__(self, "leaves", tuple(leaves))
        object.__setattr__(self, "leaf_index", tuple(leaf_index))
        object.__setattr__(self, "postorder", tuple(post))
        object.__setattr__(self, "depth", tuple(depth))
        span = [None] * n
        for s in post:
            if not children[s]:
                span[s] = (leaf_index[s], leaf_index[s] + 1)
            else:
                span[s] = (span[children[s][0]][0], span[children[s][-1]][1])
        object.__setattr__(self, "leaf_span", tuple(span))

    # -- basic queries ---------------------------------------------------
    @property
    def n_nodes(self) -> int:
        return len(self.labels)

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    @property
    def height(self) -> int:
        return max(self.depth)

    @property
    def max_arity(self) -> int:
        return max(len(ch) for ch in self.children)

    def is_leaf(self, s: int) -> bool:
        return not self.children[s]

    @property
    def leaf_names(self) -> list:
        return [self.names[s] for s in self.leaves]

    def descendant_leaves(self, s: int) -> list:
        """Leaf indices below ``s`` (a contiguous range in leaf order)."""
        self._check_node(s)
        return list(range(*self.leaf_span[s]))

    def path_to_root(self, s: int) -> list:
        path = [s]
        while self.parent[path[-1]] >= 0:
            path.append(self.parent[path[-1]])
        return path

    def _check_node(self, s):
        if not isinstance(s, (int,)) or not 0 <= s < self.n_nodes:
            raise KeyError(f"unknown node id {s!r}")

    # -- structural equality (derived fields follow from the raw ones) ---
    def __eq__(self, other):
        if not isinstance(other, GameTree):
            return NotImplemented
        return (self.labels, self.children, self.names) == (other.labels, other.children, other.names)

    def __hash__(self):
        return hash((self.labels, self.children, self.names))

    # -- (de)serialisation -----------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "GameTree":
        if not isinstance(doc, dict) or "root" not in doc:
            raise TreeSyntaxError("document must be an object with a 'root' key")
        labels, children, names = [], [], []

        def visit(obj, path):
            if not isinstance(obj, dict):
                raise TreeSyntaxError(f"node at {path} must be an object")
            sid = len(labels)
            labels.append(None)
            children.append([])
            names.append(None)
            if "leaf" in obj:
                if set(obj) - {"leaf"}:
                    raise TreeSyntaxError(f"leaf at {path} has extra keys {sorted(set(obj) - {'leaf'})}")
                if not isinstance(obj["leaf"], str):
                    raise TreeSyntaxError(f"leaf name at {path} must be a string")
                names[sid] = obj["leaf"]
                return sid
            label = obj.get("label")
            if label not in LABELS:
                raise TreeSyntaxError(f"internal node at {path} needs label MAX or MIN, got {label!r}")
            kids = obj.get("children")
            if not isinstance(kids, list) or not kids:
                raise TreeSyntaxError(f"internal node at {path} needs a non-empty 'children' list")
            labels[sid] = label
            for i, k in enumerate(kids):
                children[sid].append(visit(k, f"{path}.children[{i}]"))
            return sid

        visit(doc["root"], "root")
        try:
            return cls(tuple(labels), tuple(tuple(c) for c in children), tuple(names))
        except MalformedTree as exc:
            raise TreeSyntaxError(str(exc)) from exc

    def to_dict(self) -> dict:
        def build(s):
            if not self.children[s]:
                return {"leaf": self.names[s]}
            return {"label": self.labels[s], "children": [build(c) for c in self.children[s]]}

        return {"root": build(self.root)}


def _check_structure(labels, children, names):
    n = len(labels)
    if n == 0:
        raise MalformedTree("tree has no nodes")
    if len(children) != n or len(names) != n:
        raise MalformedTree("labels, children and names must have equal length")
    parent = [-1] * n
    for s, ch in enumerate(children):
        if len(set(ch)) != len(ch):
            raise MalformedTree(f"node {s} lists a child twice")
        for c in ch:
            if not 0 <= c < n:
                raise MalformedTree(f"node {s} has out-of-range child {c}")
            if c == s:
                raise MalformedTree(f"node {s} is its own child")
            if parent[c] != -1:
                raise MalformedTree(f"node {c} has two parents")
            parent[c] = s
        if ch and labels[s] not in LABELS:
            raise MalformedTree(f"internal node {s} needs label MAX or MIN, got {labels[s]!r}")
        if not ch and labels[s] is not None:
            raise MalformedTree(f"leaf {s} must not carry a label")
    roots = [s for s in range(n) if parent[s] == -1]
    if len(roots) != 1:
        raise MalformedTree(f"expected exactly one root, found {len(roots)}")
    root = roots[0]
    seen, stack = 0, [root]
    while stack:
        s = stack.pop()
        seen += 1
        stack.extend(children[s])
    if seen != n:
        raise MalformedTree("tree has orphaned nodes or a cycle")
    return parent, root


def validate(tree: GameTree) -> None:
    """Re-check every structural invariant; raises MalformedTree on failure."""
    _check_structure(tree.labels, tree.children, tree.names)
    if sorted(tree.leaf_index[s] for s in tree.leaves) != list(range(tree.n_leaves)):
        raise MalformedTree("leaf index is not a bijection")


def from_nested(nested, root_label=MAX) -> GameTree:
    """Build a tree from nested Python lists; scalars (or strings) are leaves.

    Labels alternate with depth starting at ``root_label`` unless a node is given
    as ``("MIN", [...])``/``("MAX", [...])``.
    """
    labels, children, names = [], [], []

    def visit(obj, label):
        sid = len(labels)
        labels.append(None)
        children.append([])
        names.append(None)
        if isinstance(obj, tuple) and len(obj) == 2 and obj[0] in LABELS:
            label, obj = obj
        if isinstance(obj, list):
            labels[sid] = label
            nxt = MIN if label == MAX else MAX
            for k in obj:
                children[sid].append(visit(k, nxt))
        elif isinstance(obj, str):
            names[sid] = obj
        return sid

    visit(nested, root_label)
    return GameTree(tuple(labels), tuple(tuple(c) for c in children), tuple(names))


def complete_tree(depth: int, arity: int, root_label: str = MAX) -> GameTree:
    """Complete ``arity``-ary tree with labels alternating by depth."""
    if depth < 0 or arity < 1:
        raise ValueError("need depth >= 0 and arity >= 1")

    def nest(d):
        return 0 if d == 0 else [nest(d - 1) for _ in range(arity)]

    return from_nested(nest(depth), root_label)


def parse_tree(text: str) -> GameTree:
    if not text or not text.strip():
        raise TreeSyntaxError("empty document", 1, 1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    return GameTree.from_dict(doc)


def serialize_tree(tree: GameTree, indent=None) -> str:
    return json.dumps(tree.to_dict(), indent=indent)


def parse_means(text: str, tree: GameTree) -> list:
    """Means document (leaf name -> real) to a list in leaf-index order."""
    if not text or not text.strip():
        raise TreeSyntaxError("empty document", 1, 1)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TreeSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    if not isinstance(doc, dict):
        raise TreeSyntaxError("means document must be an object")
    names = tree.leaf_names
    missing = [nm for nm in names if nm not in doc]
    extra = sorted(set(doc) - set(names))
    if missing or extra:
        raise TreeSyntaxError(f"means do not match leaves (missing {missing}, unknown {extra})")
    out = []
    for nm in names:
        v = doc[nm]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise TreeSyntaxError(f"mean for leaf {nm!r} must be a number")
        out.append(float(v))
    return out


def serialize_means(tree: GameTree, means: Sequence[float]) -> str:
    return json.dumps({nm: float(m) for nm, m in zip(tree.leaf_names, means)})


# -- values and answers --------------------------------------------------

def node_values(tree: GameTree, means: Sequence[float]) -> list:
    """Minimax value of every node (indexed by node id)."""
    if len(means) != tree.n_leaves:
        raise ValueError(f"expected {tree.n_leaves} means, got {len(means)}")
    vals = [0.0] * tree.n_nodes
    labels, children, leaf_index = tree.labels, tree.children, tree.leaf_index
    for s in tree.postorder:
        ch = children[s]
        if not ch:
            vals[s] = float(means[leaf_index[s]])
        elif labels[s] == MAX:
            vals[s] = max(vals[c] for c in ch)
        else:
            vals[s] = min(vals[c] for c in ch)
    return vals


def value(tree: GameTree, s: int, means: Sequence[float]) -> float:
    tree._check_node(s)
    return node_values(tree, means)[s]


def answer(tree: GameTree, s: int, means: Sequence[float], theta: float) -> Answer:
    return Answer.WIN if value(tree, s, means) >= theta else Answer.LOSE


def node_answers(tree: GameTree, means: Sequence[float], theta: float) -> list:
    return [Answer.WIN if v >= theta else Answer.LOSE for v in node_values(tree, means)]


def good_children(tree: GameTree, s: int, means: Sequence[float], theta: float) -> set:
    tree._check_node(s)
    if tree.is_leaf(s):
        raise ValueError(f"node {s} is a leaf and has no children")
    vals = node_values(tree, means)
    return {c for c in tree.children[s] if vals[c] >= theta}


def iter_internal(tree: GameTree) -> Iterable[int]:
    return (s for s in tree.postorder if tree.children[s])
