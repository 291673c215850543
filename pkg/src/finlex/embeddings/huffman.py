"""Huffman coding of a vocabulary for the hierarchical softmax output layer."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass
class HuffmanTree:
    """Per-word codes and root-to-leaf paths over ``V - 1`` inner nodes.

    ``codes[w][i]`` is the branch taken at inner node ``paths[w][i]``.
    The flat arrays hold the same data in CSR layout for the training kernel.
    """

    codes: list[np.ndarray]
    paths: list[np.ndarray]

    def __post_init__(self):
        lengths = np.array([len(c) for c in self.codes], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(lengths)]).astype(np.int64)
        self.codes_flat = (np.concatenate(self.codes) if self.codes else np.empty(0)).astype(np.int8)
        self.paths_flat = (np.concatenate(self.paths) if self.paths else np.empty(0)).astype(np.int64)

    @property
    def n_inner(self) -> int:
        return len(self.codes) - 1

    def code_lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def code_str(self, w: int) -> str:
        return "".join(str(int(b)) for b in self.codes[w])


def build_huffman(counts: Sequence[int]) -> HuffmanTree:
    """Standard Huffman merge; among equal weights the lower node id is merged first.

    Leaves carry ids ``0..V-1`` (vocabulary index), inner nodes ``V, V+1, ...``
    in creation order, so a leaf always wins a tie against an inner node.
    """
    counts = np.asarray(counts, dtype=np.int64)
    V = len(counts)
    if V < 2:
        raise ValueError(f"Huffman tree needs at least 2 words, got {V}")

    heap = [(int(c), i) for i, c in enumerate(counts)]
    heapq.heapify(heap)
    parent = np.full(2 * V - 1, -1, dtype=np.int64)
    bit = np.zeros(2 * V - 1, dtype=np.int8)
    next_id = V
    while len(heap) > 1:
        w0, a = heapq.heappop(heap)
        w1, b = heapq.heappop(heap)
        parent[a], bit[a] = next_id, 0
        parent[b], bit[b] = next_id, 1
        heapq.heappush(heap, (w0 + w1, next_id))
        next_id += 1

    codes, paths = [], []
    for w in range(V):
        code, path = [], []
        node = w
        while parent[node] != -1:
            code.append(bit[node])
            path.append(parent[node] - V)
            node = parent[node]
        codes.append(np.array(code[::-1], dtype=np.int8))
        paths.append(np.array(path[::-1], dtype=np.int64))
    return HuffmanTree(codes, paths)
