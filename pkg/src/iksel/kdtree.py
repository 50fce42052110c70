"""Exact k-nearest-neighbour and radius search over a static point set.

The tree is bulk-built by recursive median splits along the dimension of
widest spread.  Points are stored permuted so every leaf is a contiguous
slice, which lets leaf scans run as a single numpy expression.

Queries are exact: squared distances are evaluated with the same row-wise
arithmetic a brute-force scan would use, and equal distances are ordered by
original point index.
"""
import heapq

import numpy as np

# relative slack on pruning bounds; guards against last-ulp disagreement
# between the box bound and the row-wise distance of a point inside the box
_PRUNE_SLACK = 1.0 + 1e-12


def squared_distances(points, x):
    d = points - x
    return (d * d).sum(axis=1)


class KDTree:
    """Static KD-tree over an ``(n, m)`` array of points."""

    def __init__(self, points, leaf_size=48):
        points = np.ascontiguousarray(points, dtype=float)
        if points.ndim != 2 or len(points) == 0:
            raise ValueError("KDTree needs a non-empty (n, m) array")
        self.n, self.m = points.shape
        self.leaf_size = int(leaf_size)

        perm = np.arange(self.n)
        starts, ends, lefts, rights, los, his = [], [], [], [], [], []

        def new_node(s, e):
            block = points[perm[s:e]]
            starts.append(s)
            ends.append(e)
            lefts.append(-1)
            rights.append(-1)
            los.append(block.min(axis=0))
            his.append(block.max(axis=0))
            return len(starts) - 1

        stack = [new_node(0, self.n)]
        while stack:
            node = stack.pop()
            s, e = starts[node], ends[node]
            if e - s <= self.leaf_size:
                continue
            spread = his[node] - los[node]
            dim = int(np.argmax(spread))
            if spread[dim] == 0.0:
                continue  # all points coincide
            mid = (s + e) // 2
            idx = perm[s:e]
            perm[s:e] = idx[np.argpartition(points[idx, dim], mid - s, kind="introselect")]
            lefts[node] = new_node(s, mid)
            rights[node] = new_node(mid, e)
            stack.extend((lefts[node], rights[node]))

        self.index = perm
        self.points = points[perm]
        self._start = starts
        self._end = ends
        self._left = lefts
        self._right = rights
        self._lo = np.array(los)
        self._hi = np.array(his)

    def __len__(self):
        return self.n

    def _box_bound(self, node, x):
        d = np.maximum(np.maximum(self._lo[node] - x, x - self._hi[node]), 0.0)
        return float((d * d).sum())

    def query(self, x, k):
        """Indices and squared distances of the ``k`` nearest points, ascending."""
        x = np.asarray(x, dtype=float)
        k = min(int(k), self.n)
        if k < 1:
            raise ValueError("k must be at least 1")
        best_idx = np.empty(0, dtype=np.intp)
        best_d2 = np.empty(0)
        # leaf hits not yet merged into the sorted best list
        pend_idx, pend_d2, pending = [], [], 0
        worst = np.inf
        heap = [(0.0, 0)]
        while heap:
            bound, node = heapq.heappop(heap)
            if bound > worst * _PRUNE_SLACK:
                break
            left = self._left[node]
            if left >= 0:
                right = self._right[node]
                for child in (left, right):
                    b = self._box_bound(child, x)
                    if b <= worst * _PRUNE_SLACK:
                        heapq.heappush(heap, (b, child))
                continue
            s, e = self._start[node], self._end[node]
            d2 = squared_distances(self.points[s:e], x)
            idx = self.index[s:e]
            if worst < np.inf:
                keep = d2 <= worst * _PRUNE_SLACK
                d2, idx = d2[keep], idx[keep]
            pend_d2.append(d2)
            pend_idx.append(idx)
            pending += len(d2)
            if len(best_d2) + pending >= k:
                best_d2, best_idx = self._merge(best_d2, best_idx, pend_d2, pend_idx, k)
                pend_idx, pend_d2, pending = [], [], 0
                worst = best_d2[-1]
        if pending:
            best_d2, best_idx = self._merge(best_d2, best_idx, pend_d2, pend_idx, k)
        return best_idx, best_d2

    @staticmethod
    def _merge(best_d2, best_idx, pend_d2, pend_idx, k):
        d2 = np.concatenate([best_d2, *pend_d2])
        idx = np.concatenate([best_idx, *pend_idx])
        order = np.lexsort((idx, d2))[:k]
        return d2[order], idx[order]

    def query_radius(self, x, r2):
        """Indices and squared distances of all points with ``d^2 <= r2``, ascending."""
        x = np.asarray(x, dtype=float)
        limit = float(r2) * _PRUNE_SLACK  # inf for r2 near the float maximum, which is fine
        found_idx, found_d2 = [], []
        stack = [0]
        while stack:
            node = stack.pop()
            if self._box_bound(node, x) > limit:
                continue
            left = self._left[node]
            if left >= 0:
                stack.append(left)
                stack.append(self._right[node])
                continue
            s, e = self._start[node], self._end[node]
            d2 = squared_distances(self.points[s:e], x)
            keep = d2 <= r2
            found_d2.append(d2[keep])
            found_idx.append(self.index[s:e][keep])
        if not found_idx:
            return np.empty(0, dtype=np.intp), np.empty(0)
        d2 = np.concatenate(found_d2)
        idx = np.concatenate(found_idx)
        order = np.lexsort((idx, d2))
        return idx[order], d2[order]
