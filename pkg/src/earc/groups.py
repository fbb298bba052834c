"""Finite orthogonal matrix groups and their actions on embedded coordinates."""

import json
from dataclasses import dataclass

import numpy as np

from . import tensorops
from .embedding import embed_dim
from .errors import NonFiniteGroupError, ShapeError, ValidationError

MATCH_TOL = 1e-9
"""Frobenius distance below which two closure elements are considered equal."""

MAX_ORDER = 1024
"""Closure abort threshold; larger generated sets are treated as non-finite."""


@dataclass(frozen=True, eq=False)
class GroupRep:
    """A finite set of orthogonal matrices closed under multiplication.

    ``elements`` starts with the identity and then follows breadth-first
    discovery order from the generators, which makes the layout deterministic.
    """

    n: int
    generators: tuple
    elements: tuple
    order: int


def close_group(generators, match_tol=MATCH_TOL, max_order=MAX_ORDER):
    """Breadth-first closure of a generator set under matrix multiplication."""
    gens = [tensorops._as_matrix(g, f"generator {i}") for i, g in enumerate(generators)]
    if not gens:
        raise ValidationError("need at least one generator")
    n = gens[0].shape[0]
    for i, g in enumerate(gens):
        if g.shape != (n, n):
            raise ShapeError(f"generator {i} has shape {g.shape}, expected ({n}, {n})")
        if not np.all(np.isfinite(g)):
            raise ValidationError(f"generator {i} contains non-finite entries")
        if np.linalg.norm(g.T @ g - np.eye(n)) > match_tol:
            raise ValidationError(f"generator {i} is not orthogonal within {match_tol}")
    elements = [np.eye(n)]
    queue = [np.eye(n)]
    while queue:
        e = queue.pop(0)
        for g in gens:
            prod = e @ g
            if any(np.linalg.norm(prod - x) <= match_tol for x in elements):
                continue
            elements.append(prod)
            queue.append(prod)
            if len(elements) > max_order:
                raise NonFiniteGroupError(
                    f"closure exceeded max_order={max_order}; group is not finite "
                    "or match_tol is too tight"
                )
    for e in elements:
        e.setflags(write=False)
    for g in gens:
        g.setflags(write=False)
    return GroupRep(n=n, generators=tuple(gens), elements=tuple(elements),
                    order=len(elements))


def window_action(g, lag):
    """Action of a channel-space element on delay windows: g (x) I_lag."""
    g = tensorops._as_matrix(g, "g")
    if g.shape[0] != g.shape[1]:
        raise ShapeError(f"group element must be square, got {g.shape}")
    if lag == 1:
        return np.array(g)
    return tensorops.kron(g, np.eye(lag))


def lifted_action(g, lag, order, entry_cap=tensorops.ENTRY_CAP):
    """Block-diagonal action on the full embedding.

    The degree-k block is the k-fold Kronecker power of g (x) I_lag and the
    trailing scalar block is 1, so that
    embed((g (x) I_lag) x, p) = lifted_action(g, lag, p) @ embed(x, p).
    """
    h = window_action(g, lag)
    d = embed_dim(h.shape[0], order)
    tensorops._check_entries(d * d, entry_cap)
    blocks = [h]
    cur = h
    for _ in range(order - 1):
        cur = tensorops.kron(h, cur)
        blocks.append(cur)
    blocks.append(np.ones((1, 1)))
    return tensorops.direct_sum(blocks)


def reduced_action(g, lag, plan):
    """Action on compressed embedding coordinates: the q x q matrix with
    compress(embed((g (x) I_lag) x)) = reduced_action(g, lag, plan) @ compress(embed(x)).

    Equal to R @ lifted_action @ E but computed degree by degree through the
    monomial classes, without materialising the full-dimension matrix: the
    aggregated block A_k obeys
    A_k[a, c] = sum over distinct v in c of h[lead(a), v] * A_{k-1}[tail(a), c - v].
    """
    h = window_action(g, lag)
    m = h.shape[0]
    if m != plan.dim_in:
        raise ShapeError(
            f"plan dim_in={plan.dim_in} does not match element dimension {m}"
        )
    q = plan.reduced_dim
    out = np.zeros((q, q))
    out[q - 1, q - 1] = 1.0
    lo, hi = plan.degree_class_range(1)
    out[lo:hi, lo:hi] = h
    prev = h
    prev_lo = lo
    for k in range(2, plan.order + 1):
        lo, hi = plan.degree_class_range(k)
        nk = hi - lo
        tuples = [plan.class_tuple(lo + c) for c in range(nk)]
        lead_rows = np.array([t[0] for t in tuples])
        tail_rows = np.array([plan.parent[lo + c] - prev_lo for c in range(nk)])
        block = np.zeros((nk, nk))
        # class index of a sorted tuple within the previous degree
        prev_pos = {plan.class_tuple(prev_lo + c): c for c in range(prev.shape[0])}
        for c, tup in enumerate(tuples):
            seen = set()
            for t in range(k):
                v = tup[t]
                if v in seen:
                    continue
                seen.add(v)
                rest = prev_pos[tup[:t] + tup[t + 1:]]
                block[:, c] += h[lead_rows, v] * prev[tail_rows, rest]
        out[lo:hi, lo:hi] = block
        prev = block
        prev_lo = lo
    return out


def to_json_dict(rep):
    """JSON-serialisable encoding: dimension plus row-major generator entries."""
    return {
        "n": rep.n,
        "generators": [[float(v) for v in g.ravel()] for g in rep.generators],
    }


def from_json_dict(data, match_tol=MATCH_TOL, max_order=MAX_ORDER):
    """Rebuild a group from its JSON encoding; the closure is recomputed."""
    try:
        n = int(data["n"])
        flat = data["generators"]
        gens = [np.asarray(g, dtype=np.float64).reshape(n, n) for g in flat]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed group encoding: {exc}") from exc
    return close_group(gens, match_tol=match_tol, max_order=max_order)


def save_group(rep, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(to_json_dict(rep), fh)
        fh.write("\n")


def load_group(path):
    with open(path, "r", encoding="utf-8") as fh:
        return from_json_dict(json.load(fh))
