"""Degree-d slices of polynomial rings and exact subspace linear algebra.

Monomials of a fixed degree are indexed by the combinatorial number system:
an exponent vector maps to the colex rank of the bar-position subset of its
stars-and-bars word, read in a fixed variable order.  Polynomials of one
degree are dense int64 vectors over that index; subspaces are canonical
reduced row-echelon bases.  Subspaces spanned by unit vectors (the generic
case under diagonal actions) are kept as sorted monomial index sets, and
operations stay in that representation whenever both operands allow it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import EngineError, InputError

# Hard cap on materialized component data (count * nvars); components past
# this point are beyond desk scale and callers get a clean diagnostic.
MAX_COMPONENT_CELLS = 60_000_000

_BASIS_CACHE: dict[tuple[int, int], "MonomialBasis"] = {}
_TABLE_CACHE: dict[tuple, object] = {}


def clear_caches():
    _BASIS_CACHE.clear()
    _TABLE_CACHE.clear()


def monomial_count(nvars: int, degree: int) -> int:
    if nvars == 0:
        return 1 if degree == 0 else 0
    return math.comb(nvars + degree - 1, degree)


class MonomialBasis:
    """All monomials of one degree in a fixed number of variables."""

    def __init__(self, nvars: int, degree: int):
        if nvars < 0 or degree < 0:
            raise InputError("nvars and degree must be nonnegative")
        self.nvars = nvars
        self.degree = degree
        self.count = monomial_count(nvars, degree)
        if self.count * max(nvars, 1) > MAX_COMPONENT_CELLS:
            raise EngineError(
                f"degree-{degree} component in {nvars} variables has "
                f"{self.count} monomials; beyond the configured desk-scale cap"
            )
        self._binom = _binom_table(nvars + degree, nvars + 1)
        self.exponents = self._build_exponents()

    def _build_exponents(self) -> np.ndarray:
        n, d = self.nvars, self.degree
        if self.count == 0:
            return np.zeros((0, n), dtype=np.int64)
        if n == 0:
            return np.zeros((1, 0), dtype=np.int64)
        if n == 1:
            return np.full((1, 1), d, dtype=np.int64)
        # Bar positions of every stars-and-bars word, then sort by rank.
        raw = np.fromiter(
            itertools.chain.from_iterable(
                itertools.combinations(range(n + d - 1), n - 1)
            ),
            dtype=np.int64,
            count=self.count * (n - 1),
        ).reshape(self.count, n - 1)
        exps = np.zeros((self.count, n), dtype=np.int64)
        exps[:, 0] = raw[:, 0]
        exps[:, 1 : n - 1] = raw[:, 1:] - raw[:, :-1] - 1
        exps[:, n - 1] = d - exps[:, : n - 1].sum(axis=1)
        ranks = self.rank_rows(exps)
        order = np.argsort(ranks)
        exps = np.ascontiguousarray(exps[order])
        if not np.array_equal(ranks[order], np.arange(self.count)):
            raise EngineError("monomial ranking failed to be a bijection")
        return exps

    def rank_rows(self, exps: np.ndarray) -> np.ndarray:
        """Vectorized rank of exponent rows (each summing to self.degree)."""
        exps = np.asarray(exps, dtype=np.int64)
        if exps.ndim == 1:
            exps = exps[None, :]
        if self.nvars <= 1:
            return np.zeros(exps.shape[0], dtype=np.int64)
        pos = np.cumsum(exps[:, :-1] + 1, axis=1) - 1
        r = np.zeros(exps.shape[0], dtype=np.int64)
        for j in range(self.nvars - 1):
            r += self._binom[pos[:, j], j + 1]
        return r

    def rank(self, exps) -> int:
        return int(self.rank_rows(np.asarray(exps, dtype=np.int64)[None, :])[0])

    def unrank(self, index: int) -> np.ndarray:
        return self.exponents[index]

    def __repr__(self):
        return f"MonomialBasis(nvars={self.nvars}, degree={self.degree})"


def component(nvars: int, degree: int) -> MonomialBasis:
    key = (nvars, degree)
    b = _BASIS_CACHE.get(key)
    if b is None:
        b = _BASIS_CACHE[key] = MonomialBasis(nvars, degree)
    return b


def _binom_table(nmax: int, kmax: int) -> np.ndarray:
    key = ("binom", nmax, kmax)
    t = _TABLE_CACHE.get(key)
    if t is None:
        t = np.zeros((nmax + 1, kmax + 1), dtype=np.int64)
        for i in range(nmax + 1):
            for k in range(min(i, kmax) + 1):
                t[i, k] = math.comb(i, k)
        _TABLE_CACHE[key] = t
    return t


def var_step(nvars: int, degree: int, j: int) -> np.ndarray:
    """Rank in degree+1 of m * x_j for every degree-`degree` monomial m."""
    key = ("step", nvars, degree, j)
    t = _TABLE_CACHE.get(key)
    if t is None:
        src = component(nvars, degree)
        dst = component(nvars, degree + 1)
        e = src.exponents.copy()
        e[:, j] += 1
        t = _TABLE_CACHE[key] = dst.rank_rows(e)
    return t


def lead_split(nvars: int, degree: int) -> tuple[np.ndarray, np.ndarray]:
    """(lead variable, rank of m / x_lead) for every monomial of the degree."""
    key = ("split", nvars, degree)
    t = _TABLE_CACHE.get(key)
    if t is None:
        src = component(nvars, degree)
        rest = component(nvars, degree - 1)
        lead = np.argmax(src.exponents > 0, axis=1)
        e = src.exponents.copy()
        e[np.arange(src.count), lead] -= 1
        t = _TABLE_CACHE[key] = (lead, rest.rank_rows(e))
    return t


def product_table(nvars: int, d1: int, d2: int) -> np.ndarray:
    """(N_d1, N_d2) table of ranks of pairwise monomial products."""
    key = ("prod", nvars, d1, d2)
    t = _TABLE_CACHE.get(key)
    if t is not None:
        return t
    tr = _TABLE_CACHE.get(("prod", nvars, d2, d1))
    if tr is not None:
        t = np.ascontiguousarray(tr.T)
        _TABLE_CACHE[key] = t
        return t
    a = component(nvars, d1)
    b = component(nvars, d2)
    out = component(nvars, d1 + d2)
    if a.count * b.count > MAX_COMPONENT_CELLS:
        raise EngineError(
            f"product table {a.count}x{b.count} in {nvars} vars exceeds desk-scale cap"
        )
    t = np.zeros((a.count, b.count), dtype=np.int64)
    for i in range(a.count):
        t[i] = out.rank_rows(a.exponents[i][None, :] + b.exponents)
    _TABLE_CACHE[key] = t
    return t


# ---------------------------------------------------------------------------
# Exact echelon linear algebra

_CHUNK_ROWS = 256


class Echelon:
    """Incremental reduced row-echelon accumulator over F_p.

    The stored basis is always fully reduced.  Incoming chunks are reduced
    against it with mods deferred across pivots (int64 headroom bounds the
    growth by pivots * p^2), then self-reduced with an exact mod per pivot.
    """

    def __init__(self, ncols: int, p: int):
        self.ncols = ncols
        self.p = p
        self.rows = np.zeros((0, ncols), dtype=np.int64)
        self.pivots: list[int] = []
        self._stride = max(1, (2**62) // (p * p))

    @property
    def rank(self) -> int:
        return len(self.pivots)

    @property
    def is_full(self) -> bool:
        return self.rank >= self.ncols

    def insert(self, block: np.ndarray) -> None:
        block = np.atleast_2d(np.asarray(block, dtype=np.int64))
        if block.shape[0] and block.shape[1] != self.ncols:
            raise InputError("row width does not match the ambient component")
        for lo in range(0, block.shape[0], _CHUNK_ROWS):
            if self.is_full:
                return
            self._insert_chunk(block[lo : lo + _CHUNK_ROWS])

    def _insert_chunk(self, chunk: np.ndarray) -> None:
        p = self.p
        m = chunk % p
        dirty = 0
        for r, c in enumerate(self.pivots):
            fac = m[:, c] % p
            if fac.any():
                m -= np.outer(fac, self.rows[r])
                m[:, c] = 0
                dirty += 1
                if dirty >= self._stride:
                    m %= p
                    dirty = 0
        m %= p
        m = m[m.any(axis=1)]
        while m.shape[0] and not self.is_full:
            c = int(np.argmax(m.any(axis=0)))
            r = int(np.argmax(m[:, c] != 0))
            row = (m[r] * pow(int(m[r, c]), p - 2, p)) % p
            m = (m - np.outer(m[:, c], row)) % p
            if self.rows.shape[0]:
                rfac = self.rows[:, c]
                if rfac.any():
                    self.rows = (self.rows - np.outer(rfac, row)) % p
            self.rows = np.vstack([self.rows, row])
            self.pivots.append(c)
            m = m[m.any(axis=1)]

    def matrix(self) -> tuple[np.ndarray, tuple[int, ...]]:
        order = np.argsort(np.asarray(self.pivots, dtype=np.int64), kind="stable")
        rows = np.ascontiguousarray(self.rows[order]) if self.rank else self.rows
        return rows, tuple(int(self.pivots[i]) for i in order)

    def subspace(self, basis: MonomialBasis) -> "Subspace":
        rows, pivots = self.matrix()
        return Subspace(basis, self.p, rows=rows, pivots=pivots)


def rref(mat: np.ndarray, p: int) -> tuple[np.ndarray, tuple[int, ...]]:
    """Canonical reduced row echelon form of `mat` over F_p."""
    mat = np.atleast_2d(np.asarray(mat, dtype=np.int64))
    ech = Echelon(mat.shape[1], p)
    ech.insert(mat)
    return ech.matrix()


def nullspace(mat: np.ndarray, p: int) -> np.ndarray:
    """RREF basis of {x : mat @ x == 0} over F_p, rows = basis vectors."""
    mat = np.atleast_2d(np.asarray(mat, dtype=np.int64)) % p
    ncols = mat.shape[1]
    rows, pivots = rref(mat, p)
    free = [c for c in range(ncols) if c not in set(pivots)]
    out = np.zeros((len(free), ncols), dtype=np.int64)
    for i, c in enumerate(free):
        out[i, c] = 1
        for r, pc in enumerate(pivots):
            out[i, pc] = (-int(rows[r, c])) % p
    return out


class Subspace:
    """A subspace of one graded component, in canonical reduced echelon form.

    Either `rows`/`pivots` (dense) or `mono` (span of unit vectors, stored as
    a sorted array of monomial ranks) is set.
    """

    __slots__ = ("basis", "p", "rows", "pivots", "mono")

    def __init__(self, basis, p, rows=None, pivots=None, mono=None):
        self.basis = basis
        self.p = p
        self.rows = rows
        self.pivots = pivots
        self.mono = mono

    # -- constructors ---------------------------------------------------

    @staticmethod
    def zero(basis: MonomialBasis, p: int) -> "Subspace":
        return Subspace(basis, p, mono=np.zeros(0, dtype=np.int64))

    @staticmethod
    def full(basis: MonomialBasis, p: int) -> "Subspace":
        return Subspace(basis, p, mono=np.arange(basis.count, dtype=np.int64))

    @staticmethod
    def from_monomials(basis: MonomialBasis, p: int, ranks) -> "Subspace":
        idx = np.unique(np.asarray(ranks, dtype=np.int64))
        if idx.size and (idx[0] < 0 or idx[-1] >= basis.count):
            raise InputError("monomial rank out of range")
        return Subspace(basis, p, mono=idx)

    @staticmethod
    def span(basis: MonomialBasis, p: int, vectors) -> "Subspace":
        vectors = np.asarray(vectors, dtype=np.int64)
        if vectors.size == 0:
            return Subspace.zero(basis, p)
        ech = Echelon(basis.count, p)
        ech.insert(vectors)
        return ech.subspace(basis)

    # -- basic views ------------------------------------------------------

    @property
    def is_mono(self) -> bool:
        return self.mono is not None

    @property
    def dim(self) -> int:
        return int(self.mono.size) if self.is_mono else int(self.rows.shape[0])

    @property
    def is_full(self) -> bool:
        return self.dim == self.basis.count

    def dense_rows(self) -> np.ndarray:
        if not self.is_mono:
            return self.rows
        if self.mono.size * max(self.basis.count, 1) > MAX_COMPONENT_CELLS:
            raise EngineError("densifying a monomial subspace this large is off-scale")
        rows = np.zeros((self.mono.size, self.basis.count), dtype=np.int64)
        rows[np.arange(self.mono.size), self.mono] = 1
        return rows

    def dense_pivots(self) -> tuple[int, ...]:
        if self.is_mono:
            return tuple(int(i) for i in self.mono)
        return self.pivots

    def _check_compatible(self, other: "Subspace"):
        if self.basis.nvars != other.basis.nvars or self.basis.degree != other.basis.degree:
            raise InputError("subspaces live in different graded components")
        if self.p != other.p:
            raise InputError("subspaces live over different prime fields")

    # -- subspace algebra --------------------------------------------------

    def add(self, other: "Subspace") -> "Subspace":
        self._check_compatible(other)
        if self.is_mono and other.is_mono:
            return Subspace(self.basis, self.p, mono=np.union1d(self.mono, other.mono))
        ech = Echelon(self.basis.count, self.p)
        ech.insert(self.dense_rows())
        if not ech.is_full:
            ech.insert(other.dense_rows())
        return ech.subspace(self.basis)

    def contains_vector(self, vec) -> bool:
        vec = np.asarray(vec, dtype=np.int64) % self.p
        if self.is_mono:
            if self.is_full:
                return True
            other = np.ones(self.basis.count, dtype=bool)
            other[self.mono] = False
            return not vec[other].any()
        res = vec.copy()
        for r, c in enumerate(self.pivots):
            f = int(res[c])
            if f:
                res = (res - f * self.rows[r]) % self.p
        return not res.any()

    def contains_space(self, other: "Subspace") -> bool:
        self._check_compatible(other)
        if other.dim == 0:
            return True
        if self.is_mono and other.is_mono:
            return bool(np.isin(other.mono, self.mono).all())
        if self.is_mono:
            keep = np.ones(self.basis.count, dtype=bool)
            keep[self.mono] = False
            return not other.dense_rows()[:, keep].any()
        return all(self.contains_vector(v) for v in other.dense_rows())

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        self._check_compatible(other)
        if self.dim != other.dim:
            return False
        if self.is_mono and other.is_mono:
            return bool(np.array_equal(self.mono, other.mono))
        if self.dense_pivots() != other.dense_pivots():
            return False
        return bool(np.array_equal(self.dense_rows(), other.dense_rows()))

    __hash__ = None

    def intersect(self, other: "Subspace") -> "Subspace":
        self._check_compatible(other)
        if self.is_mono and other.is_mono:
            return Subspace(self.basis, self.p, mono=np.intersect1d(self.mono, other.mono))
        if self.is_mono or other.is_mono:
            mono, dense = (self, other) if self.is_mono else (other, self)
            if mono.is_full:
                return dense
            kill = np.setdiff1d(np.arange(self.basis.count, dtype=np.int64), mono.mono)
            coeff = nullspace(dense.dense_rows()[:, kill].T, self.p)
            return Subspace.span(self.basis, self.p, coeff @ dense.dense_rows() % self.p)
        n = self.basis.count
        a, b = self.rows, other.rows
        stacked = np.zeros((a.shape[0] + b.shape[0], 2 * n), dtype=np.int64)
        stacked[: a.shape[0], :n] = a
        stacked[: a.shape[0], n:] = a
        stacked[a.shape[0] :, :n] = b
        rows, _ = rref(stacked, self.p)
        tail = rows[~rows[:, :n].any(axis=1)][:, n:]
        return Subspace.span(self.basis, self.p, tail)

    def dim_intersection(self, other: "Subspace") -> int:
        return self.dim + other.dim - self.add(other).dim

    # -- maps between components --------------------------------------------

    def times_degree_one(self) -> "Subspace":
        """Span of x_j * v over all variables j and basis vectors v."""
        n = self.basis.nvars
        dst = component(n, self.basis.degree + 1)
        if self.is_mono:
            if self.mono.size == 0 or n == 0:
                return Subspace.zero(dst, self.p)
            parts = [var_step(n, self.basis.degree, j)[self.mono] for j in range(n)]
            return Subspace(dst, self.p, mono=np.unique(np.concatenate(parts)))
        ech = Echelon(dst.count, self.p)
        for j in range(n):
            if ech.is_full:
                break
            block = np.zeros((self.rows.shape[0], dst.count), dtype=np.int64)
            block[:, var_step(n, self.basis.degree, j)] = self.rows
            ech.insert(block)
        return ech.subspace(dst)

    def image_kill(self, proj: "VariableProjection") -> "Subspace":
        """Image of the subspace under the kill-variables algebra map."""
        tgt = component(len(proj.kept), self.basis.degree)
        keep_mask, remap = proj.tables(self.basis.degree)
        if self.is_mono:
            kept = self.mono[keep_mask[self.mono]]
            return Subspace(tgt, self.p, mono=np.unique(remap[kept]))
        src_idx = np.nonzero(keep_mask)[0]
        out = np.zeros((self.rows.shape[0], tgt.count), dtype=np.int64)
        out[:, remap[src_idx]] = self.rows[:, src_idx]
        return Subspace.span(tgt, self.p, out)

    def supported_slice(self, proj: "VariableProjection") -> "Subspace":
        """Vectors supported on the kept variables, reindexed to the small ring."""
        tgt = component(len(proj.kept), self.basis.degree)
        keep_mask, remap = proj.tables(self.basis.degree)
        if self.is_mono:
            kept = self.mono[keep_mask[self.mono]]
            return Subspace(tgt, self.p, mono=np.unique(remap[kept]))
        kill_idx = np.nonzero(~keep_mask)[0]
        coeff = nullspace(self.rows[:, kill_idx].T, self.p)
        vecs = coeff @ self.rows % self.p
        src_idx = np.nonzero(keep_mask)[0]
        out = np.zeros((vecs.shape[0], tgt.count), dtype=np.int64)
        out[:, remap[src_idx]] = vecs[:, src_idx]
        return Subspace.span(tgt, self.p, out)

    def embed_vars(self, proj: "VariableProjection") -> "Subspace":
        """View a subspace of the kept-variable subring inside the ambient ring."""
        src = self.basis
        if src.nvars != len(proj.kept):
            raise InputError("embedding variable count mismatch")
        tgt = component(proj.source_nvars, src.degree)
        emb = proj.embed_table(src.degree)
        if self.is_mono:
            return Subspace(tgt, self.p, mono=np.unique(emb[self.mono]))
        out = np.zeros((self.rows.shape[0], tgt.count), dtype=np.int64)
        out[:, emb] = self.rows
        return Subspace.span(tgt, self.p, out)


@dataclass(frozen=True)
class VariableProjection:
    """Kill every variable outside `kept`; the image ring has len(kept) vars."""

    source_nvars: int
    kept: tuple[int, ...]

    def __post_init__(self):
        kept = tuple(sorted(set(self.kept)))
        if kept != self.kept:
            object.__setattr__(self, "kept", kept)
        if any(j < 0 or j >= self.source_nvars for j in self.kept):
            raise InputError("projection block out of variable range")

    def tables(self, degree: int) -> tuple[np.ndarray, np.ndarray]:
        key = ("kill", self.source_nvars, self.kept, degree)
        t = _TABLE_CACHE.get(key)
        if t is None:
            src = component(self.source_nvars, degree)
            tgt = component(len(self.kept), degree)
            killed = [j for j in range(self.source_nvars) if j not in self.kept]
            if killed:
                keep_mask = ~src.exponents[:, killed].any(axis=1)
            else:
                keep_mask = np.ones(src.count, dtype=bool)
            remap = np.zeros(src.count, dtype=np.int64)
            sel = np.nonzero(keep_mask)[0]
            if self.kept and sel.size:
                remap[sel] = tgt.rank_rows(src.exponents[sel][:, list(self.kept)])
            t = _TABLE_CACHE[key] = (keep_mask, remap)
        return t

    def embed_table(self, degree: int) -> np.ndarray:
        key = ("embed", self.source_nvars, self.kept, degree)
        t = _TABLE_CACHE.get(key)
        if t is None:
            src = component(len(self.kept), degree)
            tgt = component(self.source_nvars, degree)
            full = np.zeros((src.count, self.source_nvars), dtype=np.int64)
            full[:, list(self.kept)] = src.exponents
            t = _TABLE_CACHE[key] = tgt.rank_rows(full)
        return t


def kill_variables(proj: VariableProjection, basis: MonomialBasis, vec) -> np.ndarray:
    """Apply the projection to one degree-d vector; returns the small-ring vector."""
    vec = np.asarray(vec, dtype=np.int64)
    tgt = component(len(proj.kept), basis.degree)
    keep_mask, remap = proj.tables(basis.degree)
    out = np.zeros(tgt.count, dtype=np.int64)
    src_idx = np.nonzero(keep_mask)[0]
    out[remap[src_idx]] = vec[src_idx]
    return out


def embed_vector(proj: VariableProjection, basis: MonomialBasis, vec) -> np.ndarray:
    """Include a small-ring vector into the ambient ring (section of kill)."""
    vec = np.asarray(vec, dtype=np.int64)
    tgt = component(proj.source_nvars, basis.degree)
    out = np.zeros(tgt.count, dtype=np.int64)
    out[proj.embed_table(basis.degree)] = vec
    return out


# ---------------------------------------------------------------------------
# Multiplication and substitution


def multiply(p: int, basis1: MonomialBasis, v1, basis2: MonomialBasis, v2) -> np.ndarray:
    """Exact product of two homogeneous polynomials, in degree d1+d2."""
    if basis1.nvars != basis2.nvars:
        raise InputError("operands live in different polynomial rings")
    v1 = np.asarray(v1, dtype=np.int64) % p
    v2 = np.asarray(v2, dtype=np.int64) % p
    out_basis = component(basis1.nvars, basis1.degree + basis2.degree)
    table = product_table(basis1.nvars, basis1.degree, basis2.degree)
    out = np.zeros(out_basis.count, dtype=np.int64)
    for a in np.nonzero(v1)[0]:
        out[table[a]] += int(v1[a]) * v2
        out %= p
    return out


def multiply_rows(p: int, basis1: MonomialBasis, rows1, basis2: MonomialBasis, rows2,
                  sink: Echelon) -> None:
    """Feed all pairwise products of two row families into an echelon sink."""
    table = product_table(basis1.nvars, basis1.degree, basis2.degree)
    rows2 = np.atleast_2d(np.asarray(rows2, dtype=np.int64)) % p
    cap = max(1, (2**62) // (p * p))
    for u in np.atleast_2d(np.asarray(rows1, dtype=np.int64)) % p:
        if sink.is_full:
            return
        block = np.zeros((rows2.shape[0], sink.ncols), dtype=np.int64)
        dirty = 0
        for a in np.nonzero(u)[0]:
            block[:, table[a]] += int(u[a]) * rows2
            dirty += 1
            if dirty >= cap:
                block %= p
                dirty = 0
        sink.insert(block % p)


def substitution_matrix(p: int, linear_images: np.ndarray, degree: int) -> np.ndarray:
    """Matrix of the algebra map x_i -> sum_j linear_images[j, i] x_j on degree d.

    Columns are indexed by source monomials; built degree by degree through
    multiply-by-linear-form steps keyed on each monomial's lead variable.
    """
    lin = np.asarray(linear_images, dtype=np.int64) % p
    n = lin.shape[0]
    if degree == 0:
        return np.ones((1, 1), dtype=np.int64)
    cap = max(1, (2**62) // (p * p))
    cur = lin.copy()
    for d in range(2, degree + 1):
        src = component(n, d)
        nxt = np.zeros((src.count, src.count), dtype=np.int64)
        lead, rest = lead_split(n, d)
        for i in range(n):
            cols = np.nonzero(lead == i)[0]
            if cols.size == 0:
                continue
            base = cur[:, rest[cols]]
            acc = np.zeros((src.count, cols.size), dtype=np.int64)
            dirty = 0
            for j in range(n):
                c = int(lin[j, i])
                if c:
                    acc[var_step(n, d - 1, j)] += c * base
                    dirty += 1
                    if dirty >= cap:
                        acc %= p
                        dirty = 0
            nxt[:, cols] = acc % p
        cur = nxt
    return cur


def act(rep, g: int, basis: MonomialBasis, vec) -> np.ndarray:
    """Image of a degree-d polynomial under one group element's action."""
    if basis.nvars != rep.dim:
        raise InputError("component variable count does not match the module")
    vec = np.asarray(vec, dtype=np.int64) % rep.field.p
    mat = substitution_matrix(rep.field.p, rep.matrices[g], basis.degree)
    return rep.field.matmul(mat, vec)
