"""Instance generation: parameter validation, the stabilizer construction,
the QRC construction with column redundancy, the hardened (concatenated,
sparse) construction, obfuscation, and the IQP1 text formats.

Unobfuscated layout of every stabilizer-type instance::

        [ F  D  0 ]   m1 rows  (H_s, rows with p.s = 1)
        [ A  B  C ]   m2 rows  (R_s, rows with p.s = 0)
          g  d  n-g-d columns
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .codes import (
    RETRY_BUDGET,
    InvalidParameter,
    _Echelon,
    ints_as_rows,
    qrc_generator,
    rows_as_ints,
    sample_affine,
    sample_doubly_even,
    sample_F,
    vec_to_int,
    int_to_vec,
)
from .f2linalg import (
    BitMatrix,
    BitVector,
    block_diag,
    hstack,
    inverse,
    kernel_basis,
    mul,
    rank,
    solve,
    vstack,
    random_invertible,
)
from .samples import ParseError
from .stabilizer import Correlation, correlation, secret_rows

DEFAULT_LAMBDA = 50


class ConstructionError(RuntimeError):
    pass


class TraceUnavailable(RuntimeError):
    pass


@dataclass
class SchemeMeta:
    n: int
    m: int
    g: int
    m1: int
    d: int
    scheme: str = "stabilizer"
    lam: int = DEFAULT_LAMBDA
    seed: Optional[int] = None
    q: Optional[int] = None
    m0: Optional[int] = None
    d0: Optional[int] = None
    t: Optional[int] = None

    @property
    def m2(self) -> int:
        return self.m - self.m1

    @property
    def r(self) -> int:
        return self.g + self.d

    def to_dict(self) -> dict:
        out = {k: v for k, v in asdict(self).items() if v is not None}
        out["lambda"] = out.pop("lam")
        return out


@dataclass
class ObfuscationTrace:
    perm: np.ndarray
    Q: BitMatrix
    H0: Optional[BitMatrix] = None
    s0: Optional[BitVector] = None


@dataclass
class Instance:
    H: BitMatrix
    s: BitVector
    meta: SchemeMeta
    trace: Optional[ObfuscationTrace] = field(default=None, repr=False)

    def correlation(self) -> Correlation:
        return correlation(self.H, self.s)


@dataclass(frozen=True)
class ConstraintCheck:
    name: str
    ok: bool
    kind: str  # "family", "security" (per pair), "regime" (global) or "radical"


@dataclass
class Layout:
    F: BitMatrix
    D: BitMatrix
    Z: BitMatrix
    A: BitMatrix
    B: BitMatrix
    C: BitMatrix


# ---------------------------------------------------------------------------
# parameters
# ---------------------------------------------------------------------------


def _constraints(n, m, g, m1, d, lam):
    r = g + d
    return [
        ConstraintCheck("g + d <= n", g + d <= n, "family"),
        ConstraintCheck("0 < m1 <= m", 0 < m1 <= m, "family"),
        ConstraintCheck("n - g - d <= m - m1", n - g - d <= m - m1, "family"),
        ConstraintCheck("g + 2d <= m1", g + 2 * d <= m1, "family"),
        ConstraintCheck("m1 = g mod 2", (m1 - g) % 2 == 0, "family"),
        ConstraintCheck("m1 <= n - 2*lambda + r", m1 <= n - 2 * lam + r, "security"),
        ConstraintCheck("m1 + n - r <= m", m1 + n - r <= m, "security"),
        ConstraintCheck("m <= 2(n - lambda)  [n - m/2 >= lambda]", m <= 2 * (n - lam), "regime"),
        ConstraintCheck("m2 >= n - g  [radical countermeasure]", m - m1 >= n - g, "radical"),
    ]


def check_params(meta: SchemeMeta) -> list[ConstraintCheck]:
    return _constraints(meta.n, meta.m, meta.g, meta.m1, meta.d, meta.lam)


def feasible_pairs(n: int, m: int, g: int, lam: int, *, radical: bool = False) -> list[tuple[int, int]]:
    """All (m1, d) meeting the family and per-pair security constraints.

    The global inequality m <= 2(n - lambda) does not depend on (m1, d) and
    is left to the caller.
    """
    kinds = {"family", "security"} | ({"radical"} if radical else set())
    out = []
    for m1 in range(1, m + 1):
        for d in range(0, (m1 - g) // 2 + 1):
            if g == 0 and (d == 0 or m1 % 4):
                continue
            if d and m1 < 4:
                continue
            if g == 0 and d == 0:
                continue
            checks = _constraints(n, m, g, m1, d, lam)
            if all(c.ok for c in checks if c.kind in kinds):
                out.append((m1, d))
    return out


def sample_params(
    n: int, m: int, g: int, lam: int, rng: np.random.Generator, *, radical: bool = False
) -> SchemeMeta:
    """Uniform feasible (m1, d), requiring the full security regime."""
    if m > 2 * (n - lam):
        raise InvalidParameter(f"infeasible: violates m <= 2(n - lambda) for n={n}, m={m}, lambda={lam}")
    return _draw_pair(n, m, g, lam, rng, radical=radical)


def _draw_pair(n, m, g, lam, rng, *, radical=False) -> SchemeMeta:
    pairs = feasible_pairs(n, m, g, lam, radical=radical)
    if not pairs:
        raise InvalidParameter(
            f"infeasible: no (m1, d) satisfies g + 2d <= m1, m1 = g mod 2, "
            f"m1 <= n - 2*lambda + r and m1 + n - r <= m for n={n}, m={m}, g={g}, lambda={lam}"
        )
    m1, d = pairs[int(rng.integers(len(pairs)))]
    return SchemeMeta(n=n, m=m, g=g, m1=m1, d=d, lam=lam)


# ---------------------------------------------------------------------------
# building blocks
# ---------------------------------------------------------------------------


def obfuscate(h: BitMatrix, s: BitVector, rng: np.random.Generator) -> tuple[BitMatrix, BitVector, ObfuscationTrace]:
    """H' = P H Q, s' = Q^-1 s with a random row permutation and invertible Q."""
    perm = rng.permutation(h.rows)
    q = random_invertible(h.cols, rng)
    h2 = mul(h.select_rows(perm), q)
    s2 = inverse(q) @ s
    return h2, s2, ObfuscationTrace(perm=perm, Q=q, H0=h, s0=s)


def deobfuscate(h: BitMatrix, trace: ObfuscationTrace) -> BitMatrix:
    undone = mul(h, inverse(trace.Q))
    inv = np.empty_like(trace.perm)
    inv[trace.perm] = np.arange(trace.perm.size)
    return undone.select_rows(inv)


def add_column_redundancy(
    h_s: BitMatrix, s: BitVector, n2: int, rng: np.random.Generator, *, q: Optional[BitMatrix] = None
) -> tuple[BitMatrix, BitVector]:
    """(H_s, 0) Q and Q^-1 (s; s') with a random tail s' and random Q."""
    if solve(h_s, BitVector.ones(h_s.rows)) is None or not all((h_s @ s).to_array()):
        raise InvalidParameter("need H_s s = 1")
    wide = hstack(h_s, BitMatrix(h_s.rows, n2))
    s_ext = s.concat(BitVector.random(n2, rng))
    if q is None:
        q = random_invertible(wide.cols, rng)
    return mul(wide, q), inverse(q) @ s_ext


def _complete_rows(
    h_s: BitMatrix, s: BitVector, m2: int, rng: np.random.Generator
) -> Optional[BitMatrix]:
    """R_s: n - rank(H_s) rank-completing rows orthogonal to s, then random ones.

    Returns None when rank completion runs out of attempts.
    """
    n = h_s.cols
    perp = [vec_to_int(k) for k in kernel_basis(BitMatrix.from_row_vectors([s], n)).columns()]
    ech = _Echelon(rows_as_ints(h_s))
    need = n - len(ech)
    if need > m2:
        raise InvalidParameter(f"need {need} completing rows but only m2={m2}")
    rows = []
    attempts = 0
    while len(rows) < need:
        if attempts >= 4 * need:
            return None
        attempts += 1
        v = _combo(perp, rng)
        if ech.add(v):
            rows.append(v)
    rows += [_combo(perp, rng) for _ in range(m2 - need)]
    return ints_as_rows(rows, n)


def _combo(basis: list[int], rng: np.random.Generator) -> int:
    acc = 0
    for b, c in zip(basis, rng.integers(0, 2, size=len(basis))):
        if c:
            acc ^= b
    return acc


def _uniform_secret(h_s: BitMatrix, rng: np.random.Generator) -> BitVector:
    part = solve(h_s, BitVector.ones(h_s.rows))
    if part is None:
        raise ConstructionError("all-ones not in column space of H_s")
    return sample_affine(part, kernel_basis(h_s), rng)


def _finish(h0, s0, meta, rng, keep_trace) -> Instance:
    h, s, trace = obfuscate(h0, s0, rng)
    if rank(h) != meta.n:
        raise ConstructionError("final H is not full rank")
    return Instance(h, s, meta, trace if keep_trace else None)


def _make_rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def stabilizer_construct(
    n: int,
    m: int,
    g: int,
    lam: int = DEFAULT_LAMBDA,
    rng=None,
    *,
    m1: Optional[int] = None,
    d: Optional[int] = None,
    enforce_radical: bool = False,
    keep_trace: bool = False,
    seed: Optional[int] = None,
) -> Instance:
    """Random member of the stabilizer family with parameters (n, m, g).

    ``m1``/``d`` fix the H_s shape instead of sampling it.  ``enforce_radical``
    postselects on rank(B, C) = n - g.  The global m <= 2(n - lambda) bound is
    not enforced here so that easy instances can be generated for attack sweeps.
    """
    rng = _make_rng(rng if rng is not None else seed)
    if m1 is None or d is None:
        meta = _draw_pair(n, m, g, lam, rng, radical=enforce_radical)
    else:
        meta = SchemeMeta(n=n, m=m, g=g, m1=m1, d=d, lam=lam)
        bad = [c.name for c in check_params(meta) if c.kind == "family" and not c.ok]
        if bad:
            raise InvalidParameter("violates " + ", ".join(bad))
    meta.seed = seed
    drawn = m1 is None or d is None
    for _ in range(RETRY_BUDGET):
        if meta.d:
            D = sample_doubly_even(meta.m1, meta.d, rng, start_with_ones=(g == 0))
        else:
            D = BitMatrix(meta.m1, 0)
        F = sample_F(meta.m1, g, D, rng)
        d_eff = D.cols
        r = g + d_eff
        if n - r > m - meta.m1:
            # extremal (m1, d) where fewer doubly-even columns exist than asked
            if drawn:
                meta = _draw_pair(n, m, g, lam, rng, radical=enforce_radical)
                meta.seed = seed
            continue
        h_s = hstack(F, D, BitMatrix(meta.m1, n - r))
        s = _uniform_secret(h_s, rng)
        r_s = _complete_rows(h_s, s, m - meta.m1, rng)
        if r_s is None:
            continue
        h0 = vstack(h_s, r_s)
        if enforce_radical and rank(r_s.select_cols(range(g, n))) != n - g:
            continue
        meta.d = d_eff
        return _finish(h0, s, meta, rng, keep_trace)
    raise ConstructionError(f"stabilizer construction failed after {RETRY_BUDGET} attempts")


def qrc_construct(
    q: int,
    n: int,
    m: int,
    lam: int = DEFAULT_LAMBDA,
    rng=None,
    *,
    keep_trace: bool = False,
    seed: Optional[int] = None,
) -> Instance:
    """QRC instance.  n = (q+3)/2 reproduces the original all-ones-adjoined
    generator with s = e_1; any other n >= (q+1)/2 starts from the full-rank
    cyclic generator and adds n - (q+1)/2 redundant columns."""
    rng = _make_rng(rng if rng is not None else seed)
    base = qrc_generator(q)
    k = (q + 1) // 2
    if n < k:
        raise InvalidParameter(f"n={n} below the code dimension {k}")
    if m < q + (n - k):
        raise InvalidParameter(f"m={m} below q + n - (q+1)/2 = {q + n - k}")
    if n == k + 1:
        h_s = base
        s = BitVector.unit(n, 0)
    else:
        full = base.select_cols(range(1, k + 1))
        s0 = solve(full, BitVector.ones(q))
        h_s, s = add_column_redundancy(full, s0, n - k, rng)
    meta = SchemeMeta(n=n, m=m, g=1, m1=q, d=(q - 1) // 2, scheme="qrc", lam=lam, seed=seed, q=q)
    for _ in range(RETRY_BUDGET):
        r_s = _complete_rows(h_s, s, m - q, rng)
        if r_s is not None:
            return _finish(vstack(h_s, r_s), s, meta, rng, keep_trace)
    raise ConstructionError("QRC rank completion failed")


def hardened_construct(
    n: int,
    m: int,
    g: int,
    m1: int,
    d: int,
    m0: int,
    d0: int,
    t: int = 1,
    rng=None,
    *,
    lam: int = 0,
    keep_trace: bool = False,
    seed: Optional[int] = None,
) -> Instance:
    """Instance whose D is a block-diagonal concatenation of small doubly-even
    codes and whose (A, B) block has t ones per row.

    K_in selects d distinct block columns (the sparsest full-rank choice).
    Postselects on rank(B, C) = n - g.
    """
    rng = _make_rng(rng if rng is not None else seed)
    if m1 % m0:
        raise InvalidParameter("m0 must divide m1")
    k = m1 // m0
    if d0 * k < d:
        raise InvalidParameter("need d0 * (m1/m0) >= d")
    meta = SchemeMeta(n=n, m=m, g=g, m1=m1, d=d, scheme="hardened", lam=lam, seed=seed, m0=m0, d0=d0, t=t)
    bad = [c.name for c in check_params(meta) if c.kind in ("family", "radical") and not c.ok]
    if bad:
        raise InvalidParameter("violates " + ", ".join(bad))
    if d == d0 * k and _block_holds_ones(m0, d0):
        # every block then contains its all-ones vector, so all-ones lies in
        # span(D), the F-part of s vanishes and (B, C) s = 0 for s != 0
        raise InvalidParameter(
            f"d = d0 * m1/m0 with maximal {m0}x{d0} blocks puts all-ones in span(D); "
            "(B, C) can then never have rank n - g"
        )
    m2 = m - m1
    r = g + d
    ones = BitVector.ones(m1)
    for _ in range(RETRY_BUDGET):
        blocks = [_exact_doubly_even(m0, d0, rng) for _ in range(k)]
        e_c = block_diag(*blocks)
        pick = np.sort(rng.choice(d0 * k, size=d, replace=False))
        D = e_c.select_cols(pick) if d else BitMatrix(m1, 0)
        if d and solve(D, ones) is not None:
            continue
        F = sample_F(m1, g, D, rng)
        h_s = hstack(F, D, BitMatrix(m1, n - r))
        s = _uniform_secret(h_s, rng)
        ab = np.zeros((m2, r), dtype=np.uint8)
        for i in range(m2):
            ab[i, rng.choice(r, size=t, replace=False)] = 1
        c_blk = rng.integers(0, 2, size=(m2, n - r), dtype=np.uint8)
        r_s = np.concatenate([ab, c_blk], axis=1)
        s_arr = s.to_array()
        resid = (r_s.astype(np.int64) @ s_arr) & 1
        if resid.any():
            hits = np.flatnonzero(s_arr[:r])
            if hits.size == 0:
                continue
            r_s[:, hits[0]] ^= resid.astype(np.uint8)
        r_s_m = BitMatrix.from_dense(r_s)
        if rank(r_s_m.select_cols(range(g, n))) != n - g:
            continue
        h0 = vstack(h_s, r_s_m)
        if rank(h0) != n:
            continue
        return _finish(h0, s, meta, rng, keep_trace)
    raise ConstructionError(f"hardened construction failed after {RETRY_BUDGET} attempts")


def _block_holds_ones(m0: int, d0: int) -> bool:
    """A doubly-even code of the largest possible dimension always contains
    all-ones (adding it keeps the code doubly even)."""
    if m0 % 4:
        return False  # all-ones has weight 2 mod 4 or odd weight
    return d0 >= (m0 // 2 if m0 % 8 == 0 else m0 // 2 - 1)


def _exact_doubly_even(m0: int, d0: int, rng) -> BitMatrix:
    for _ in range(RETRY_BUDGET):
        blk = sample_doubly_even(m0, d0, rng)
        if blk.cols == d0:
            return blk
    raise ConstructionError(f"could not sample a {m0}x{d0} doubly-even block")


def unobfuscated_layout(inst: Instance) -> Layout:
    if inst.trace is None or inst.trace.H0 is None:
        raise TraceUnavailable("instance was generated without keep_trace=True")
    if inst.meta.scheme == "qrc":
        raise TraceUnavailable("block layout is defined for stabilizer-type instances only")
    h = inst.trace.H0.to_dense()
    g, r, m1 = inst.meta.g, inst.meta.g + inst.meta.d, inst.meta.m1
    blk = lambda a: BitMatrix.from_dense(a) if a.shape[0] else BitMatrix(0, a.shape[1])
    return Layout(
        F=blk(h[:m1, :g]),
        D=blk(h[:m1, g:r]),
        Z=blk(h[:m1, r:]),
        A=blk(h[m1:, :g]),
        B=blk(h[m1:, g:r]),
        C=blk(h[m1:, r:]),
    )


def family_membership(inst: Instance) -> dict[str, bool]:
    """The three family conditions plus the row split, checked from (H, s)."""
    from .codes import DualClass, classify_self_dual_intersection
    from .f2linalg import gram

    mask = secret_rows(inst.H, inst.s)
    h_s = inst.H.select_rows(mask)
    prof = classify_self_dual_intersection(h_s)
    return {
        "doubly_even": prof.dual_class is DualClass.DOUBLY_EVEN,
        "gram_rank_is_g": rank(gram(h_s)) == inst.meta.g,
        "full_rank": rank(inst.H) == inst.meta.n,
        "m1_rows": int(mask.sum()) == inst.meta.m1,
    }


# ---------------------------------------------------------------------------
# text formats
# ---------------------------------------------------------------------------


def format_instance(h: BitMatrix) -> str:
    lines = [f"IQP1 n={h.cols} m={h.rows}"]
    lines += ["".join("1" if b else "0" for b in row) for row in h.to_dense()]
    return "\n".join(lines) + "\n"


def parse_instance(text: str) -> BitMatrix:
    lines = text.split("\n")
    if not text.endswith("\n"):
        raise ParseError("missing final newline (truncated file?)", len(lines))
    lines = lines[:-1]
    if not lines:
        raise ParseError("empty file", 1)
    head = lines[0].split()
    try:
        if head[0] != "IQP1" or not head[1].startswith("n=") or not head[2].startswith("m=") or len(head) != 3:
            raise ValueError
        n, m = int(head[1][2:]), int(head[2][2:])
    except (ValueError, IndexError):
        raise ParseError("expected header 'IQP1 n=<n> m=<m>'", 1) from None
    if len(lines) - 1 != m:
        raise ParseError(f"expected {m} rows, found {len(lines) - 1}", len(lines) + 1)
    rows = np.zeros((m, n), dtype=np.uint8)
    for i, line in enumerate(lines[1:]):
        if len(line) != n or any(ch not in "01" for ch in line):
            raise ParseError(f"expected {n} characters of '0'/'1'", i + 2)
        rows[i] = [1 if ch == "1" else 0 for ch in line]
    return BitMatrix.from_dense(rows) if m else BitMatrix(0, n)


def format_secret(s: BitVector, corr: Correlation) -> str:
    sign = "+1" if corr.sign >= 0 else "-1"
    return f"{s}\ng={corr.g} sign={sign}\n"


def parse_secret(text: str) -> tuple[BitVector, Correlation]:
    lines = text.split("\n")
    if len(lines) < 3 or lines[2] != "" or not text.endswith("\n"):
        raise ParseError("expected exactly two lines", min(len(lines), 3))
    try:
        s = BitVector.from_str(lines[0])
    except ValueError:
        raise ParseError("secret must be a bit string", 1) from None
    try:
        parts = dict(p.split("=", 1) for p in lines[1].split())
        g = int(parts["g"])
        sign = {"+1": 1, "-1": -1}[parts["sign"]]
    except (ValueError, KeyError):
        raise ParseError("expected 'g=<g> sign=<+1|-1>'", 2) from None
    return s, Correlation(sign, g)


def format_manifest(meta: SchemeMeta, extra: Optional[dict] = None) -> str:
    body = {"format": "IQP1", **meta.to_dict(), **(extra or {})}
    return json.dumps(body, indent=2, sort_keys=True) + "\n"
