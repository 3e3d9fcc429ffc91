"""Classical secret extraction and spoofing.

Extraction: the Linearity attack (and its Double Meyer and lazy variants),
the KM variant built on row sums, the Radical attack and Hamming's razor.
Spoofing: naive sampling, sampling from row combinations of H, and mixing
kernel cosets for a set of candidate secrets.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import log_ndtr

from . import _kernels
from .codes import NoSecret, weight_mod4
from .f2linalg import (
    BitMatrix,
    BitVector,
    gram,
    in_row_space,
    kernel_basis,
    kernel_vectors,
    rank,
    solve,
    vstack,
)
from .samples import SampleBatch
from .stabilizer import Correlation, correlation, secret_rows


class UnsupportedCandidates(ValueError):
    pass


STOP_MODES = ("first", "round", "budget")


@dataclass
class AttackConfig:
    check_budget: int = 1 << 15
    g_threshold: Optional[int] = None  # None: no rank gate, only the doubly-even test
    d_resample_budget: int = 256
    seed: Optional[int] = None
    codeword_samples: int = 32
    # "first": stop at the first passing vector; "round": finish that d's
    # kernel; "budget": keep collecting distinct candidates until the budget
    # or the d-resample limit runs out
    stop: str = "round"
    max_candidates: int = 64

    def __post_init__(self):
        if self.check_budget < 1 or self.d_resample_budget < 1:
            raise ValueError("budgets must be >= 1")
        if self.stop not in STOP_MODES:
            raise ValueError(f"stop must be one of {STOP_MODES}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


@dataclass
class RoundInfo:
    index: int
    dim: int
    checks: int
    found: bool


@dataclass
class AttackReport:
    method: str
    candidates: list[BitVector] = field(default_factory=list)
    checks_used: int = 0
    kernel_dims_seen: list[int] = field(default_factory=list)
    rounds: list[RoundInfo] = field(default_factory=list)
    success: bool = False
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return bool(self.candidates)

    def serialize(self) -> str:
        lines = [f"round={r.index} dim={r.dim} checks={r.checks} found={int(r.found)}" for r in self.rounds]
        lines += [f"SECRET {c}" for c in self.candidates] or ["FAIL"]
        return "\n".join(lines) + "\n"


def _random_nonzero(n: int, rng: np.random.Generator) -> BitVector:
    while True:
        v = BitVector.random(n, rng)
        if v.any():
            return v


def _packed_kernel(stack: np.ndarray, ncols: int) -> np.ndarray:
    """Kernel basis rows of a packed matrix (the input is not modified)."""
    k = _kernels.active
    work = np.ascontiguousarray(stack.copy())
    piv = k.rref(work, ncols)
    return k.kernel_rows(work, piv, ncols, work.shape[1])


def _g_max(h: BitMatrix, cfg: AttackConfig) -> int:
    return h.cols if cfg.g_threshold is None else cfg.g_threshold


def property_check(h: BitMatrix, cand: BitVector, g_threshold: Optional[int] = None) -> bool:
    """Gram rank of H_cand <= threshold and its self-dual intersection doubly even."""
    sel = (h @ cand).to_array()
    g_max = h.cols if g_threshold is None else g_threshold
    return bool(_kernels.active.check_candidate(h.data, sel, h.cols, g_max))


# ---------------------------------------------------------------------------
# Linearity attack and Double Meyer
# ---------------------------------------------------------------------------


def _gram_d(h: BitMatrix, d: BitVector) -> np.ndarray:
    sel = (h @ d).to_array()
    return _kernels.active.gram_selected(h.data, sel, h.cols)


def _coeff_vector(k_rows: np.ndarray, step: int, n: int) -> BitVector:
    code = step ^ (step >> 1)
    acc = np.zeros(k_rows.shape[1], dtype=np.uint64)
    j = 0
    while code:
        if code & 1:
            acc ^= k_rows[j]
        code >>= 1
        j += 1
    return BitVector(n, acc)


def _search_kernel(
    h: BitMatrix, k_rows: np.ndarray, g_max: int, budget: int, cap: int
) -> tuple[int, list[BitVector]]:
    k = _kernels.active
    if k_rows.shape[0] == 0 or budget <= 0:
        return 0, []
    hk = np.stack([k.matvec(h.data, row) for row in k_rows])
    used, steps = k.gray_search(h.data, np.ascontiguousarray(k_rows), hk, h.cols, g_max, budget, cap)
    return int(used), [_coeff_vector(k_rows, int(i), h.cols) for i in steps]


def _cap(cfg: AttackConfig) -> int:
    return 1 if cfg.stop == "first" else cfg.max_candidates


def _collect(rep: AttackReport, found: list[BitVector], cfg: AttackConfig) -> bool:
    """Merge new candidates; True when the attack should stop."""
    for c in found:
        if c not in rep.candidates and len(rep.candidates) < cfg.max_candidates:
            rep.candidates.append(c)
    return bool(rep.candidates) and cfg.stop != "budget"


def double_meyer(h: BitMatrix, k: int, cfg: AttackConfig = AttackConfig()) -> AttackReport:
    """Search the intersection of ker(G_d) over k independent probes d per round."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = cfg.rng()
    rep = AttackReport(method="linearity" if k == 1 else f"double-meyer-{k}")
    t0 = time.perf_counter()
    g_max = _g_max(h, cfg)
    for i in range(cfg.d_resample_budget):
        if rep.checks_used >= cfg.check_budget:
            break
        stack = np.concatenate([_gram_d(h, _random_nonzero(h.cols, rng)) for _ in range(k)])
        k_rows = _packed_kernel(stack, h.cols)
        used, found = _search_kernel(h, k_rows, g_max, cfg.check_budget - rep.checks_used, _cap(cfg))
        rep.checks_used += used
        rep.kernel_dims_seen.append(int(k_rows.shape[0]))
        rep.rounds.append(RoundInfo(i, int(k_rows.shape[0]), used, bool(found)))
        if _collect(rep, found, cfg):
            break
    rep.wall_time = time.perf_counter() - t0
    return rep


def extract_secret_linearity(h: BitMatrix, cfg: AttackConfig = AttackConfig()) -> AttackReport:
    return double_meyer(h, 1, cfg)


def lazy_linearity(h: BitMatrix, A: int, cfg: AttackConfig = AttackConfig()) -> AttackReport:
    """Linearity attack that only explores kernels of dimension <= A."""
    if A < 0:
        raise ValueError("A must be >= 0")
    rng = cfg.rng()
    rep = AttackReport(method="lazy")
    t0 = time.perf_counter()
    g_max = _g_max(h, cfg)
    accepted = 0
    for i in range(cfg.d_resample_budget):
        if rep.checks_used >= cfg.check_budget:
            break
        k_rows = _packed_kernel(_gram_d(h, _random_nonzero(h.cols, rng)), h.cols)
        dim = int(k_rows.shape[0])
        rep.kernel_dims_seen.append(dim)
        if dim > A:
            rep.rounds.append(RoundInfo(i, dim, 0, False))
            continue
        accepted += 1
        used, found = _search_kernel(h, k_rows, g_max, cfg.check_budget - rep.checks_used, _cap(cfg))
        rep.checks_used += used
        rep.rounds.append(RoundInfo(i, dim, used, bool(found)))
        if _collect(rep, found, cfg):
            break
    rep.extra["accepted_d"] = accepted
    rep.extra["sampled_d"] = len(rep.rounds)
    rep.wall_time = time.perf_counter() - t0
    return rep


def acceptance_probability(lambda1: float, m: int, A: float) -> float:
    """Gaussian-model probability that dim ker(G_d) <= A."""
    return float(np.exp(log_ndtr((A - lambda1) / (math.sqrt(m) / 2))))


def expected_iterations(g: int, lambda1: float, m: int, A: float) -> float:
    """E ~ 2^g / CDF_{lambda1, sqrt(m)/2}(A).  May overflow to inf; use
    ``log2_expected_iterations`` for large exponents."""
    return 2.0 ** log2_expected_iterations(g, lambda1, m, A)


def log2_expected_iterations(g: int, lambda1: float, m: int, A: float) -> float:
    return g - float(log_ndtr((A - lambda1) / (math.sqrt(m) / 2))) / math.log(2)


# ---------------------------------------------------------------------------
# KM variant
# ---------------------------------------------------------------------------


def _gray_walk(basis: Sequence[BitVector], budget: int, accept: Callable[[BitVector], bool]):
    if not basis:
        return 0, None
    s = BitVector(basis[0].len)
    total = (1 << len(basis)) - 1 if len(basis) < 62 else 1 << 62
    limit = min(total, budget)
    for i in range(1, limit + 1):
        s = s ^ basis[(i & -i).bit_length() - 1]
        if accept(s):
            return i, s.copy()
    return limit, None


def qrc_property(h: BitMatrix, cand: BitVector, samples: int, rng: np.random.Generator) -> bool:
    """Random codewords of the code spanned by H_cand have weight 0 or 3 mod 4."""
    mask = secret_rows(h, cand)
    if not mask.any():
        return False
    h_s = h.select_rows(mask)
    for _ in range(samples):
        w = weight_mod4(h_s @ BitVector.random(h.cols, rng))
        if w not in (0, 3):
            return False
    return True


def km_extract(h: BitMatrix, l: int, cfg: AttackConfig = AttackConfig()) -> AttackReport:
    """Row-sum attack: M has rows sum_{p.d = p.e_j = 1} p, search ker(M)."""
    if l < 0:
        raise ValueError("l must be >= 0")
    rng = cfg.rng()
    rep = AttackReport(method="km")
    t0 = time.perf_counter()
    dense = h.to_dense().astype(np.int64)
    for i in range(cfg.d_resample_budget):
        if rep.checks_used >= cfg.check_budget:
            break
        d = _random_nonzero(h.cols, rng)
        hd = (h @ d).to_array().astype(bool)
        rows = []
        for _ in range(l):
            e = BitVector.random(h.cols, rng)
            pick = hd & (h @ e).to_array().astype(bool)
            rows.append((dense[pick].sum(axis=0) & 1).astype(np.uint8))
        g_d = gram(h.select_rows(hd))
        if rows:
            M = BitMatrix.from_dense(np.array(rows))
            for r in range(M.rows):
                assert in_row_space(g_d, M.row(r)), "row sum outside the row space of G_d"
            basis = kernel_vectors(M)
        else:
            basis = [BitVector.unit(h.cols, j) for j in range(h.cols)]
        used, cand = _gray_walk(
            basis,
            cfg.check_budget - rep.checks_used,
            lambda s: qrc_property(h, s, cfg.codeword_samples, rng),
        )
        rep.checks_used += used
        rep.kernel_dims_seen.append(len(basis))
        rep.rounds.append(RoundInfo(i, len(basis), used, cand is not None))
        if cand is not None:
            rep.candidates.append(cand)
            break
    rep.wall_time = time.perf_counter() - t0
    return rep


# ---------------------------------------------------------------------------
# structural attacks
# ---------------------------------------------------------------------------


def _indicator(m: int, support: set[int]) -> BitVector:
    bits = np.zeros(m, dtype=np.uint8)
    if support:
        bits[list(support)] = 1
    return BitVector.from_bits(bits)


def radical_attack(h: BitMatrix, g_threshold: Optional[int] = None) -> AttackReport:
    """Union of supports of doubly-even H v, v in ker(H^T H); solve H s = 1_S.

    The solution counts as found only if it passes the property check.
    """
    rep = AttackReport(method="radical")
    t0 = time.perf_counter()
    K = kernel_basis(gram(h))
    rep.kernel_dims_seen.append(K.cols)
    support: set[int] = set()
    kept = 0
    for v in K.columns():
        hv = h @ v
        if hv.any() and weight_mod4(hv) == 0:
            kept += 1
            support.update(int(i) for i in hv.support())
    rep.checks_used = K.cols
    rep.extra["kept"] = kept
    rep.extra["support"] = len(support)
    cand = solve(h, _indicator(h.rows, support)) if support else None
    found = cand is not None and cand.any() and property_check(h, cand, g_threshold)
    rep.extra["solved"] = cand is not None
    rep.rounds.append(RoundInfo(0, K.cols, K.cols, found))
    if found:
        rep.candidates.append(cand)
    rep.wall_time = time.perf_counter() - t0
    return rep


RAZOR_SWEEP = tuple(round(0.05 * k, 2) for k in range(1, 11))


def _razor_support(h: BitMatrix, p: float, rounds: int, rng: np.random.Generator) -> tuple[set[int], list[int]]:
    m = h.rows
    drop = int(math.floor(p * m))
    support: set[int] = set()
    dims = []
    for _ in range(rounds):
        keep = np.sort(rng.permutation(m)[: m - drop])
        K = kernel_basis(h.select_rows(keep))
        dims.append(K.cols)
        for v in K.columns():
            support.update(int(i) for i in (h @ v).support())
    return support, dims


def hammings_razor(
    h: BitMatrix,
    p: Optional[float] = None,
    rounds: int = 32,
    rng=None,
    *,
    g_threshold: Optional[int] = None,
) -> AttackReport:
    """Collect supports of H v over kernels of row-deleted H and solve H s = 1 off S.

    With ``p`` unset, sweeps p over 0.05..0.50 and stops at the first p whose
    solution passes the property check.
    """
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    ps = RAZOR_SWEEP if p is None else (p,)
    for q in ps:
        if not 0 < q < 1:
            raise ValueError("p must lie in (0, 1)")
    rep = AttackReport(method="hamming")
    t0 = time.perf_counter()
    for i, q in enumerate(ps):
        support, dims = _razor_support(h, q, rounds, rng)
        rep.kernel_dims_seen.extend(dims)
        complement = set(range(h.rows)) - support
        cand = solve(h, _indicator(h.rows, complement))
        ok = cand is not None and cand.any() and property_check(h, cand, g_threshold)
        rep.rounds.append(RoundInfo(i, max(dims, default=0), rounds, ok))
        if ok:
            rep.candidates.append(cand)
            rep.extra["p"] = q
            break
    rep.checks_used = len(rep.rounds)
    rep.wall_time = time.perf_counter() - t0
    return rep


@dataclass
class RazorThreshold:
    p: float
    frac_first: float  # fraction of rounds where H'_1 v1 = 0 has a nonzero solution
    frac_second: float  # same for H'_2 v2 = 0


def razor_threshold_sweep(
    h0: BitMatrix, r: int, ps: Sequence[float] = RAZOR_SWEEP, rounds: int = 32, rng=None
) -> list[RazorThreshold]:
    """White-box scan over p of the two decoupled systems on the unobfuscated
    matrix: H'_1 (first r = g + d columns) and H'_2 (the rest)."""
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    h1 = h0.select_cols(range(r))
    h2 = h0.select_cols(range(r, h0.cols))
    out = []
    for p in ps:
        drop = int(math.floor(p * h0.rows))
        a = b = 0
        for _ in range(rounds):
            keep = np.sort(rng.permutation(h0.rows)[: h0.rows - drop])
            a += rank(h1.select_rows(keep)) < h1.cols
            b += rank(h2.select_rows(keep)) < h2.cols
        out.append(RazorThreshold(p, a / rounds, b / rounds))
    return out


# ---------------------------------------------------------------------------
# classical sampling
# ---------------------------------------------------------------------------


def bias(corr: float) -> float:
    if abs(corr) > 1 + 1e-12:
        raise ValueError("|corr| must be <= 1")
    return (corr + 1) / 2


def naive_sample(s_prime: BitVector, corr: float, T: int, rng: np.random.Generator) -> SampleBatch:
    """Uniform x with x.s' = 0 w.p. (1 + corr)/2, else uniform with x.s' = 1."""
    beta = bias(corr)
    n = s_prime.len
    if not s_prime.any():
        raise ValueError("s' must be nonzero")
    x = rng.integers(0, 2, size=(T, n), dtype=np.uint8)
    sp = s_prime.to_array()
    want = (rng.random(T) >= beta).astype(np.uint8)
    have = ((x.astype(np.int64) @ sp) & 1).astype(np.uint8)
    j0 = int(np.flatnonzero(sp)[0])
    x[:, j0] ^= have ^ want
    return SampleBatch(_dense_batch(x, n), prover="naive")


def _dense_batch(x: np.ndarray, n: int) -> BitMatrix:
    return BitMatrix.from_dense(x) if x.shape[0] else BitMatrix(0, n)


def _span_samples(rows: np.ndarray, count: int, rng, *, odd: bool = False) -> np.ndarray:
    """``count`` uniform combinations of the given rows (odd-size subsets if asked)."""
    k, n = rows.shape
    if count == 0:
        return np.zeros((0, n), dtype=np.uint8)
    if k == 0:
        if odd:
            raise ValueError("no rows to sum")
        return np.zeros((count, n), dtype=np.uint8)
    c = rng.integers(0, 2, size=(count, k), dtype=np.uint8)
    if odd:
        c[:, 0] ^= 1 ^ (c.sum(axis=1) & 1).astype(np.uint8)
    return ((c.astype(np.int64) @ rows.astype(np.int64)) & 1).astype(np.uint8)


def sample_by_rows(
    h: BitMatrix, s_prime: BitVector, corr: float, T: int, rng: np.random.Generator
) -> SampleBatch:
    """x from span(R_{s'}) w.p. (1 + corr)/2, else an odd-size sum of H_{s'} rows."""
    beta = bias(corr)
    mask = secret_rows(h, s_prime)
    dense = h.to_dense()
    zero = rng.random(T) < beta
    x = np.zeros((T, h.cols), dtype=np.uint8)
    x[zero] = _span_samples(dense[~mask], int(zero.sum()), rng)
    x[~zero] = _span_samples(dense[mask], int((~zero).sum()), rng, odd=True)
    return SampleBatch(_dense_batch(x, h.cols), prover="rows")


def multi_secret_sample(
    candidates: Sequence[BitVector], corrs: Sequence[float], T: int, rng: np.random.Generator
) -> SampleBatch:
    """Samples whose bias along every candidate matches its own correlation.

    Candidates must be linearly independent.  Equal correlations use a single
    coset y' with S y' = 1; otherwise candidates are sorted by decreasing bias
    and cosets y_j with S y_j = (0, .., 0, 1, .., 1) (j trailing ones) are
    mixed with weights beta_t, beta_{t-1} - beta_t, ..., 1 - beta_1.
    """
    t = len(candidates)
    if t == 0 or t != len(corrs):
        raise ValueError("need one correlation per candidate")
    n = candidates[0].len
    S = BitMatrix.from_row_vectors(list(candidates), n)
    if rank(S) < t:
        raise UnsupportedCandidates("candidates are linearly dependent")
    betas = np.array([bias(c) for c in corrs])
    order = np.argsort(-betas, kind="stable")
    S = S.select_rows(order)
    betas = betas[order]
    K = kernel_basis(S).to_dense().T  # rows span ker(S)
    if np.allclose(betas, betas[0]):
        targets = [np.zeros(t, np.uint8), np.ones(t, np.uint8)]
        weights = [betas[0], 1 - betas[0]]
    else:
        targets, weights = [], []
        for j in range(t + 1):
            b = np.zeros(t, np.uint8)
            b[t - j :] = 1
            targets.append(b)
            if j == 0:
                weights.append(betas[t - 1])
            elif j < t:
                weights.append(betas[t - j - 1] - betas[t - j])
            else:
                weights.append(1 - betas[0])
    shifts = []
    for b in targets:
        y = solve(S, BitVector.from_bits(b))
        if y is None:  # pragma: no cover - excluded by the rank test
            raise UnsupportedCandidates("target outside the column space")
        shifts.append(y.to_array())
    w = np.clip(np.array(weights, dtype=float), 0, None)
    comp = rng.choice(len(shifts), size=T, p=w / w.sum())
    x = _span_samples(K, T, rng) ^ np.array(shifts, dtype=np.uint8)[comp]
    return SampleBatch(_dense_batch(x, n), prover="multi")


# ---------------------------------------------------------------------------
# diagnostics and validation
# ---------------------------------------------------------------------------


@dataclass
class GoodDStats:
    trials: int
    hits: int
    identity_holds: bool

    @property
    def frequency(self) -> float:
        return self.hits / self.trials


def good_d_probability_check(h: BitMatrix, s: BitVector, trials: int, rng: np.random.Generator) -> GoodDStats:
    """Frequency of G_s d = 0 over random d, asserting G_s d = G_d s each time."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    g_s = gram(h.select_rows(secret_rows(h, s)))
    hits = 0
    for _ in range(trials):
        d = BitVector.random(h.cols, rng)
        lhs = g_s @ d
        rhs = gram(h.select_rows(secret_rows(h, d))) @ s if d.any() else BitVector(h.cols)
        if lhs != rhs:
            raise AssertionError("G_s d != G_d s")
        hits += not lhs.any()
    return GoodDStats(trials, hits, True)


def kernel_dimension(h: BitMatrix, d: BitVector) -> int:
    return h.cols - rank(gram(h.select_rows(secret_rows(h, d))))


def candidate_correlation(h: BitMatrix, cand: BitVector) -> Optional[Correlation]:
    try:
        c = correlation(h, cand)
    except NoSecret:
        return None
    return None if c.zero else c


def spoof(
    h: BitMatrix, candidates: Sequence[BitVector], T: int, rng: np.random.Generator
) -> Optional[SampleBatch]:
    """Classical samples matching every candidate's own correlation.

    Candidates with zero correlation are dropped and the rest reduced to a
    linearly independent subset in discovery order.  One survivor uses
    ``sample_by_rows``; several use ``multi_secret_sample``.
    """
    from .codes import _Echelon, vec_to_int

    ech = _Echelon()
    kept, corrs = [], []
    for c in candidates:
        corr = candidate_correlation(h, c)
        if corr is not None and ech.add(vec_to_int(c)):
            kept.append(c)
            corrs.append(corr.value)
    if not kept:
        return None
    if len(kept) == 1:
        return sample_by_rows(h, kept[0], corrs[0], T, rng)
    return multi_secret_sample(kept, corrs, T, rng)


def validate_candidates(
    h: BitMatrix,
    s_true: BitVector,
    corr_true: Correlation,
    candidates: Sequence[BitVector],
    rng: np.random.Generator,
    T: int = 4000,
) -> bool:
    """Spoof from the candidate set and test against the real secret at
    tolerance 3/sqrt(T)."""
    batch = spoof(h, candidates, T, rng)
    if batch is None:
        return False
    est = float(np.mean(1 - 2 * batch.parities(s_true).astype(np.int64)))
    return abs(est - corr_true.value) <= 3 / math.sqrt(T)
