"""Command-line interface: ``iqpstab <verb> ...``.

Exit codes
    0  success / ACCEPT / secret found
    1  REJECT, or attack returned FAIL
    2  usage error or malformed input file (message names the line)
    3  resource limit (simulator qubit cap)
    4  infeasible or invalid parameters
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from . import attacks, protocol, scheme
from .codes import InvalidParameter
from .f2linalg import BitMatrix, BitVector, gram, kernel_basis, rank
from .samples import ParseError, SampleBatch, read_samples, write_samples
from .simulator import QUBIT_CAP, THETA, ResourceError, compile_circuit, sample_outcomes
from .stabilizer import Correlation, correlation, secret_rows

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_RESOURCE, EXIT_PARAMS = 0, 1, 2, 3, 4

METHODS = ("linearity", "km", "radical", "hamming", "lazy", "double-meyer")
FIGURES = ("fig2a", "fig2b", "fig3a", "fig3b", "kernel", "good-d")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------


def _read_text(path) -> str:
    try:
        with open(path, "r", newline="") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}", EXIT_USAGE) from None


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def load_public(path) -> BitMatrix:
    try:
        return scheme.parse_instance(_read_text(path))
    except ParseError as exc:
        raise CliError(f"{path}: {exc}", EXIT_USAGE) from None


def load_private(path, n: int) -> tuple[BitVector, Correlation]:
    try:
        s, corr = scheme.parse_secret(_read_text(path))
    except ParseError as exc:
        raise CliError(f"{path}: {exc}", EXIT_USAGE) from None
    if s.len != n:
        raise CliError(f"{path}: line 1: secret has {s.len} bits, instance has {n} columns", EXIT_USAGE)
    return s, corr


def load_samples(path, n: int) -> SampleBatch:
    try:
        return read_samples(path, n)
    except ParseError as exc:
        raise CliError(f"{path}: {exc}", EXIT_USAGE) from None
    except OSError as exc:
        raise CliError(f"{path}: {exc.strerror}", EXIT_USAGE) from None


def _seed(value: Optional[int]) -> int:
    return int(np.random.SeedSequence().entropy % (1 << 63)) if value is None else value


def _workers(flag: Optional[int]) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("IQP_THREADS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------------------
# generate / correlation / simulate / verify / compile
# ---------------------------------------------------------------------------


def _build(args, seed: int) -> scheme.Instance:
    rng = np.random.default_rng(seed)
    if args.scheme == "qrc":
        if args.q is None:
            raise CliError("--scheme qrc needs -q", EXIT_USAGE)
        n = args.n if args.n is not None else (args.q + 3) // 2
        m = args.m if args.m is not None else 2 * args.q
        return scheme.qrc_construct(args.q, n, m, args.lam, rng, seed=seed)
    if args.n is None or args.m is None:
        raise CliError("-n and -m are required", EXIT_USAGE)
    if args.scheme == "hardened":
        need = {"--m1": args.m1, "--d": args.d, "--m0": args.m0, "--d0": args.d0}
        missing = [k for k, v in need.items() if v is None]
        if missing:
            raise CliError("--scheme hardened needs " + " ".join(missing), EXIT_USAGE)
        return scheme.hardened_construct(
            args.n, args.m, args.g, args.m1, args.d, args.m0, args.d0, args.t, rng, lam=args.lam, seed=seed
        )
    if not args.insecure and args.m > 2 * (args.n - args.lam):
        raise InvalidParameter(
            f"violates m <= 2(n - lambda): m={args.m}, n={args.n}, lambda={args.lam} (use --insecure to override)"
        )
    return scheme.stabilizer_construct(
        args.n, args.m, args.g, args.lam, rng, m1=args.m1, d=args.d, enforce_radical=args.radical, seed=seed
    )


def cmd_generate(args) -> int:
    seed = _seed(args.seed)
    inst = _build(args, seed)
    for c in scheme.check_params(inst.meta):
        if c.kind in ("security", "regime") and not c.ok:
            print(f"warning: security inequality fails: {c.name}", file=sys.stderr)
    corr = inst.correlation()
    prefix = Path(args.out)
    files = {
        "public": str(prefix.with_suffix(".iqp")),
        "private": str(prefix.with_suffix(".secret")),
        "manifest": str(prefix.with_suffix(".json")),
    }
    _write_text(files["public"], scheme.format_instance(inst.H))
    _write_text(files["private"], scheme.format_secret(inst.s, corr))
    _write_text(
        files["manifest"],
        scheme.format_manifest(inst.meta, {"files": {k: Path(v).name for k, v in files.items()}}),
    )
    print(f"wrote {files['public']} {files['private']} {files['manifest']}")
    return EXIT_OK


def cmd_correlation(args) -> int:
    h = load_public(args.public)
    s, _ = load_private(args.private, h.cols)
    c = correlation(h, s)
    print(f"<Z_s> = {c} = {c.value:.12f}  bias={protocol.bias_of(c.value):.3f}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    h = load_public(args.public)
    if h.cols > args.cap:
        raise CliError(f"{h.cols} qubits exceeds the simulator cap of {args.cap}", EXIT_RESOURCE)
    rng = np.random.default_rng(_seed(args.seed))
    batch = sample_outcomes(h, THETA, args.T, rng, cap=args.cap)
    write_samples(batch, args.out)
    print(f"wrote {batch.T} samples to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    h = load_public(args.public)
    s, corr = load_private(args.private, h.cols)
    batch = load_samples(args.samples, h.cols)
    if args.T is not None:
        if args.T > batch.T:
            raise CliError(f"asked for T={args.T} but file has {batch.T} samples", EXIT_USAGE)
        batch = SampleBatch(batch.samples.select_rows(np.arange(args.T)), prover=batch.prover)
    v = protocol.verify(batch, s, corr, args.tol)
    print(v)
    return EXIT_OK if v.accept else EXIT_FAIL


def cmd_compile(args) -> int:
    h = load_public(args.public)
    try:
        circ = compile_circuit(h)
    except InvalidParameter as exc:
        raise CliError(str(exc), EXIT_PARAMS) from None
    text = circ.dump()
    if args.out:
        _write_text(args.out, text)
        print(f"wrote {circ.rounds} rounds, {circ.cnot_count()} CNOTs to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# attack
# ---------------------------------------------------------------------------


def run_attack(h: BitMatrix, args) -> attacks.AttackReport:
    cfg = attacks.AttackConfig(
        check_budget=args.budget,
        g_threshold=args.g_threshold,
        d_resample_budget=args.rounds_d,
        seed=args.seed,
        stop=args.stop,
    )
    if args.method == "linearity":
        return attacks.extract_secret_linearity(h, cfg)
    if args.method == "km":
        return attacks.km_extract(h, args.l, cfg)
    if args.method == "radical":
        return attacks.radical_attack(h, args.g_threshold)
    if args.method == "hamming":
        return attacks.hammings_razor(h, args.p, args.razor_rounds, args.seed, g_threshold=args.g_threshold)
    if args.method == "lazy":
        return attacks.lazy_linearity(h, args.A, cfg)
    return attacks.double_meyer(h, args.k, cfg)


def cmd_attack(args) -> int:
    h = load_public(args.public)
    rep = run_attack(h, args)
    text = rep.serialize()
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    if not rep.found:
        return EXIT_FAIL
    if args.samples_out:
        rng = np.random.default_rng(_seed(args.seed))
        batch = attacks.spoof(h, rep.candidates, args.T, rng)
        if batch is None:
            print("candidates carry no correlation; no samples written", file=sys.stderr)
            return EXIT_FAIL
        tol = protocol.default_tolerance(batch.T)
        for c in rep.candidates:
            own = attacks.candidate_correlation(h, c)
            if own is not None and not protocol.verify(batch, c, own, tol).accept:
                print(f"self-check failed on candidate {c}", file=sys.stderr)
                return EXIT_FAIL
        write_samples(batch, args.samples_out)
        print(f"wrote {batch.T} spoofed samples to {args.samples_out}", file=sys.stderr)
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench tables
# ---------------------------------------------------------------------------


def _kernel_dim_point(job) -> int:
    n, m, g, lam, seed = job
    rng = np.random.default_rng(seed)
    inst = scheme.stabilizer_construct(n, m, g, lam, rng)
    return attacks.kernel_dimension(inst.H, attacks._random_nonzero(n, rng))


def _qrc_kernel_dim_point(job) -> int:
    q, n, m, seed = job
    rng = np.random.default_rng(seed)
    inst = scheme.qrc_construct(q, n, m, 0, rng)
    return attacks.kernel_dimension(inst.H, attacks._random_nonzero(n, rng))


def _stab_attack_point(job) -> int:
    n, m, g, lam, budget, seed = job
    rng = np.random.default_rng(seed)
    inst = scheme.stabilizer_construct(n, m, g, lam, rng)
    cfg = attacks.AttackConfig(check_budget=budget, g_threshold=g, seed=seed, stop="budget")
    rep = attacks.extract_secret_linearity(inst.H, cfg)
    return int(recovered(inst, rep.candidates))


def _qrc_attack_point(job) -> int:
    q, n, m, budget, seed = job
    rng = np.random.default_rng(seed)
    inst = scheme.qrc_construct(q, n, m, 0, rng)
    cfg = attacks.AttackConfig(check_budget=budget, g_threshold=1, seed=seed, stop="budget")
    rep = attacks.extract_secret_linearity(inst.H, cfg)
    return int(recovered(inst, rep.candidates))


def _good_d_point(job) -> float:
    n, m, g, lam, trials, seed = job
    rng = np.random.default_rng(seed)
    inst = scheme.stabilizer_construct(n, m, g, lam, rng)
    return attacks.good_d_probability_check(inst.H, inst.s, trials, rng).frequency


def recovered(inst: scheme.Instance, candidates: Sequence[BitVector]) -> bool:
    """True when some candidate induces the same row split as the real secret."""
    target = inst.H @ inst.s
    return any((inst.H @ c) == target for c in candidates)


def _map(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=max(1, len(jobs) // (4 * workers))))


def _parse_range(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if ":" in part:
            bits = [int(x) for x in part.split(":")]
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(lo, hi + 1, step))
        elif part:
            out.append(int(part))
    return out


def bench_table(fig: str, args) -> list[str]:
    workers = _workers(args.workers)
    seeds = range(args.base_seed, args.base_seed + args.seeds)
    gs = _parse_range(args.gs)
    rows: list[str] = []
    if fig in ("fig2a", "kernel"):
        rows.append("g\tn\tm\tmean_dim\tp10\tp90\tbound")
        for g in gs:
            for n in _parse_range(args.ns):
                dims = _map(_kernel_dim_point, [(n, args.m, g, args.lam, s) for s in seeds], workers)
                p10, p90 = np.percentile(dims, [10, 90])
                rows.append(f"{g}\t{n}\t{args.m}\t{np.mean(dims):.3f}\t{p10:.1f}\t{p90:.1f}\t{n - args.m / 2:g}")
    elif fig == "fig2b":
        rows.append("g\tn\tm\tsuccess_rate\tcrossover")
        for g in gs:
            for n in _parse_range(args.ns):
                hits = _map(_stab_attack_point, [(n, args.m, g, args.lam, args.budget, s) for s in seeds], workers)
                rows.append(f"{g}\t{n}\t{args.m}\t{np.mean(hits):.3f}\t{args.m / 2 + args.lam:g}")
    elif fig == "fig3a":
        rows.append("q\tn\tm\tmean_dim\tp10\tp90\tbound")
        for q in _parse_range(args.qs):
            r = (q + 1) // 2
            n, m = r + q, 2 * q
            dims = _map(_qrc_kernel_dim_point, [(q, n, m, s) for s in seeds], workers)
            p10, p90 = np.percentile(dims, [10, 90])
            rows.append(f"{q}\t{n}\t{m}\t{np.mean(dims):.3f}\t{p10:.1f}\t{p90:.1f}\t{n - m / 2:g}")
    elif fig == "fig3b":
        rows.append("q\tn\tm\tsuccess_rate\tq_plus_log2_budget")
        for q in _parse_range(args.qs):
            r = (q + 1) // 2
            m = 2 * q
            log_b = math.log2(args.budget)
            ns = _parse_range(args.ns) if args.ns_given else range(r, r + q + 1, max(1, q // 8))
            for n in ns:
                hits = _map(_qrc_attack_point, [(q, n, m, args.budget, s) for s in seeds], workers)
                rows.append(f"{q}\t{n}\t{m}\t{np.mean(hits):.3f}\t{q + log_b:g}")
    elif fig == "good-d":
        rows.append("g\tn\tm\tfrequency\texpected")
        for g in gs:
            n = _parse_range(args.ns)[0]
            freqs = _map(_good_d_point, [(n, args.m, g, args.lam, args.trials, s) for s in seeds], workers)
            rows.append(f"{g}\t{n}\t{args.m}\t{np.mean(freqs):.4f}\t{2.0 ** -g:.4f}")
    return rows


def cmd_bench(args) -> int:
    args.ns_given = args.ns is not None
    if args.ns is None:
        args.ns = "35:55:5"
    for line in bench_table(args.figure, args):
        print(line)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="iqpstab", description="IQP stabilizer-scheme challenge toolkit")
    sub = p.add_subparsers(dest="verb", required=True)

    g = sub.add_parser("generate", help="write a challenge bundle (.iqp, .secret, .json)")
    g.add_argument("--scheme", choices=("stabilizer", "qrc", "hardened"), default="stabilizer")
    g.add_argument("-n", type=int)
    g.add_argument("-m", type=int)
    g.add_argument("-g", type=int, default=2)
    g.add_argument("-q", type=int)
    g.add_argument("--lambda", dest="lam", type=int, default=scheme.DEFAULT_LAMBDA)
    g.add_argument("--m1", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--m0", type=int)
    g.add_argument("--d0", type=int)
    g.add_argument("-t", type=int, default=1, help="ones per (A, B) row for --scheme hardened")
    g.add_argument("--radical", action="store_true", help="postselect rank(B, C) = n - g")
    g.add_argument("--insecure", action="store_true", help="skip the m <= 2(n - lambda) gate")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", default="challenge", help="output prefix")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("correlation", help="print the symbolic <Z_s>")
    c.add_argument("public")
    c.add_argument("private")
    c.set_defaults(func=cmd_correlation)

    s = sub.add_parser("simulate", help="honest samples by statevector simulation")
    s.add_argument("public")
    s.add_argument("-T", type=int, default=4000)
    s.add_argument("--seed", type=int)
    s.add_argument("--cap", type=int, default=QUBIT_CAP)
    s.add_argument("--out", default="samples.txt")
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", help="estimate <Z_s> from a sample file and decide")
    v.add_argument("public")
    v.add_argument("private")
    v.add_argument("samples")
    v.add_argument("-T", type=int, help="use only the first T samples")
    v.add_argument("--tol", type=float, help="default 3/sqrt(T)")
    v.set_defaults(func=cmd_verify)

    a = sub.add_parser("attack", help="run a classical attack on a public instance")
    a.add_argument("public")
    a.add_argument("--method", choices=METHODS, default="linearity")
    a.add_argument("--budget", type=int, default=1 << 15, help="property-check budget")
    a.add_argument("--g-threshold", type=int, default=2)
    a.add_argument("--rounds-d", type=int, default=256, help="max probe vectors d")
    a.add_argument("--stop", choices=attacks.STOP_MODES, default="round")
    a.add_argument("-l", type=int, default=8, help="row-sum equations for --method km")
    a.add_argument("-k", type=int, default=2, help="probes per round for --method double-meyer")
    a.add_argument("-A", type=int, default=8, help="kernel-dimension threshold for --method lazy")
    a.add_argument("-p", type=float, help="row-deletion fraction for --method hamming (default: sweep)")
    a.add_argument("--razor-rounds", type=int, default=32)
    a.add_argument("-T", type=int, default=4000, help="spoofed samples to emit")
    a.add_argument("--seed", type=int)
    a.add_argument("--out", help="report path (default stdout)")
    a.add_argument("--samples-out", help="write spoofed samples here when a candidate self-checks")
    a.set_defaults(func=cmd_attack)

    cp = sub.add_parser("compile", help="dump the CNOT + rotation-round circuit")
    cp.add_argument("public")
    cp.add_argument("--out")
    cp.set_defaults(func=cmd_compile)

    b = sub.add_parser("bench", help="TSV tables for the kernel-size and attack-success figures")
    b.add_argument("figure", choices=FIGURES)
    b.add_argument("-m", type=int, default=60)
    b.add_argument("--gs", default="1,3")
    b.add_argument("--ns", help="n values, e.g. 35:55:5 or 40,50")
    b.add_argument("--qs", default="7,23,31")
    b.add_argument("--lambda", dest="lam", type=int, default=12)
    b.add_argument("--budget", type=int, default=1 << 12)
    b.add_argument("--seeds", type=int, default=20)
    b.add_argument("--base-seed", type=int, default=0)
    b.add_argument("--trials", type=int, default=200)
    b.add_argument("--workers", type=int, help="default IQP_THREADS or 1")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ResourceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidParameter, scheme.ConstructionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAMS


if __name__ == "__main__":
    sys.exit(main())
