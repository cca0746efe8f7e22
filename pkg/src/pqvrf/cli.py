"""Command-line driver.

Exit codes: 0 success, 1 verification or submission rejected, 2 bad input.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .armor import ArmorError, armor, armor_keys, armor_proof, armor_ring, load_keys, load_proof, load_ring
from .complexity import complexity_report, measure
from .drbg import KeccakDrbg, system_rng
from .group import GROUP_NAMES
from .ledger import canonical_state, min_threshold
from .nist import closed_form_entropy, empirical_shannon_entropy, ones_ratio_blocks, run_suite
from .nist.sequence import BitSequence
from .protocol import RoundDriver
from .rlwe import PARAMETER_SETS
from .stream import StreamReader
from .vrf import SecurityConfig, gen, verify

EXIT_OK, EXIT_REJECTED, EXIT_INPUT = 0, 1, 2
KEY_FILE, RING_FILE = "keys.pqvrf", "ring.pqvrf"

log = logging.getLogger("pqvrf.cli")


class InputError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    group: str = "modp2048"
    rlwe: str = "R256"
    participants: int = 5
    threshold: int | None = None
    rounds: int = 1
    seed: str | None = None
    output: str = "pqvrf-out"
    literal_alg2: bool = False
    deterministic: bool = False

    def validate(self) -> "RunConfig":
        if self.group not in GROUP_NAMES:
            raise InputError(f"unknown group {self.group!r}")
        if self.rlwe not in PARAMETER_SETS:
            raise InputError(f"unknown RLWE parameter set {self.rlwe!r}")
        if self.participants < 1:
            raise InputError("participants must be at least 1")
        if self.threshold is not None and not min_threshold(self.participants) <= self.threshold <= self.participants:
            raise InputError(
                f"threshold must be between {min_threshold(self.participants)} and the participant count"
            )
        if self.rounds < 1:
            raise InputError("rounds must be at least 1")
        if self.deterministic and self.seed is None:
            raise InputError("deterministic mode needs a seed")
        return self

    def rng(self, label: str):
        return KeccakDrbg(self.seed.encode()).fork(label) if self.deterministic else system_rng()

    @property
    def out(self) -> Path:
        return Path(self.output)


_INT_KEYS = {"participants", "threshold", "rounds"}
_BOOL_KEYS = {"literal_alg2", "deterministic"}


def read_config_file(path: str) -> dict:
    """Line-based key=value file; '#' starts a comment."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string("[run]\n" + Path(path).read_text())
    except (OSError, configparser.Error) as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in parser["run"].items():
        if key not in known:
            raise InputError(f"unknown config key {key!r}")
        if key in _INT_KEYS:
            out[key] = None if value.lower() in ("", "none") else int(value)
        elif key in _BOOL_KEYS:
            out[key] = parser["run"].getboolean(key)
        else:
            out[key] = value
    return out


def build_config(args) -> RunConfig:
    values = read_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    if values.get("seed") is not None and "deterministic" not in values:
        values["deterministic"] = True
    try:
        return RunConfig(**values).validate()
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from exc


def _write(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _read(path: Path | str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


# --- commands -------------------------------------------------------------------


def cmd_keygen(cfg: RunConfig, args) -> int:
    km = gen(SecurityConfig(cfg.group, cfg.rlwe, cfg.participants), cfg.rng("keys"))
    _write(cfg.out / KEY_FILE, armor_keys(km))
    _write(cfg.out / RING_FILE, armor_ring(km.group, km.ring()))
    print(f"wrote {cfg.out / KEY_FILE} and {cfg.out / RING_FILE}")
    return EXIT_OK


def _load_km(cfg: RunConfig):
    path = cfg.out / KEY_FILE
    if not path.exists():
        raise InputError(f"{path} not found; run keygen first")
    try:
        km = load_keys(_read(path))
    except ArmorError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if (km.group_name, km.rlwe_name) != (cfg.group, cfg.rlwe):
        log.info("using key file parameters %s/%s", km.group_name, km.rlwe_name)
    return km


def _flip_c2(c1: bytes, c2: bytes, proof):
    return c1, bytes([c2[0] ^ 1]) + c2[1:], proof


def cmd_round(cfg: RunConfig, args) -> int:
    km = _load_km(cfg)
    n = len(km.participants)
    if cfg.threshold is not None and not min_threshold(n) <= cfg.threshold <= n:
        raise InputError(f"threshold must be between {min_threshold(n)} and {n} for this key file")
    rng = cfg.rng("round")
    chain_seed = cfg.seed.encode() if cfg.deterministic else rng.randbytes(32)
    driver = RoundDriver(
        km,
        rng,
        threshold=cfg.threshold,
        chain_seed=chain_seed,
        literal=cfg.literal_alg2,
        submission_filter=_flip_c2 if args.tamper else None,
    )
    delegators = [0] if cfg.literal_alg2 else None
    g = km.group
    rejected = 0
    for _ in range(cfg.rounds):
        skip = tuple(range(n - cfg.threshold)) if cfg.threshold is not None else ()
        result = driver.run_round(skip=skip, delegators=delegators)
        o = result.outcome
        rdir = cfg.out / "rounds" / f"{result.round_id:04d}"
        _write(rdir / "seed.pqvrf", armor("SEED", result.seed, {"Round": str(result.round_id)}))
        if o.c1 is not None:
            _write(rdir / "ciphertext.pqvrf", armor("CIPHERTEXT", o.c1 + o.c2, {"Rlwe": km.rlwe_name}))
        if o.proof is not None:
            _write(rdir / "proof.pqvrf", armor_proof(g, o.proof))
        receipt = {
            "round_id": result.round_id,
            "status": result.status,
            "reason": o.receipt.reason if o.receipt else o.error,
            "vrf_output": o.vrf_output.hex() if o.vrf_output else None,
        }
        _write(rdir / "receipt.json", json.dumps(receipt, indent=1, sort_keys=True) + "\n")
        print(f"round {result.round_id}: status {result.status} output {receipt['vrf_output']}")
        if result.status != 1:
            rejected += 1
            if driver.phase.name == "SEED_READY":
                driver.ledger.abort()
    _write(cfg.out / "ledger.log", driver.ledger.dump_log())
    _write(cfg.out / "state.json", canonical_state(driver.ledger.state, driver.ledger.chain) + "\n")
    _write(cfg.out / RING_FILE, armor_ring(g, km.ring()))
    return EXIT_REJECTED if rejected else EXIT_OK


def cmd_verify(cfg: RunConfig | None, args) -> int:
    try:
        pg, proof = load_proof(_read(args.proof))
        rg, ring = load_ring(_read(args.ring))
    except ArmorError as exc:
        raise InputError(str(exc)) from exc
    if pg != rg:
        raise InputError("proof and ring use different groups")
    ok = verify(pg, proof, ring)
    print("TRUE" if ok else "FALSE")
    return EXIT_OK if ok else EXIT_REJECTED


def _stream_source(cfg: RunConfig, kind: str):
    if kind == "zeros":
        return lambda nbytes: bytes(nbytes)
    path = cfg.out / KEY_FILE
    if path.exists():
        keys = _load_km(cfg).rlwe_keys
    else:
        from .rlwe import get_params, rlwe_keygen

        keys = rlwe_keygen(get_params(cfg.rlwe), cfg.rng("stream-keys"))
    label = (cfg.seed or "pqvrf-stream").encode()
    return StreamReader(keys, cfg.participants, label)


def cmd_nist(cfg: RunConfig, args) -> int:
    source = _stream_source(cfg, args.source)
    report = run_suite(source, args.sequences, args.bits, args.alpha, args.workers)
    _write(cfg.out / "nist_report.csv", report.to_table())
    _write(cfg.out / "nist_report.json", report.to_record() + "\n")
    print(report.to_table(), end="")
    return EXIT_OK


def cmd_bench(cfg: RunConfig | None, args) -> int:
    rep = complexity_report(args.k, args.n, args.M, args.log_p)
    if args.measure:
        rep = replace(rep, seconds=measure(args.group or "modp2048", args.rlwe or "R256"))
    print(rep.to_table(), end="")
    return EXIT_OK


def cmd_report(cfg: RunConfig, args) -> int:
    source = _stream_source(cfg, args.source)
    data = source(args.bytes)
    ratios, mean = ones_ratio_blocks(BitSequence.from_bytes(data), 128)
    doc = {
        "bytes": len(data),
        "blocks_128": int(ratios.size),
        "ones_ratio_mean": mean,
        "ones_ratio_min": float(ratios.min()),
        "ones_ratio_max": float(ratios.max()),
        "byte_entropy_bits": empirical_shannon_entropy(data),
        "closed_form_entropy": closed_form_entropy(cfg.participants, args.z),
        "participants": cfg.participants,
        "z": args.z,
    }
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    _write(cfg.out / "distribution.json", text)
    print(text, end="")
    return EXIT_OK


# --- argument parsing --------------------------------------------------------------


def _run_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--group", choices=GROUP_NAMES)
    p.add_argument("--rlwe", choices=sorted(PARAMETER_SETS))
    p.add_argument("-n", "--participants", type=int)
    p.add_argument("--threshold", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", help="master seed; implies deterministic mode")
    p.add_argument("-o", "--output", help="output directory")
    p.add_argument("--literal-alg2", dest="literal_alg2", action="store_const", const=True)
    p.add_argument("--deterministic", action="store_const", const=True)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    parser = argparse.ArgumentParser(prog="pqvrf", description="Post-quantum VRF toolkit", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", parents=[common], help="generate participant, off-chain and RLWE keys")
    _run_options(p)
    p.set_defaults(func=cmd_keygen, needs_config=True)

    p = sub.add_parser("round", parents=[common], help="run rounds on the simulated ledger")
    _run_options(p)
    p.add_argument("--tamper", action="store_true", help="corrupt c2 before submission")
    p.set_defaults(func=cmd_round, needs_config=True)

    p = sub.add_parser("verify", parents=[common], help="check a proof against a ring")
    p.add_argument("proof")
    p.add_argument("ring")
    p.set_defaults(func=cmd_verify, needs_config=False)

    p = sub.add_parser("nist", parents=[common], help="statistical battery over the output stream")
    _run_options(p)
    p.add_argument("--sequences", type=int, default=16)
    p.add_argument("--bits", type=int, default=1 << 20)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--source", choices=("pipeline", "zeros"), default="pipeline")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_nist, needs_config=True)

    p = sub.add_parser("bench", parents=[common], help="complexity contributions (and optional timings)")
    p.add_argument("--k", type=int, default=256)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--M", type=int, default=1024)
    p.add_argument("--log-p", dest="log_p", type=int, default=11)
    p.add_argument("--measure", action="store_true")
    p.add_argument("--group", choices=GROUP_NAMES)
    p.add_argument("--rlwe", choices=sorted(PARAMETER_SETS))
    p.set_defaults(func=cmd_bench, needs_config=False)

    p = sub.add_parser("report", parents=[common], help="bit balance and entropy of the output stream")
    _run_options(p)
    p.add_argument("--bytes", type=int, default=1 << 20)
    p.add_argument("--z", type=float, default=1.0)
    p.add_argument("--source", choices=("pipeline", "zeros"), default="pipeline")
    p.set_defaults(func=cmd_report, needs_config=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s %(name)s %(message)s")
    try:
        cfg = build_config(args) if args.needs_config else None
        return args.func(cfg, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
