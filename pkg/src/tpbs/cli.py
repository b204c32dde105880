"""Command-line front end.

Exit codes: 0 success or accept, 1 reject, 2 policy refusal, 3 usage error,
4 data error.  Bit strings (identities, policies, messages) are hex,
most-significant bit first.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import formats
from . import scheme as tp
from .core import (PRESETS, DimensionError, ParameterError, bits_to_hex, get_preset,
                   hex_to_bits, make_rng, parse_seed)
from .games import ADVERSARIES, run_batch, win_rate
from .serialization import DecodeError

EXIT_OK, EXIT_REJECT, EXIT_REFUSAL, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 3, 4

SETUP_FILES = ("params", "pp", "msk", "mdk")


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tpbs", description="Traceable policy-based signatures on lattices.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, params=False, inputs=False, out=False):
        p.add_argument("--seed", help="64 hex digits; falls back to $TPBS_SEED, then system entropy")
        if params:
            p.add_argument("--params", default="desk",
                           help=f"preset ({', '.join(PRESETS)}) or a params file")
        if inputs:
            p.add_argument("--in", dest="inputs", action="append", default=[], metavar="FILE",
                           help="input file; kind is detected from its header (repeatable)")
        if out:
            p.add_argument("--out", help="output path")
        return p

    common(sub.add_parser("setup", help="generate params, pp, msk and mdk files"), params=True, out=True)
    kg = common(sub.add_parser("keygen", help="issue a user key"), inputs=True, out=True)
    kg.add_argument("--id", required=True, help="identity bits (hex)")
    kg.add_argument("--policy", action="append", required=True, help="policy bits (hex, repeatable)")
    sg = common(sub.add_parser("sign", help="sign a message"), inputs=True, out=True)
    sg.add_argument("--msg", required=True, help="message bits (hex) or a file holding them")
    sg.add_argument("--pcw", required=True, help="policy-compliance witness bits (hex)")
    vf = common(sub.add_parser("verify", help="verify a signature"), inputs=True)
    vf.add_argument("--msg", required=True, help="message bits (hex) or a file holding them")
    op = common(sub.add_parser("open", help="recover the signer identity"), inputs=True)
    op.add_argument("--msg", required=True, help="message bits (hex) or a file holding them")
    gm = common(sub.add_parser("games", help="run a batch of security experiments"), params=True, out=True)
    gm.add_argument("--experiment", required=True, choices=["sim", "ext"])
    gm.add_argument("--adversary", required=True, choices=sorted(ADVERSARIES))
    gm.add_argument("--trials", type=int, default=10)
    gm.add_argument("--kappa", type=int, help="override the repetition count")
    return parser


# ---------------------------------------------------------------- helpers

def _seed(args) -> bytes:
    text = args.seed or os.environ.get("TPBS_SEED")
    if not text:
        return os.urandom(32)
    try:
        return parse_seed(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _params(name: str):
    if name in PRESETS:
        return get_preset(name)
    path = Path(name)
    if not path.is_file():
        raise UsageError(f"unknown preset or missing params file: {name}")
    return formats.decode_params(_read(path))


def _read(path: Path) -> bytes:
    try:
        return path.read_bytes()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None


def _write(path: Path, data: bytes) -> None:
    try:
        path.write_bytes(data)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None


def _bits(text: str, length: int, what: str) -> np.ndarray:
    try:
        return hex_to_bits(text, length)
    except ValueError as exc:
        raise UsageError(f"--{what}: {exc}") from None


def _message(text: str, length: int) -> np.ndarray:
    path = Path(text)
    if path.is_file():
        text = _read(path).decode(errors="replace")
    return _bits(text, length, "msg")


def _load(args, needed: tuple[str, ...]) -> dict:
    """Decode --in files by kind; public params are decoded first since others depend on them."""
    raw: dict[str, tuple[Path, bytes]] = {}
    for name in args.inputs:
        path = Path(name)
        data = _read(path)
        try:
            kind = formats.file_kind(data)
        except DecodeError as exc:
            raise DataError(f"{path}: {exc}") from None
        if kind in raw:
            raise UsageError(f"two {kind} files given: {raw[kind][0]} and {path}")
        raw[kind] = (path, data)
    missing = [k for k in needed if k not in raw]
    if missing:
        raise UsageError(f"missing --in file(s) of kind: {', '.join(missing)}")
    out = {}
    pp = None
    for kind in ("pp",) + tuple(k for k in needed if k != "pp"):
        path, data = raw[kind]
        try:
            if kind == "pp":
                pp = out["pp"] = formats.decode_pp(data)
            elif kind == "signature":
                out[kind] = formats.decode_signature(data, pp)
            elif kind == "usk":
                out[kind] = formats.decode_usk(data, pp.params)
            else:
                out[kind] = getattr(formats, f"decode_{kind}")(data)
        except DecodeError as exc:
            raise DataError(f"{path}: {exc}") from None
    for kind in ("msk", "mdk"):
        if kind in out and out[kind].basis.A.shape != (pp.params.n, pp.params.m):
            raise DataError(f"{raw[kind][0]}: trapdoor dimensions do not match {raw['pp'][0]}")
    return out


def _out(args, default: str) -> Path:
    return Path(args.out or default)


# --------------------------------------------------------------- commands

def cmd_setup(args) -> int:
    params = _params(args.params)
    pp, msk, mdk = tp.setup(params, make_rng(_seed(args), "cli-setup"))
    outdir = _out(args, ".")
    try:
        outdir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DataError(f"{outdir}: {exc.strerror}") from None
    blobs = {"params": formats.encode_params(pp.params), "pp": formats.encode_pp(pp),
             "msk": formats.encode_msk(msk), "mdk": formats.encode_mdk(mdk)}
    for kind in SETUP_FILES:
        _write(outdir / f"{kind}.bin", blobs[kind])
    print(f"wrote {', '.join(str(outdir / f'{k}.bin') for k in SETUP_FILES)}")
    return EXIT_OK


def cmd_keygen(args) -> int:
    got = _load(args, ("pp", "msk"))
    p = got["pp"].params
    ident = _bits(args.id, p.l1, "id")
    policies = [_bits(text, p.l2, "policy") for text in args.policy]
    usk = tp.keygen(got["pp"], got["msk"], ident, policies, make_rng(_seed(args), "cli-keygen"))
    _write(_out(args, "usk.bin"), formats.encode_usk(usk))
    return EXIT_OK


def cmd_sign(args) -> int:
    got = _load(args, ("pp", "usk"))
    pp, usk = got["pp"], got["usk"]
    p = pp.params
    if usk.ident.shape != (p.l1,) or any(pol.shape != (p.l2,) for pol, _ in usk.certs):
        raise DataError("user key dimensions do not match the public parameters")
    msg = _message(args.msg, p.n)
    pcw = _bits(args.pcw, p.d, "pcw")
    sig = tp.sign(pp, usk, msg, pcw, make_rng(_seed(args), "cli-sign"))
    if sig is None:
        print("refused: no certified policy admits this message", file=sys.stderr)
        return EXIT_REFUSAL
    _write(_out(args, "signature.bin"), formats.encode_signature(pp, sig))
    return EXIT_OK


def cmd_verify(args) -> int:
    got = _load(args, ("pp", "signature"))
    ok = tp.verify(got["pp"], _message(args.msg, got["pp"].params.n), got["signature"])
    print("accept" if ok else "reject")
    return EXIT_OK if ok else EXIT_REJECT


def cmd_open(args) -> int:
    got = _load(args, ("pp", "mdk", "signature"))
    pp = got["pp"]
    ident = tp.open_signature(pp, got["mdk"], _message(args.msg, pp.params.n), got["signature"],
                              make_rng(_seed(args), "cli-open"))
    if ident is None:
        print("refused: signature does not verify")
        return EXIT_REJECT
    print(bits_to_hex(ident))
    return EXIT_OK


def cmd_games(args) -> int:
    params = _params(args.params)
    if args.kappa is not None:
        params = params.with_kappa(args.kappa)
    if args.trials < 1:
        raise UsageError("--trials must be positive")
    kind = ADVERSARIES[args.adversary][0]
    if kind != args.experiment:
        raise UsageError(f"adversary {args.adversary} plays the {kind} experiment")
    log = sys.stdout
    handle = None
    if args.out:
        try:
            handle = log = open(args.out, "w")
        except OSError as exc:
            raise DataError(f"{args.out}: {exc.strerror}") from None
    try:
        results = run_batch(args.experiment, args.adversary, params, args.trials, _seed(args), log)
    finally:
        if handle is not None:
            handle.close()
    wins = sum(r.win for r in results)
    print(f"experiment={args.experiment} adversary={args.adversary} trials={len(results)} "
          f"wins={wins} rate={win_rate(results):.4f}")
    return EXIT_OK


COMMANDS = {"setup": cmd_setup, "keygen": cmd_keygen, "sign": cmd_sign, "verify": cmd_verify,
            "open": cmd_open, "games": cmd_games}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"tpbs: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, DecodeError, DimensionError, ParameterError) as exc:
        print(f"tpbs: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
