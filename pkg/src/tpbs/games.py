"""Security experiments: simulatability (SIM) and extractability (EXT).

Adversaries are objects with ``on_init(pp, mdk)`` and ``run(game)``; the
game object exposes the experiment's oracles as methods.  A SIM adversary
returns a guess bit, an EXT adversary returns ``(msg, signature)`` or None.
Every experiment is driven by a 32-byte seed and is fully reproducible.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from typing import Callable, TextIO

import numpy as np

from . import scheme as tp
from .core import Params, derive_bytes, make_rng
from .oracles import ForkingOracle, ProgrammableOracle
from .stern import SimulationAbort, fs_point

__all__ = ["ProgrammableOracle", "ForkingOracle", "ProtocolViolation", "programmable_oracle", "ExperimentResult",
           "run_sim_experiment", "run_ext_experiment", "run_batch", "ADVERSARIES", "win_rate"]

SIM_SIGN_RETRIES = 3


def programmable_oracle(seed: bytes | None = None) -> ProgrammableOracle:
    return ProgrammableOracle(seed)


@dataclass
class ExperimentResult:
    experiment: str
    seed: bytes
    win: int
    counters: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)
    wall_time: float = 0.0
    transcript: list[str] = field(default_factory=list)

    def transcript_bytes(self) -> bytes:
        return "\n".join(self.transcript).encode()

    def log_line(self) -> str:
        counters = " ".join(f"{k}={v}" for k, v in sorted(self.counters.items()))
        flags = ",".join(self.flags) or "-"
        return (f"seed={self.seed.hex()} experiment={self.experiment} win={self.win} "
                f"{counters} flags={flags} time={self.wall_time:.3f}s")


def _sig_key(msg: np.ndarray, sig: tp.Signature) -> bytes:
    h = hashlib.sha3_256()
    h.update(np.asarray(msg, dtype=np.uint8).tobytes())
    h.update(sig.ovk)
    h.update(sig.ct.c1.tobytes())
    h.update(sig.ct.c2.tobytes())
    h.update(sig.ots_sig)
    return h.digest()


def _bits(x) -> np.ndarray:
    return np.asarray(x, dtype=np.uint8)


def _hex(x) -> str:
    return np.packbits(_bits(x)).tobytes().hex()


def _usk_digest(usk: tp.UserKey) -> str:
    h = hashlib.sha3_256(usk.ident.tobytes())
    for pol, v in usk.certs:
        h.update(pol.tobytes())
        h.update(np.asarray(v, dtype=np.int64).tobytes())
    return h.hexdigest()[:16]


class ProtocolViolation(ValueError):
    """The adversary called an oracle with malformed arguments."""


def _checked_bits(x, length: int, what: str) -> np.ndarray:
    try:
        b = np.asarray(x, dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise ProtocolViolation(f"{what}: {exc}") from None
    if b.shape != (length,) or np.any((b != 0) & (b != 1)):
        raise ProtocolViolation(f"{what} must be {length} bits")
    return b.astype(np.uint8)


# -------------------------------------------------------------------- SIM

class SimGame:
    """Oracles of the simulatability experiment for challenge bit b."""

    def __init__(self, params: Params, seed: bytes, leak_mdk: bool = False) -> None:
        rng = make_rng(seed, "sim-init")
        self.b = int(rng.integers(0, 2))
        self.pp0, _, self.mdk0, self.tr = tp.sim_setup(params, make_rng(seed, "sim-setup"))
        self.pp1, self.msk1, self.mdk1 = tp.setup(params, make_rng(seed, "real-setup"))
        self.oracle = ProgrammableOracle()
        self.rng = make_rng(seed, "sim-oracles")
        self.keys: list[tuple[np.ndarray, list, tp.UserKey]] = []
        self.challenged: set[bytes] = set()
        self.counters = {"keys": 0, "sigs": 0, "opens": 0, "aborts": 0, "refusals": 0}
        self.leak_mdk = leak_mdk
        self.transcript: list[str] = []

    @property
    def pp(self) -> tp.PublicParams:
        return self.pp1 if self.b else self.pp0

    @property
    def mdk(self) -> tp.MasterDecryptionKey:
        return self.mdk1 if self.b else self.mdk0

    def key_query(self, ident, policies) -> tp.UserKey:
        p = self.pp0.params
        ident = _checked_bits(ident, p.l1, "identity")
        policies = [_checked_bits(pol, p.l2, "policy") for pol in policies]
        self.counters["keys"] += 1
        usk0 = tp.sim_keygen(self.pp0, self.tr, ident, policies, self.rng)
        usk1 = tp.keygen(self.pp1, self.msk1, ident, policies, self.rng)
        self.keys.append((ident, policies, usk1))
        usk = usk1 if self.b else usk0
        self.transcript.append(f"key {_hex(ident)} {','.join(_hex(x) for x in policies)} "
                               f"{_usk_digest(usk)}")
        return usk

    def signature_query(self, i: int, msg, pcw) -> tp.Signature | None:
        p = self.pp0.params
        msg = _checked_bits(msg, p.n, "message")
        pcw = _checked_bits(pcw, p.d, "compliance witness")
        self.counters["sigs"] += 1
        if not 0 <= i < len(self.keys):
            self.counters["refusals"] += 1
            self.transcript.append(f"sign {i} {_hex(msg)} refused")
            return None
        _, policies, usk1 = self.keys[i]
        admits = any(tp.policy_check(self.pp0, p, msg, pcw) for p in policies)
        sig0 = None
        if admits:
            for _ in range(SIM_SIGN_RETRIES):
                try:
                    sig0 = tp.sim_sign(self.pp0, self.tr, msg, self.rng, self.oracle)
                    break
                except SimulationAbort:
                    self.counters["aborts"] += 1
        sig1 = tp.sign(self.pp1, usk1, msg, pcw, self.rng, self.oracle)
        sig = sig1 if self.b else sig0
        if sig is None:
            self.counters["refusals"] += 1
            self.transcript.append(f"sign {i} {_hex(msg)} refused")
            return None
        key = _sig_key(msg, sig)
        self.challenged.add(key)
        self.transcript.append(f"sign {i} {_hex(msg)} {key.hex()[:16]}")
        return sig

    def open_query(self, msg, sig: tp.Signature) -> np.ndarray | None:
        msg = _checked_bits(msg, self.pp0.params.n, "message")
        if not isinstance(sig, tp.Signature):
            raise ProtocolViolation("open query needs a Signature")
        self.counters["opens"] += 1
        key = _sig_key(msg, sig)
        if key in self.challenged:
            self.counters["refusals"] += 1
            self.transcript.append(f"open {key.hex()[:16]} refused")
            return None
        opened = tp.open_signature(self.pp, self.mdk, msg, sig, self.rng, self.oracle)
        self.transcript.append(f"open {key.hex()[:16]} {'invalid' if opened is None else _hex(opened)}")
        return opened


def run_sim_experiment(params: Params, adversary_factory: Callable, seed: bytes,
                       leak_mdk: bool = False) -> ExperimentResult:
    start = time.perf_counter()
    game = SimGame(params, seed, leak_mdk)
    adv = adversary_factory(make_rng(seed, "adversary"))
    adv.on_init(game.pp, game.mdk if leak_mdk else None)
    flags = []
    try:
        guess = adv.run(game)
        if guess not in (0, 1):
            raise ProtocolViolation(f"guess must be a bit, got {guess!r}")
        win = int(int(guess) == game.b)
    except ProtocolViolation as exc:
        flags.append(f"protocol-violation:{exc}".replace(" ", "_"))
        win = 0
    counters = dict(game.counters, aborts=game.counters["aborts"] + game.oracle.aborts,
                    queries=game.oracle.queries)
    game.transcript.append(f"finalize b={game.b} win={win}")
    return ExperimentResult("sim", seed, win, counters, flags,
                            time.perf_counter() - start, game.transcript)


# -------------------------------------------------------------------- EXT

class ExtGame:
    """Oracles of the extractability experiment; deterministic per query index."""

    def __init__(self, shared: "_ExtShared", oracle: ProgrammableOracle) -> None:
        self.shared = shared
        self.pp = shared.pp
        self.oracle = oracle
        self.revealed: set[tuple[bytes, bytes]] = set()
        self.simsigned: set[bytes] = set()
        self.counters = {"keys": 0, "sigs": 0}
        self.transcript: list[str] = []
        self._index = 0

    def _next_rng(self, label: str) -> np.random.Generator:
        self._index += 1
        return make_rng(self.shared.seed, f"ext-{label}-{self._index}")

    def key_query(self, ident, policies) -> tp.UserKey:
        p = self.pp.params
        ident = _checked_bits(ident, p.l1, "identity")
        policies = [_checked_bits(pol, p.l2, "policy") for pol in policies]
        self.counters["keys"] += 1
        rng = self._next_rng("key")
        cache_key = ("key", self._index, ident.tobytes(), b"".join(p.tobytes() for p in policies))
        usk = self.shared.cache.get(cache_key)
        if usk is None:
            usk = tp.sim_keygen(self.pp, self.shared.tr, ident, policies, rng)
            self.shared.cache[cache_key] = usk
        for pol in policies:
            self.revealed.add((ident.tobytes(), pol.tobytes()))
        self.transcript.append(f"key {_hex(ident)} {','.join(_hex(x) for x in policies)} "
                               f"{_usk_digest(usk)}")
        return usk

    def sim_sign_query(self, msg) -> tp.Signature | None:
        msg = _checked_bits(msg, self.pp.params.n, "message")
        self.counters["sigs"] += 1
        rng = self._next_rng("sign")
        cache_key = ("sign", self._index, msg.tobytes())
        cached = self.shared.cache.get(cache_key)
        if cached is not None:
            sig, point = cached
            self.oracle.program(point, self.pp.params.kappa, sig.proof.challenges)
        else:
            sig = None
            for _ in range(SIM_SIGN_RETRIES):
                try:
                    sig = tp.sim_sign(self.pp, self.shared.tr, msg, rng, self.oracle)
                    break
                except SimulationAbort:
                    continue
            if sig is None:
                self.transcript.append(f"simsign {_hex(msg)} aborted")
                return None
            stmt = tp.build_statement(self.pp, sig.ovk, sig.ct, msg)
            self.shared.cache[cache_key] = (sig, fs_point(stmt, sig.proof.commitments, self.pp.ck.q))
        key = _sig_key(msg, sig)
        self.simsigned.add(key)
        self.transcript.append(f"simsign {_hex(msg)} {key.hex()[:16]}")
        return sig

    reveal_key = key_query
    signature_query = sim_sign_query


@dataclass
class _ExtShared:
    seed: bytes
    pp: tp.PublicParams
    mdk: tp.MasterDecryptionKey
    tr: tp.SimTrapdoor
    cache: dict = field(default_factory=dict)


def run_ext_experiment(params: Params, adversary_factory: Callable, seed: bytes,
                       budget: int | None = None) -> ExperimentResult:
    start = time.perf_counter()
    pp, _, mdk, tr = tp.sim_setup(params, make_rng(seed, "ext-setup"))
    shared = _ExtShared(seed, pp, mdk, tr)

    def play(oracle):
        game = ExtGame(shared, oracle)
        adv = adversary_factory(make_rng(seed, "adversary"))
        adv.on_init(pp, None)
        return game, adv.run(game)

    oracle = ProgrammableOracle()
    result = ExperimentResult("ext", seed, 0)
    try:
        game, out = play(oracle)
        if out is not None:
            if not (isinstance(out, tuple) and len(out) == 2 and isinstance(out[1], tp.Signature)):
                raise ProtocolViolation("output must be (msg, Signature) or None")
            out = (_checked_bits(out[0], params.n, "message"), out[1])
    except ProtocolViolation as exc:
        result.flags.append(f"protocol-violation:{exc}".replace(" ", "_"))
        result.wall_time = time.perf_counter() - start
        return result
    counters = dict(game.counters, replays=0, queries=oracle.queries, aborts=oracle.aborts)
    result.counters = counters
    result.transcript = game.transcript
    finish_rng = make_rng(seed, "ext-finalize")
    if out is None:
        result.flags.append("no-output")
    else:
        msg, sig = out
        if not tp.verify(pp, msg, sig, oracle):
            result.flags.append("invalid")
        elif _sig_key(msg, sig) in game.simsigned:
            result.flags.append("simsigned")
        else:
            try:
                rep = tp.extr(pp, msg, sig, lambda o: play(o)[1], oracle.log, finish_rng, budget)
            except tp.ExtractionFailure:
                result.flags.append("extraction-failed")
            else:
                counters["replays"] = rep.replays
                opened = tp.open_signature(pp, mdk, msg, sig, finish_rng, oracle)
                unrevealed = (rep.ident.tobytes(), rep.policy.tobytes()) not in game.revealed
                bad_policy = not tp.policy_check(pp, rep.policy, msg, rep.pcw)
                wrong_id = opened is None or not np.array_equal(opened, rep.ident)
                result.win = int(unrevealed or bad_policy or wrong_id)
                result.flags += [f for f, c in (("unrevealed", unrevealed), ("policy", bad_policy),
                                                ("open-mismatch", wrong_id)) if c]
    result.transcript.append(f"finalize win={result.win} {','.join(result.flags) or '-'}")
    result.wall_time = time.perf_counter() - start
    return result


# ------------------------------------------------------------ adversaries

class Adversary:
    def __init__(self, rng: np.random.Generator) -> None:
        self.rng = rng
        self.pp: tp.PublicParams | None = None
        self.mdk = None

    def on_init(self, pp: tp.PublicParams, mdk=None) -> None:
        self.pp, self.mdk = pp, mdk

    def _random_key_request(self):
        p = self.pp.params
        ident = self.rng.integers(0, 2, p.l1).astype(np.uint8)
        ident[self.rng.integers(p.l1)] = 1  # never the all-zero identity
        policy = self.rng.integers(0, 2, p.l2).astype(np.uint8)
        return ident, policy


class CoinFlip(Adversary):
    """Ignores everything and guesses uniformly."""

    def run(self, game) -> int:
        return int(self.rng.integers(0, 2))


class MdkProbe(Adversary):
    """Opens a challenge signature with a leaked decryption key: simulated ones hide the zero identity."""

    def run(self, game) -> int:
        ident, policy = self._random_key_request()
        game.key_query(ident, [policy])
        msg, pcw = tp.random_message_for(self.pp, policy, self.rng)
        sig = game.signature_query(0, msg, pcw)
        if sig is None:
            return int(self.rng.integers(0, 2))
        opened = tp.open_signature(self.pp, self.mdk, msg, sig, self.rng, game.oracle)
        return int(opened is not None and bool(np.any(opened)))


class HonestSigner(Adversary):
    """Obtains a key and outputs an honestly generated signature."""

    def run(self, game):
        ident, policy = self._random_key_request()
        usk = game.key_query(ident, [policy])
        msg, pcw = tp.random_message_for(self.pp, policy, self.rng)
        return msg, tp.sign(self.pp, usk, msg, pcw, self.rng, game.oracle)


class SimSignReplay(Adversary):
    """Outputs a signature it obtained from the signing oracle."""

    def run(self, game):
        msg = self.rng.integers(0, 2, self.pp.params.n).astype(np.uint8)
        sig = game.sim_sign_query(msg)
        return None if sig is None else (msg, sig)


class ForgedCiphertext(Adversary):
    """Re-encrypts a different identity into an honest signature, keeping the stale proof."""

    def run(self, game):
        msg, sig = HonestSigner.run(self, game)
        q = self.pp.params.q
        c2 = sig.ct.c2.copy()
        c2[0] = (c2[0] + q // 2) % q
        forged = tp.Signature(sig.ovk, tp.Ciphertext(sig.ct.c1, c2), sig.proof, sig.ots_sig)
        return msg, forged


ADVERSARIES: dict[str, tuple[str, type]] = {
    "coin-flip": ("sim", CoinFlip),
    "mdk-probe": ("sim", MdkProbe),
    "honest-signer": ("ext", HonestSigner),
    "replay-simsign": ("ext", SimSignReplay),
    "forged-ciphertext": ("ext", ForgedCiphertext),
}


def run_batch(experiment: str, adversary: str, params: Params, trials: int, seed: bytes,
              log: TextIO | None = None) -> list[ExperimentResult]:
    """Run independent trials with seeds derived from ``seed``; one log line per trial."""
    kind, cls = ADVERSARIES[adversary]
    if kind != experiment:
        raise ValueError(f"adversary {adversary!r} targets the {kind} experiment")
    results = []
    for i in range(trials):
        trial_seed = derive_bytes(seed, f"trial-{i}")
        if experiment == "sim":
            res = run_sim_experiment(params, cls, trial_seed, leak_mdk=adversary == "mdk-probe")
        else:
            res = run_ext_experiment(params, cls, trial_seed)
        results.append(res)
        if log is not None:
            print(res.log_line(), file=log, flush=True)
    return results


def win_rate(results: list[ExperimentResult]) -> float:
    return sum(r.win for r in results) / max(1, len(results))
