"""Deterministic synthetic corpus of labeled contract bundles.

Honeypots follow the trap lifecycle: creation, the creator's bait deposit,
victim deposits the contract keeps, and the creator collecting the balance.
Non-honeypots are token-like, utility or payout contracts. All randomness
comes from one generator seeded by ``SynthConfig.seed``.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..chain.dataset import store_dataset
from ..chain.labels import parse_compiler_version, propagate_labels
from ..chain.models import (
    NOT_HONEYPOT,
    Contract,
    ContractBundle,
    HoneypotLabel,
    InternalTransaction,
    NormalTransaction,
    SourceInfo,
)
from ..utils.logger import log
from ..utils.utils import PathLike
from .archetypes import HoneypotArchetype, NonHoneypotArchetype, SourceProfile, SynthConfig

GENESIS_TIMESTAMP = 1438269973
SECONDS_PER_BLOCK = 14
FIRST_BLOCK = 4_000_000
LAST_BLOCK = 6_500_000
MICRO_ETHER = 10 ** 12
BYTECODE_PREFIX = bytes.fromhex("6080604052")


@dataclass
class _Timeline:
    """Transactions of one contract under construction, in chain order."""

    rng: np.random.Generator
    address: str
    creator: str
    gas_range: Tuple[int, int]
    block: int
    normals: List[NormalTransaction] = field(default_factory=list)
    internals: List[InternalTransaction] = field(default_factory=list)
    balance: int = 0

    def _hash(self) -> str:
        return "0x" + self.rng.bytes(32).hex()

    def _gas(self, failed: bool) -> Tuple[int, int]:
        gas = int(self.rng.integers(self.gas_range[0], self.gas_range[1] + 1))
        used = gas if failed else int(gas * self.rng.uniform(0.3, 0.95))
        return gas, used

    def _advance(self):
        self.block += int(self.rng.integers(1, 5000))

    def call(
        self,
        sender: str,
        value: int = 0,
        failed: bool = False,
        payout: Optional[Tuple[str, int]] = None,
        creation: bool = False,
    ) -> NormalTransaction:
        """Append a normal transaction; ``payout`` sends (to, wei) out of the contract."""
        if self.normals or not creation:
            self._advance()
        gas, used = self._gas(failed)
        tx = NormalTransaction(
            hash=self._hash(),
            block_number=self.block,
            timestamp=GENESIS_TIMESTAMP + self.block * SECONDS_PER_BLOCK,
            from_address=sender,
            to="" if creation else self.address,
            contract_address=self.address if creation else "",
            value=value,
            gas=gas,
            gas_used=used,
            is_error=failed,
            transaction_index=int(self.rng.integers(0, 200)),
        )
        self.normals.append(tx)
        if failed:
            return tx
        self.balance += value
        if payout is not None and payout[1] > 0:
            to, amount = payout
            inner_gas, inner_used = self._gas(False)
            self.internals.append(InternalTransaction(
                parent_hash=tx.hash,
                from_address=self.address,
                to=to,
                contract_address="",
                value=amount,
                gas=inner_gas // 4,
                gas_used=inner_used // 4,
                is_error=False,
                trace_id="0",
            ))
            self.balance -= amount
        return tx


class CorpusGenerator:
    def __init__(self, config: SynthConfig):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        n_users = max(50, 2 * (config.n_honeypots + config.n_non_honeypots))
        self.users = [self._address() for _ in range(n_users)]

    def _address(self) -> str:
        return "0x" + self.rng.bytes(20).hex()

    def _chance(self, p: float) -> bool:
        return bool(self.rng.random() < p)

    def _count(self, bounds: Tuple[int, int]) -> int:
        return int(self.rng.integers(bounds[0], bounds[1] + 1))

    def _wei(self, bounds: Tuple[float, float]) -> int:
        return int(self.rng.uniform(bounds[0], bounds[1]) * 1_000_000) * MICRO_ETHER

    def _pick(self, weights: Dict) -> object:
        keys = list(weights)
        p = np.array([weights[k] for k in keys], dtype=np.float64)
        return keys[int(self.rng.choice(len(keys), p=p / p.sum()))]

    def _user(self) -> str:
        return self.users[int(self.rng.integers(len(self.users)))]

    def _bytecode(self) -> bytes:
        return BYTECODE_PREFIX + self.rng.bytes(int(self.rng.integers(200, 2000)))

    def _source(self, profile: SourceProfile) -> SourceInfo:
        if self._chance(self.config.noise.missing_source):
            return SourceInfo.absent()
        version = str(self._pick(profile.compilers))
        _, minor, patch = parse_compiler_version(version)
        library = str(self._pick(profile.libraries))
        return SourceInfo(
            has_source_code=True,
            source_line_count=self._count(profile.lines),
            compiler_version_raw=version,
            compiler_minor=minor,
            compiler_patch=patch,
            compiler_runs=int(self._pick(profile.runs)),
            library=None if library == "none" else library,
        )

    def _timeline(self, gas: Tuple[int, int]) -> _Timeline:
        return _Timeline(
            rng=self.rng,
            address=self._address(),
            creator=self._address(),
            gas_range=gas,
            block=int(self.rng.integers(FIRST_BLOCK, LAST_BLOCK)),
        )

    def honeypot(self, archetype: HoneypotArchetype, bytecode: bytes) -> ContractBundle:
        noise = self.config.noise
        t = self._timeline(archetype.gas)
        creation = t.call(t.creator, self._wei(archetype.creation_value), creation=True)

        if not self._chance(noise.omit_creator_deposit):
            t.call(t.creator, self._wei(archetype.deposit_value))

        steps: List[str] = ["onlooker"] * self._count(archetype.onlookers)
        if self._chance(noise.victim_deposit):
            steps += ["victim"] * max(1, self._count(archetype.victims))
        self.rng.shuffle(steps)
        for step in steps:
            if step == "victim":
                t.call(self._user(), self._wei(archetype.victim_value))
            else:
                t.call(self._user(), 0, failed=self._chance(0.3))

        if self._chance(noise.failed_honeypot) and t.balance > 0:
            thief = self._user()
            t.call(thief, 0, payout=(thief, t.balance))
        if self._chance(noise.creator_withdrawal) and t.balance > 0:
            t.call(t.creator, 0, payout=(t.creator, t.balance))

        contract = Contract(
            address=t.address,
            creator=t.creator,
            bytecode=bytecode,
            creation_block=creation.block_number,
            creation_tx_hash=creation.hash,
        )
        return ContractBundle(
            contract=contract,
            source=self._source(archetype.source),
            normals=tuple(t.normals),
            internals=tuple(t.internals),
            label=HoneypotLabel.honeypot(archetype.technique),
        )

    def non_honeypot(self, archetype: NonHoneypotArchetype) -> ContractBundle:
        t = self._timeline(archetype.gas)
        behavior = archetype.behavior
        funded = behavior == "payout"
        creation = t.call(t.creator, self._wei(archetype.value) if funded else 0, creation=True)

        steps = ["creator"] * self._count(archetype.creator_calls) + ["user"] * self._count(archetype.calls)
        self.rng.shuffle(steps)
        for step in steps:
            failed = self._chance(archetype.error_rate)
            if step == "creator":
                t.call(t.creator, self._wei(archetype.value) if funded else 0, failed=failed)
            elif funded and t.balance > 0:
                user = self._user()
                t.call(user, 0, failed=failed, payout=(user, min(t.balance, self._wei(archetype.value))))
            else:
                t.call(self._user(), 0, failed=failed)

        bytecode = b"" if self._chance(self.config.noise.missing_bytecode) else self._bytecode()
        contract = Contract(
            address=t.address,
            creator=t.creator,
            bytecode=bytecode,
            creation_block=creation.block_number,
            creation_tx_hash=creation.hash,
        )
        return ContractBundle(
            contract=contract,
            source=self._source(archetype.source),
            normals=tuple(t.normals),
            internals=tuple(t.internals),
            label=NOT_HONEYPOT,
        )

    def _honeypots(self) -> Tuple[List[ContractBundle], Dict[str, HoneypotLabel]]:
        """Honeypot bundles plus one seed label per bytecode clone group."""
        archetypes = self.config.honeypots
        weights = {i: a.weight for i, a in enumerate(archetypes)}
        bundles: List[ContractBundle] = []
        seeds: Dict[str, HoneypotLabel] = {}
        deployed: Dict[int, List[bytes]] = {i: [] for i in weights}
        for _ in range(self.config.n_honeypots):
            index = int(self._pick(weights))
            earlier = deployed[index]
            clone = bool(earlier) and self._chance(self.config.noise.clone)
            bytecode = earlier[int(self.rng.integers(len(earlier)))] if clone else self._bytecode()
            bundle = self.honeypot(archetypes[index], bytecode)
            if not clone:
                earlier.append(bytecode)
                seeds[bundle.address] = bundle.label
            bundles.append(bundle)
        return bundles, seeds

    def generate(self) -> List[ContractBundle]:
        honeypots, seeds = self._honeypots()
        archetypes = self.config.non_honeypots
        weights = {i: a.weight for i, a in enumerate(archetypes)}
        others = [
            self.non_honeypot(archetypes[int(self._pick(weights))])
            for _ in range(self.config.n_non_honeypots)
        ]
        bundles = honeypots + others

        # Labels reach clones only through their bytecode group's representative.
        labels = propagate_labels([b.contract for b in bundles], seeds)
        bundles = [b.with_label(labels[b.address]) for b in bundles]
        order = self.rng.permutation(len(bundles))
        return [bundles[i] for i in order]


def generate(config: SynthConfig) -> List[ContractBundle]:
    """Labeled bundles for ``config``; the same config always yields the same corpus."""
    bundles = CorpusGenerator(config).generate()
    log.info(
        f"Generated {len(bundles)} contracts "
        f"({config.n_honeypots} honeypots, {config.n_non_honeypots} non-honeypots, seed {config.seed})"
    )
    return bundles


def write_corpus(config: SynthConfig, path: PathLike) -> int:
    return store_dataset(generate(config), path)


def technique_counts(bundles: Sequence[ContractBundle]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for bundle in bundles:
        key = bundle.label.technique.value
        counts[key] = counts.get(key, 0) + 1
    return dict(sorted(counts.items()))
