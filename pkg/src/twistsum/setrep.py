"""Run-length model of the constructed set: ordered, disjoint integer blocks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .powersum import ZERO, CertifiedSum


class SetError(ValueError):
    """Base class for invalid block sets or documents."""


class OverlapError(SetError):
    def __init__(self, previous: "Block", block: "Block"):
        self.previous = previous
        self.block = block
        super().__init__(
            f"block {block} overlaps or precedes {previous}: "
            f"start {block.start} < {previous.end}"
        )


class DocumentError(SetError):
    """Malformed or invariant-violating persisted document."""


@dataclass(frozen=True, order=True)
class Block:
    """Consecutive integers [start, start + len)."""

    start: int
    len: int

    def __post_init__(self):
        if isinstance(self.start, bool) or not isinstance(self.start, int):
            raise SetError(f"block start must be an int, got {self.start!r}")
        if isinstance(self.len, bool) or not isinstance(self.len, int):
            raise SetError(f"block len must be an int, got {self.len!r}")
        if self.start < 2:
            raise SetError(f"block start must be >= 2, got {self.start}")
        if self.len < 1:
            raise SetError(f"block len must be >= 1, got {self.len}")

    @property
    def end(self) -> int:
        return self.start + self.len

    @property
    def last(self) -> int:
        return self.start + self.len - 1

    def __str__(self) -> str:
        return f"[{self.start}, {self.end})"


@dataclass(frozen=True)
class BlockSet:
    t: float
    blocks: tuple[Block, ...] = ()
    total_mass: CertifiedSum = ZERO
    total_sum: CertifiedSum = ZERO

    @property
    def count(self) -> int:
        return sum(b.len for b in self.blocks)

    @property
    def next_free(self) -> int:
        """Smallest integer that may start the next block."""
        return self.blocks[-1].end if self.blocks else 2

    def elements(self, limit: int = 10**6):
        """Iterate members; refuses sets larger than ``limit``."""
        if self.count > limit:
            raise SetError(f"set has {self.count} elements, more than limit {limit}")
        for b in self.blocks:
            yield from range(b.start, b.end)


def append_block(bs: BlockSet, b: Block, sum_b: CertifiedSum, mass_b: CertifiedSum) -> BlockSet:
    if bs.blocks and b.start < bs.blocks[-1].end:
        raise OverlapError(bs.blocks[-1], b)
    return BlockSet(
        t=bs.t,
        blocks=bs.blocks + (b,),
        total_mass=bs.total_mass + mass_b,
        total_sum=bs.total_sum + sum_b,
    )


def check_blocks(blocks) -> None:
    for prev, cur in zip(blocks, blocks[1:]):
        if cur.start < prev.end:
            raise OverlapError(prev, cur)


# --- persistence -----------------------------------------------------------

def _num(x: float) -> str:
    # repr is the shortest string that round-trips the double exactly
    return repr(float(x))


def to_document(bs: BlockSet) -> dict:
    return {
        "t": _num(bs.t),
        "blocks": [{"start": str(b.start), "len": str(b.len)} for b in bs.blocks],
        "total_mass": {"value": _num(bs.total_mass.value.real), "err": _num(bs.total_mass.err)},
        "total_sum": {
            "re": _num(bs.total_sum.value.real),
            "im": _num(bs.total_sum.value.imag),
            "err": _num(bs.total_sum.err),
        },
    }


def save(bs: BlockSet) -> str:
    return json.dumps(to_document(bs), indent=2) + "\n"


def _float(doc: dict, key: str, where: str) -> float:
    try:
        raw = doc[key]
    except (KeyError, TypeError):
        raise DocumentError(f"missing field {where}.{key}") from None
    if not isinstance(raw, str):
        raise DocumentError(f"{where}.{key} must be a decimal string, got {raw!r}")
    try:
        x = float(raw)
    except ValueError:
        raise DocumentError(f"{where}.{key} is not a number: {raw!r}") from None
    if not math.isfinite(x):
        raise DocumentError(f"{where}.{key} must be finite, got {raw!r}")
    return x


def _int(doc: dict, key: str, where: str) -> int:
    raw = doc.get(key) if isinstance(doc, dict) else None
    if not isinstance(raw, str) or not raw.isdigit():
        raise DocumentError(f"{where}.{key} must be a non-negative decimal integer string, got {raw!r}")
    return int(raw)


def from_document(doc: dict) -> BlockSet:
    if not isinstance(doc, dict):
        raise DocumentError("document must be a JSON object")
    missing = {"t", "blocks", "total_mass", "total_sum"} - doc.keys()
    if missing:
        raise DocumentError(f"missing fields: {sorted(missing)}")
    t = _float(doc, "t", "$")
    if not isinstance(doc["blocks"], list):
        raise DocumentError("blocks must be a list")
    blocks = []
    for i, entry in enumerate(doc["blocks"]):
        where = f"blocks[{i}]"
        try:
            blocks.append(Block(_int(entry, "start", where), _int(entry, "len", where)))
        except DocumentError:
            raise
        except SetError as e:
            raise DocumentError(f"{where}: {e}") from None
    try:
        check_blocks(blocks)
    except OverlapError as e:
        raise DocumentError(str(e)) from e
    tm, ts = doc["total_mass"], doc["total_sum"]
    try:
        mass = CertifiedSum(complex(_float(tm, "value", "total_mass"), 0.0), _float(tm, "err", "total_mass"))
        tot = CertifiedSum(
            complex(_float(ts, "re", "total_sum"), _float(ts, "im", "total_sum")),
            _float(ts, "err", "total_sum"),
        )
    except ValueError as e:
        if isinstance(e, DocumentError):
            raise
        raise DocumentError(str(e)) from None
    return BlockSet(t=t, blocks=tuple(blocks), total_mass=mass, total_sum=tot)


def load(text: str) -> BlockSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(f"invalid JSON: {e}") from None
    return from_document(doc)
