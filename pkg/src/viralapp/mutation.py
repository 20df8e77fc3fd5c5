"""Strain mutation, re-signing, lineage and fitness."""

from __future__ import annotations

import dataclasses
import enum
import random
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Iterable, Optional, Sequence

from .buildchain import BuildCache, full_build
from .errors import InvalidOp, UnknownStrain
from .model import Certificate, DeviceClass, Genome, SignedPackage, SourceUnit

if TYPE_CHECKING:
    from .trace import Trace


class MutationKind(str, enum.Enum):
    RENAME_PACKAGE = "rename_package"
    RENAME_DISPLAY = "rename_display"
    SWAP_ICON = "swap_icon"
    ADD_TRAIT = "add_trait"
    REMOVE_TRAIT = "remove_trait"
    EDIT_SOURCE = "edit_source"
    ADD_LIBRARY = "add_library"
    REMOVE_LIBRARY = "remove_library"


APPEARANCE_KINDS = frozenset(
    {MutationKind.RENAME_PACKAGE, MutationKind.RENAME_DISPLAY, MutationKind.SWAP_ICON}
)


@dataclass(frozen=True)
class MutationOp:
    """One edit to a genome.

    ``target`` names the thing edited (new name, icon, trait, unit or
    library); ``content`` carries bytes for EditSource/AddLibrary. An
    EditSource without content flips one random byte of the unit.
    """

    kind: MutationKind
    target: str
    content: Optional[bytes] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", MutationKind(self.kind))

    def __str__(self) -> str:
        return f"{self.kind.value}({self.target})"


def _flip_byte(content: bytes, rng: random.Random) -> bytes:
    if not content:
        return bytes([rng.randrange(256)])
    buf = bytearray(content)
    i = rng.randrange(len(buf))
    buf[i] ^= rng.randrange(1, 256)
    return bytes(buf)


def _apply(genome: Genome, op: MutationOp, rng: random.Random) -> dict[str, Any]:
    k = op.kind
    g = genome
    if k is MutationKind.RENAME_PACKAGE:
        if not op.target or op.target == g.package_name:
            raise InvalidOp(op, "package name unchanged or empty")
        return {"package_name": op.target}
    if k is MutationKind.RENAME_DISPLAY:
        if op.target == g.display_name:
            raise InvalidOp(op, "display name unchanged")
        return {"display_name": op.target}
    if k is MutationKind.SWAP_ICON:
        if op.target == g.icon_id:
            raise InvalidOp(op, "icon unchanged")
        return {"icon_id": op.target}
    if k is MutationKind.ADD_TRAIT:
        if op.target in g.traits:
            raise InvalidOp(op, "trait already present")
        return {"traits": g.traits | {op.target}}
    if k is MutationKind.REMOVE_TRAIT:
        if op.target not in g.traits:
            raise InvalidOp(op, "trait absent")
        return {"traits": g.traits - {op.target}}
    if k is MutationKind.EDIT_SOURCE:
        unit = g.sources.get(op.target)
        if unit is None:
            raise InvalidOp(op, "no such source unit")
        content = _flip_byte(unit.content, rng) if op.content is None else op.content
        if content == unit.content:
            raise InvalidOp(op, "source content unchanged")
        sources = dict(g.sources)
        sources[op.target] = SourceUnit(content, unit.resource_refs)
        return {"sources": sources}
    if k is MutationKind.ADD_LIBRARY:
        if op.target in g.libraries:
            raise InvalidOp(op, "library already present")
        libs = dict(g.libraries)
        libs[op.target] = op.content or b""
        return {"libraries": libs}
    if k is MutationKind.REMOVE_LIBRARY:
        if op.target not in g.libraries:
            raise InvalidOp(op, "library absent")
        libs = dict(g.libraries)
        del libs[op.target]
        return {"libraries": libs}
    raise InvalidOp(op, "unknown kind")  # pragma: no cover


def mutate(genome: Genome, ops: Sequence[MutationOp], rng: Optional[random.Random] = None) -> Genome:
    """Apply ``ops`` in order and return the child genome (generation + 1)."""
    if not ops:
        raise InvalidOp([], "empty mutation does not make a new strain")
    rng = rng or random.Random(0)
    current = genome
    changes: dict[str, Any] = {}
    for op in ops:
        step = _apply(current, op, rng)
        changes.update(step)
        current = dataclasses.replace(current, **step)
    return dataclasses.replace(
        genome, **changes, generation=genome.generation + 1, parent_strain=genome.strain_id
    )


def random_op(genome: Genome, kind: MutationKind, rng: random.Random) -> Optional[MutationOp]:
    """A valid op of ``kind`` for ``genome``, or None if none exists."""
    tag = f"{rng.getrandbits(32):08x}"
    if kind is MutationKind.RENAME_PACKAGE:
        return MutationOp(kind, f"{genome.package_name.rsplit('.', 1)[0]}.m{tag}")
    if kind is MutationKind.RENAME_DISPLAY:
        return MutationOp(kind, f"{genome.display_name.split('~')[0]}~{tag}")
    if kind is MutationKind.SWAP_ICON:
        return MutationOp(kind, f"ic_{tag}")
    if kind is MutationKind.ADD_TRAIT:
        return MutationOp(kind, f"trait_{tag}")
    if kind is MutationKind.REMOVE_TRAIT:
        if not genome.traits:
            return None
        return MutationOp(kind, rng.choice(sorted(genome.traits)))
    if kind is MutationKind.EDIT_SOURCE:
        if not genome.sources:
            return None
        return MutationOp(kind, rng.choice(sorted(genome.sources)))
    if kind is MutationKind.ADD_LIBRARY:
        return MutationOp(kind, f"lib_{tag}", tag.encode() * 4)
    if kind is MutationKind.REMOVE_LIBRARY:
        if not genome.libraries:
            return None
        return MutationOp(kind, rng.choice(sorted(genome.libraries)))
    return None  # pragma: no cover


def random_ops(genome: Genome, kinds: Iterable[MutationKind], rng: random.Random) -> list[MutationOp]:
    """One op per requested kind, skipping kinds with no valid target.

    Falls back to a display rename so the result is never empty.
    """
    ops = []
    current = genome
    for kind in kinds:
        op = random_op(current, MutationKind(kind), rng)
        if op is None:
            continue
        current = dataclasses.replace(current, **_apply(current, op, random.Random(0)))
        ops.append(op)
    if not ops:
        ops.append(random_op(genome, MutationKind.RENAME_DISPLAY, rng))
    return ops


def resign(
    pkg: SignedPackage,
    new_cert: Certificate,
    device_class: DeviceClass,
    cache: Optional[BuildCache] = None,
    pad_to: Optional[int] = None,
) -> SignedPackage:
    """Rebuild ``pkg`` from its embedded genome and sign it with ``new_cert``."""
    if pkg.embedded_genome is None:
        raise ValueError("package carries no genome to rebuild from")
    base = pkg.size_bytes
    rebuilt, _ = full_build(
        pkg.embedded_genome,
        pkg.built_for,
        cache if cache is not None else BuildCache(),
        device_class,
        cert=new_cert,
        pad_to=pad_to if pad_to is not None else base,
    )
    return rebuilt


@dataclass(frozen=True)
class LineageNode:
    parent: Optional[str]
    generation: int
    birth_time: int
    birth_device: Optional[str]


@dataclass
class Lineage:
    nodes: dict[str, LineageNode] = field(default_factory=dict)

    def insert(self, genome: Genome, birth_time: int = 0, birth_device: Optional[str] = None) -> LineageNode:
        """Record ``genome``. A known strain keeps its first birth record."""
        existing = self.nodes.get(genome.strain_id)
        if existing is not None:
            return existing
        parent = genome.parent_strain
        if parent is None:
            if genome.generation != 0:
                raise ValueError("a root strain must have generation 0")
        else:
            pnode = self.nodes.get(parent)
            if pnode is None:
                raise UnknownStrain(parent)
            if genome.generation != pnode.generation + 1:
                raise ValueError("child generation must be parent generation + 1")
        node = LineageNode(parent, genome.generation, birth_time, birth_device)
        self.nodes[genome.strain_id] = node
        return node

    def __contains__(self, strain_id: str) -> bool:
        return strain_id in self.nodes

    def ancestors(self, strain_id: str) -> list[str]:
        """Parent first, root last."""
        if strain_id not in self.nodes:
            raise UnknownStrain(strain_id)
        out = []
        cur = self.nodes[strain_id].parent
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        return out

    def descendants(self, strain_id: str) -> set[str]:
        """``strain_id`` and everything born from it."""
        if strain_id not in self.nodes:
            raise UnknownStrain(strain_id)
        children: dict[str, list[str]] = {}
        for sid, node in self.nodes.items():
            if node.parent is not None:
                children.setdefault(node.parent, []).append(sid)
        out = {strain_id}
        stack = [strain_id]
        while stack:
            for child in children.get(stack.pop(), ()):
                if child not in out:
                    out.add(child)
                    stack.append(child)
        return out

    def roots(self) -> list[str]:
        return sorted(s for s, n in self.nodes.items() if n.parent is None)

    def to_records(self) -> list[dict]:
        return [
            {
                "strain": sid,
                "parent": n.parent,
                "generation": n.generation,
                "birth_time": n.birth_time,
                "birth_device": n.birth_device,
            }
            for sid, n in sorted(self.nodes.items(), key=lambda kv: (kv[1].birth_time, kv[0]))
        ]

    @classmethod
    def from_records(cls, records: Iterable[dict]) -> Lineage:
        lin = cls()
        for r in records:
            lin.nodes[r["strain"]] = LineageNode(r["parent"], r["generation"], r["birth_time"], r["birth_device"])
        return lin


@dataclass(frozen=True)
class Fitness:
    devices_reached: int
    survived_blacklist: bool
    escape_time: Optional[float]  # seconds


def fitness(trace: Trace, strain_id: str, subtree: bool = False) -> Fitness:
    """Spread and survival of one strain (or its whole subtree) in ``trace``.

    ``survived_blacklist`` is true when at least one strain in scope was
    never blocked. ``escape_time`` is the earliest escape of a strain in
    scope, in seconds.
    """
    lineage = trace.lineage
    if strain_id not in lineage:
        raise UnknownStrain(strain_id)
    scope = lineage.descendants(strain_id) if subtree else {strain_id}

    devices = set()
    if trace.origin_strain in scope:
        devices.add(trace.origin_device)
    devices.update(d for d, s in trace.initial_installs if s in scope)
    blocked: set[str] = set()
    escapes = []
    for rec in trace.records:
        strain = rec.get("strain")
        if strain not in scope:
            continue
        if rec["kind"] == "Install" and rec["outcome"] in ("Updated", "SideBySide"):
            devices.add(rec["device"])
        elif rec["kind"] == "TransferPhase" and rec.get("outcome") == "Blocked":
            blocked.add(strain)
        elif rec["kind"] == "Escape":
            escapes.append(rec["t"])
    for sid in scope:
        node = lineage.nodes[sid]
        if node.birth_device is not None and node.generation > 0:
            devices.add(node.birth_device)
    escape = min(escapes) / 1000 if escapes else None
    return Fitness(len(devices), bool(scope - blocked), escape)
