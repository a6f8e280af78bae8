"""Semantic knowledge graph: entities, signals, topology and series bindings.

Every time-series, model deployment and forecast is keyed by a Context,
the (entity, signal) pair.  Names are case-sensitive exact-match keys.
"""
from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field

from .errors import (
    AlreadyBound,
    DuplicateName,
    InvalidCoordinates,
    SelfEdge,
    UnknownContext,
    UnknownEntity,
    UnknownSignal,
)
from .store import Store


@dataclass(frozen=True)
class Entity:
    id: int
    name: str
    kind: str
    latitude: float | None = None
    longitude: float | None = None
    attributes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "latitude": self.latitude,
            "longitude": self.longitude,
            "attributes": dict(self.attributes),
        }


@dataclass(frozen=True)
class Signal:
    id: int
    name: str
    unit: str
    quantity: str

    def to_json(self) -> dict:
        return {"name": self.name, "unit": self.unit, "quantity": self.quantity}


@dataclass(frozen=True)
class Context:
    entity: Entity
    signal: Signal

    def to_json(self) -> dict:
        return {"entity": self.entity.to_json(), "signal": self.signal.to_json()}

    @property
    def key(self) -> tuple[str, str]:
        return (self.entity.name, self.signal.name)


def _row_entity(row) -> Entity:
    return Entity(
        id=row["id"],
        name=row["name"],
        kind=row["kind"],
        latitude=row["latitude"],
        longitude=row["longitude"],
        attributes=json.loads(row["attributes"]),
    )


class SemanticStore:
    def __init__(self, store: Store):
        self._store = store

    # --- entities / signals ---

    def register_entity(
        self,
        name: str,
        kind: str,
        latitude: float | None = None,
        longitude: float | None = None,
        attributes: dict | None = None,
    ) -> int:
        if not name:
            raise ValueError("entity name must be non-empty")
        if (latitude is None) != (longitude is None):
            raise InvalidCoordinates("latitude and longitude must both be present or both absent")
        if latitude is not None and not (-90.0 <= latitude <= 90.0):
            raise InvalidCoordinates(f"latitude {latitude} out of range [-90, 90]")
        if longitude is not None and not (-180.0 <= longitude <= 180.0):
            raise InvalidCoordinates(f"longitude {longitude} out of range [-180, 180]")
        attributes = attributes or {}
        with self._store.connect() as conn:
            row = conn.execute("SELECT * FROM entities WHERE name = ?", (name,)).fetchone()
        if row is not None:
            existing = _row_entity(row)
            same = (
                existing.kind == kind
                and existing.latitude == latitude
                and existing.longitude == longitude
                and existing.attributes == attributes
            )
            if not same:
                raise DuplicateName(f"entity {name!r} already registered with different fields")
            return existing.id
        with self._store.write() as conn:
            cur = conn.execute(
                "INSERT INTO entities (name, kind, latitude, longitude, attributes) "
                "VALUES (?, ?, ?, ?, ?)",
                (name, kind, latitude, longitude, json.dumps(attributes)),
            )
            return cur.lastrowid

    def register_signal(self, name: str, unit: str, quantity: str) -> int:
        if not name:
            raise ValueError("signal name must be non-empty")
        with self._store.connect() as conn:
            row = conn.execute("SELECT * FROM signals WHERE name = ?", (name,)).fetchone()
        if row is not None:
            if row["unit"] != unit or row["quantity"] != quantity:
                raise DuplicateName(f"signal {name!r} already registered with different fields")
            return row["id"]
        with self._store.write() as conn:
            cur = conn.execute(
                "INSERT INTO signals (name, unit, quantity) VALUES (?, ?, ?)",
                (name, unit, quantity),
            )
            return cur.lastrowid

    def get_entity(self, name: str) -> Entity:
        with self._store.connect() as conn:
            row = conn.execute("SELECT * FROM entities WHERE name = ?", (name,)).fetchone()
        if row is None:
            raise UnknownEntity(f"no entity named {name!r}")
        return _row_entity(row)

    def get_signal(self, name: str) -> Signal:
        with self._store.connect() as conn:
            row = conn.execute("SELECT * FROM signals WHERE name = ?", (name,)).fetchone()
        if row is None:
            raise UnknownSignal(f"no signal named {name!r}")
        return Signal(id=row["id"], name=row["name"], unit=row["unit"], quantity=row["quantity"])

    def list_entities(self) -> list[Entity]:
        with self._store.connect() as conn:
            rows = conn.execute("SELECT * FROM entities ORDER BY id").fetchall()
        return [_row_entity(r) for r in rows]

    def list_signals(self) -> list[Signal]:
        with self._store.connect() as conn:
            rows = conn.execute("SELECT * FROM signals ORDER BY id").fetchall()
        return [
            Signal(id=r["id"], name=r["name"], unit=r["unit"], quantity=r["quantity"])
            for r in rows
        ]

    # --- series bindings ---

    def bind_timeseries(self, entity_name: str, signal_name: str) -> int:
        entity = self.get_entity(entity_name)
        signal = self.get_signal(signal_name)
        with self._store.connect() as conn:
            row = conn.execute(
                "SELECT id FROM series WHERE entity_id = ? AND signal_id = ?",
                (entity.id, signal.id),
            ).fetchone()
        if row is not None:
            raise AlreadyBound(f"({entity_name}, {signal_name}) already has a series")
        with self._store.write() as conn:
            cur = conn.execute(
                "INSERT INTO series (entity_id, signal_id) VALUES (?, ?)",
                (entity.id, signal.id),
            )
            return cur.lastrowid

    def series_id(self, entity_name: str, signal_name: str) -> int:
        entity = self.get_entity(entity_name)
        signal = self.get_signal(signal_name)
        with self._store.connect() as conn:
            row = conn.execute(
                "SELECT id FROM series WHERE entity_id = ? AND signal_id = ?",
                (entity.id, signal.id),
            ).fetchone()
        if row is None:
            raise UnknownContext(f"({entity_name}, {signal_name}) is not bound to a series")
        return row["id"]

    def context(self, entity_name: str, signal_name: str) -> Context:
        return Context(self.get_entity(entity_name), self.get_signal(signal_name))

    def require_bound_context(self, entity_name: str, signal_name: str) -> Context:
        try:
            ctx = self.context(entity_name, signal_name)
        except (UnknownEntity, UnknownSignal) as exc:
            raise UnknownContext(str(exc)) from exc
        self.series_id(entity_name, signal_name)
        return ctx

    # --- topology ---

    def add_topology_edge(self, parent_name: str, child_name: str, relation: str) -> int:
        parent = self.get_entity(parent_name)
        child = self.get_entity(child_name)
        if parent.id == child.id:
            raise SelfEdge(f"self-edge on {parent_name!r}")
        with self._store.connect() as conn:
            row = conn.execute(
                "SELECT id FROM topology WHERE parent_id = ? AND child_id = ? AND relation = ?",
                (parent.id, child.id, relation),
            ).fetchone()
        if row is not None:
            return row["id"]
        with self._store.write() as conn:
            cur = conn.execute(
                "INSERT INTO topology (parent_id, child_id, relation) VALUES (?, ?, ?)",
                (parent.id, child.id, relation),
            )
            return cur.lastrowid

    def descendants(self, entity_name: str) -> set[int]:
        """Transitive closure of topology children (all relation types),
        excluding the root itself."""
        root = self.get_entity(entity_name)
        with self._store.connect() as conn:
            rows = conn.execute("SELECT parent_id, child_id FROM topology").fetchall()
        children: dict[int, list[int]] = {}
        for r in rows:
            children.setdefault(r["parent_id"], []).append(r["child_id"])
        seen: set[int] = set()
        queue = deque(children.get(root.id, []))
        while queue:
            node = queue.popleft()
            if node in seen:
                continue
            seen.add(node)
            queue.extend(children.get(node, []))
        return seen

    # --- queries ---

    def query_contexts(
        self,
        entity_kind: str | None = None,
        signal_name: str | None = None,
        under_entity: str | None = None,
    ) -> list[Context]:
        under: set[int] | None = None
        if under_entity is not None:
            under = self.descendants(under_entity)
        with self._store.connect() as conn:
            rows = conn.execute(
                "SELECT e.id AS eid, s2.id AS sid FROM series ser "
                "JOIN entities e ON e.id = ser.entity_id "
                "JOIN signals s2 ON s2.id = ser.signal_id "
                "ORDER BY ser.id"
            ).fetchall()
            entities = {r["id"]: _row_entity(r) for r in conn.execute("SELECT * FROM entities")}
            signals = {
                r["id"]: Signal(id=r["id"], name=r["name"], unit=r["unit"], quantity=r["quantity"])
                for r in conn.execute("SELECT * FROM signals")
            }
        out: list[Context] = []
        for r in rows:
            entity = entities[r["eid"]]
            signal = signals[r["sid"]]
            if entity_kind is not None and entity.kind != entity_kind:
                continue
            if signal_name is not None and signal.name != signal_name:
                continue
            if under is not None and entity.id not in under:
                continue
            out.append(Context(entity, signal))
        return out

    def list_deployed_models(self, entity_name: str, signal_name: str) -> list[tuple[str, int]]:
        """Deployments registered against a bound context, as (model_id, rank)
        pairs ordered by rank (1 = best)."""
        ctx = self.require_bound_context(entity_name, signal_name)
        with self._store.connect() as conn:
            rows = conn.execute(
                "SELECT model_id FROM deployments WHERE entity_id = ? AND signal_id = ? "
                "ORDER BY seq",
                (ctx.entity.id, ctx.signal.id),
            ).fetchall()
            rank_row = conn.execute(
                "SELECT model_ids FROM rankings WHERE entity_id = ? AND signal_id = ?",
                (ctx.entity.id, ctx.signal.id),
            ).fetchone()
        deployed = [r["model_id"] for r in rows]
        if rank_row is not None:
            ranked = json.loads(rank_row["model_ids"])
            ordered = [m for m in ranked if m in deployed]
            ordered += [m for m in deployed if m not in ordered]
        else:
            ordered = deployed
        return [(model_id, i + 1) for i, model_id in enumerate(ordered)]
