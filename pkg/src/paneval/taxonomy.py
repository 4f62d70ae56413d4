"""Class taxonomy: thing/stuff kinds, known/unknown split, name aliasing."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

KINDS = ("thing", "stuff")
SPLITS = ("known", "unknown")
SUBSETS = ("all", "thing", "stuff", "known", "unknown")


def _normalize(name: str) -> str:
    return " ".join(name.casefold().split())


@dataclass(frozen=True)
class ClassDef:
    name: str
    id: int
    kind: str
    split: str


@dataclass(frozen=True)
class Taxonomy:
    classes: tuple[ClassDef, ...]
    aliases: dict = field(default_factory=dict)

    def __post_init__(self):
        by_name = {c.name: c for c in self.classes}
        norm = {_normalize(c.name): c.name for c in self.classes}
        norm_aliases = {_normalize(k): v for k, v in self.aliases.items()}
        object.__setattr__(self, "_by_name", by_name)
        object.__setattr__(self, "_norm_names", norm)
        object.__setattr__(self, "_norm_aliases", norm_aliases)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> ClassDef:
        try:
            return self._by_name[name]
        except KeyError:
            raise ValidationError("unknown-class", f"class {name!r} is not in the taxonomy")

    def is_thing(self, name: str) -> bool:
        return self.get(name).kind == "thing"

    def is_stuff(self, name: str) -> bool:
        return self.get(name).kind == "stuff"

    def resolve(self, raw: str) -> str | None:
        """Canonical class name for a possibly aliased/free-form name."""
        if raw in self._by_name:
            return raw
        key = _normalize(raw)
        if key in self._norm_names:
            return self._norm_names[key]
        if key in self._norm_aliases:
            return self._norm_aliases[key]
        return None

    def in_subset(self, name: str, subset: str) -> bool:
        if subset == "all":
            return True
        c = self.get(name)
        if subset in KINDS:
            return c.kind == subset
        if subset in SPLITS:
            return c.split == subset
        raise ValidationError("bad-subset", f"unknown subset {subset!r}, expected one of {SUBSETS}")

    def names(self, subset: str = "all") -> tuple[str, ...]:
        return tuple(c.name for c in self.classes if self.in_subset(c.name, subset))


def check_subset(subset: str) -> str:
    if subset not in SUBSETS:
        raise ValidationError("bad-subset", f"unknown subset {subset!r}, expected one of {SUBSETS}")
    return subset


def taxonomy_from_json(obj: dict, where: dict | None = None) -> Taxonomy:
    """Build and validate a Taxonomy from its JSON object form."""
    where = where or {}
    if not isinstance(obj, dict) or "classes" not in obj:
        raise ValidationError("bad-taxonomy", "taxonomy JSON must be an object with a 'classes' list", where)
    classes: list[ClassDef] = []
    seen_names: set[str] = set()
    seen_ids: set[int] = set()
    for i, entry in enumerate(obj["classes"]):
        ctx = dict(where, index=i)
        try:
            name = str(entry["name"])
            cid = int(entry["id"])
            kind = str(entry["kind"])
            split = str(entry["split"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError("bad-taxonomy", f"class entry {i} is malformed: {exc}", ctx) from exc
        if name in seen_names:
            raise ValidationError("duplicate-name", f"duplicate class name {name!r}", ctx)
        if cid in seen_ids:
            raise ValidationError("duplicate-id", f"duplicate class id {cid}", ctx)
        if kind not in KINDS:
            raise ValidationError("bad-kind", f"class {name!r} has kind {kind!r}, expected thing|stuff", ctx)
        if split not in SPLITS:
            raise ValidationError("bad-split", f"class {name!r} has split {split!r}, expected known|unknown", ctx)
        seen_names.add(name)
        seen_ids.add(cid)
        classes.append(ClassDef(name, cid, kind, split))
    kinds = {c.kind for c in classes}
    if "thing" not in kinds or "stuff" not in kinds:
        raise ValidationError("missing-kind", "taxonomy needs at least one thing and one stuff class", where)
    aliases = obj.get("aliases", {})
    if not isinstance(aliases, dict):
        raise ValidationError("bad-taxonomy", "'aliases' must be an object", where)
    for raw, target in aliases.items():
        if target not in seen_names:
            raise ValidationError(
                "unknown-alias-target", f"alias {raw!r} points at unknown class {target!r}", where
            )
    return Taxonomy(tuple(classes), dict(aliases))


def load_taxonomy(path: str | Path) -> Taxonomy:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError("bad-taxonomy", f"cannot read taxonomy {path}: {exc}", {"file": str(path)}) from exc
    return taxonomy_from_json(obj, {"file": str(path)})
