"""Criterion registry: behavior criteria, focus-area grouping, metric validation.

The registry is loaded once from a TOML seed file and is immutable afterwards,
so concurrent reads need no locking.  The canonical serializer is byte-stable:
``serialize_registry(load_registry(seed)) == seed`` for seeds in canonical form.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class RegistryError(ValueError):
    """Seed file violates a registry invariant (duplicate id, bad reference...)."""


class MetricError(ValueError):
    """A raw metric violates its criterion's value domain or shape."""


class Direction(Enum):
    HIGHER_IS_BETTER = "higher_is_better"
    LOWER_IS_BETTER = "lower_is_better"


class MetricKind(Enum):
    COUNT = "count"
    PERCENTAGE = "percentage"
    BINARY = "binary"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class Criterion:
    id: str
    description: str
    focus_area: str
    direction: Direction
    kind: MetricKind
    active: bool = True
    # Sub-metric keys, composites only; the metric value is their mean.
    components: tuple[str, ...] = ()


@dataclass(frozen=True)
class FocusArea:
    id: str
    name: str
    criterion_ids: tuple[str, ...]


@dataclass(frozen=True)
class RawMetric:
    criterion_id: str
    value: float
    sub_values: Mapping[str, float] | None = None


@dataclass(frozen=True)
class SensorSnapshot:
    """One user-day of raw per-criterion measurements."""

    user_id: str
    day: int
    metrics: tuple[RawMetric, ...]
    received_at: tuple[int, int] | None = None  # (day, sequence) logical stamp


class Registry:
    """Immutable criterion/focus-area registry."""

    def __init__(self, focus_areas: Sequence[FocusArea], criteria: Sequence[Criterion]):
        self.focus_areas: tuple[FocusArea, ...] = tuple(focus_areas)
        self._areas = {a.id: a for a in self.focus_areas}
        if len(self._areas) != len(self.focus_areas):
            raise RegistryError("duplicate focus area id")
        self._criteria: dict[str, Criterion] = {}
        for c in criteria:
            if c.id in self._criteria:
                raise RegistryError(f"duplicate criterion id {c.id!r}")
            if c.focus_area not in self._areas:
                raise RegistryError(f"criterion {c.id!r} references unknown focus area {c.focus_area!r}")
            if c.kind is MetricKind.COMPOSITE and not c.components:
                raise RegistryError(f"composite criterion {c.id!r} declares no components")
            if c.kind is not MetricKind.COMPOSITE and c.components:
                raise RegistryError(f"non-composite criterion {c.id!r} declares components")
            self._criteria[c.id] = c
        # Focus areas must partition the criterion set.
        seen: set[str] = set()
        for area in self.focus_areas:
            for cid in area.criterion_ids:
                if cid not in self._criteria:
                    raise RegistryError(f"focus area {area.id!r} lists unknown criterion {cid!r}")
                if self._criteria[cid].focus_area != area.id:
                    raise RegistryError(f"criterion {cid!r} assigned to two focus areas")
                if cid in seen:
                    raise RegistryError(f"criterion {cid!r} listed twice")
                seen.add(cid)
        if seen != set(self._criteria):
            missing = sorted(set(self._criteria) - seen)
            raise RegistryError(f"criteria not listed in any focus area: {missing}")

    @property
    def criteria(self) -> tuple[Criterion, ...]:
        """Criteria in canonical order: focus-area order, then in-area order."""
        return tuple(self._criteria[cid]
                     for area in self.focus_areas
                     for cid in area.criterion_ids)

    def criterion(self, criterion_id: str) -> Criterion:
        try:
            return self._criteria[criterion_id]
        except KeyError:
            raise RegistryError(f"unknown criterion {criterion_id!r}") from None

    def has(self, criterion_id: str) -> bool:
        return criterion_id in self._criteria

    def area(self, area_id: str) -> FocusArea:
        try:
            return self._areas[area_id]
        except KeyError:
            raise RegistryError(f"unknown focus area {area_id!r}") from None

    def active_criteria(self) -> tuple[Criterion, ...]:
        return tuple(c for c in self.criteria if c.active)

    def deactivate(self, criterion_ids: Iterable[str]) -> "Registry":
        """New registry with the given criteria flagged inactive."""
        drop = set(criterion_ids)
        return Registry(
            self.focus_areas,
            [replace(c, active=False) if c.id in drop else c for c in self.criteria],
        )


def default_seed_path() -> Path:
    return Path(__file__).parent / "data" / "taxonomy.toml"


def load_registry(source: str | Path | bytes | None = None) -> Registry:
    """Load the registry from a TOML seed (default: the packaged seed)."""
    if source is None:
        source = default_seed_path()
    if isinstance(source, bytes):
        data = tomllib.load(io.BytesIO(source))
    else:
        with open(source, "rb") as fh:
            data = tomllib.load(fh)
    try:
        area_items = data["focus_areas"]
        criterion_items = data["criteria"]
    except KeyError as exc:
        raise RegistryError(f"seed missing section {exc}") from None
    areas = [FocusArea(id=aid, name=spec["name"], criterion_ids=tuple(spec["criteria"]))
             for aid, spec in area_items.items()]
    criteria = []
    for cid, spec in criterion_items.items():
        try:
            criteria.append(Criterion(
                id=cid,
                description=spec["description"],
                focus_area=spec["focus_area"],
                direction=Direction(spec["direction"]),
                kind=MetricKind(spec["kind"]),
                active=spec.get("active", True),
                components=tuple(spec.get("components", ())),
            ))
        except (KeyError, ValueError) as exc:
            raise RegistryError(f"criterion {cid!r}: {exc}") from None
    return Registry(areas, criteria)


def serialize_registry(registry: Registry) -> bytes:
    """Canonical, byte-stable TOML form of a registry."""
    out = ["schema = 1\n"]
    for area in registry.focus_areas:
        ids = ", ".join(f'"{cid}"' for cid in area.criterion_ids)
        out.append(f'\n[focus_areas.{area.id}]\nname = "{area.name}"\ncriteria = [{ids}]\n')
    for c in registry.criteria:
        out.append(f'\n[criteria.{c.id}]\n'
                   f'description = "{c.description}"\n'
                   f'focus_area = "{c.focus_area}"\n'
                   f'direction = "{c.direction.value}"\n'
                   f'kind = "{c.kind.value}"\n')
        if c.components:
            comps = ", ".join(f'"{k}"' for k in c.components)
            out.append(f'components = [{comps}]\n')
        out.append(f'active = {"true" if c.active else "false"}\n')
    return "".join(out).encode("utf-8")


def normalize_composite(criterion: Criterion, sub_values: Mapping[str, float]) -> RawMetric:
    """Collapse a composite's sub-metrics into one value (their arithmetic mean)."""
    if criterion.kind is not MetricKind.COMPOSITE:
        raise MetricError(f"{criterion.id} is not a composite criterion")
    missing = [k for k in criterion.components if k not in sub_values]
    if missing:
        raise MetricError(f"{criterion.id}: missing sub-metric {missing[0]!r}")
    vals = [float(sub_values[k]) for k in criterion.components]
    return RawMetric(criterion_id=criterion.id,
                     value=sum(vals) / len(vals),
                     sub_values={k: float(sub_values[k]) for k in criterion.components})


def _check_domain(criterion: Criterion, value: float) -> str | None:
    # Returns a problem description, or None when the value is in-domain.
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        return f"value {value!r} is not numeric"
    if value != value:  # NaN
        return "value is NaN"
    if criterion.kind is MetricKind.COUNT:
        if value < 0 or float(value) != int(value):
            return f"count must be a non-negative integer, got {value}"
    elif criterion.kind is MetricKind.PERCENTAGE:
        if not 0.0 <= value <= 100.0:
            return f"percentage must lie in [0, 100], got {value}"
    elif criterion.kind is MetricKind.BINARY:
        if value not in (0, 1):
            return f"binary must be 0 or 1, got {value}"
    else:  # COMPOSITE values are means of percentages
        if not 0.0 <= value <= 100.0:
            return f"composite value must lie in [0, 100], got {value}"
    return None


@dataclass
class SnapshotReport:
    """Validation outcome for one snapshot; never drops data silently."""

    valid: bool
    normalized: tuple[RawMetric, ...] = ()
    problems: list[str] = field(default_factory=list)
    unknown: list[str] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "problems": list(self.problems),
            "unknown_criteria": list(self.unknown),
            "missing_criteria": list(self.missing),
        }


def validate_snapshot(snapshot: SensorSnapshot, registry: Registry) -> SnapshotReport:
    """Check every metric against its criterion's kind and range.

    Composites are normalized here (value := mean of sub-metrics).  Missing
    active criteria are reported but do not invalidate the snapshot; scoring
    handles them by carry-forward.
    """
    report = SnapshotReport(valid=True)
    normalized: list[RawMetric] = []
    seen: set[str] = set()
    for metric in snapshot.metrics:
        cid = metric.criterion_id
        if not registry.has(cid):
            report.unknown.append(cid)
            report.valid = False
            continue
        if cid in seen:
            report.problems.append(f"{cid}: duplicate metric in snapshot")
            report.valid = False
            continue
        seen.add(cid)
        criterion = registry.criterion(cid)
        if criterion.kind is MetricKind.COMPOSITE:
            try:
                metric = normalize_composite(criterion, metric.sub_values or {})
            except MetricError as exc:
                report.problems.append(str(exc))
                report.valid = False
                continue
            bad = next((f"{cid}.{k}: {p}" for k, v in (metric.sub_values or {}).items()
                        if (p := _check_domain(replace(criterion, kind=MetricKind.PERCENTAGE), v))),
                       None)
            if bad:
                report.problems.append(bad)
                report.valid = False
                continue
        problem = _check_domain(criterion, metric.value)
        if problem:
            report.problems.append(f"{cid}: {problem}")
            report.valid = False
            continue
        normalized.append(metric)
    report.missing = [c.id for c in registry.active_criteria() if c.id not in seen]
    report.normalized = tuple(normalized)
    return report
