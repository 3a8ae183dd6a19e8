"""CVSS-derived vulnerability data and exploit-success probabilities."""

from __future__ import annotations

import json
import logging
from collections.abc import Mapping
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterator, List, Union

logger = logging.getLogger(__name__)

Document = Union[str, bytes, Mapping, List[Any]]


class CatalogError(Exception):
    """Raised when a vulnerability catalog or success model document is invalid."""


class AccessComplexity(Enum):
    """CVSS access complexity, ordered from easiest to hardest."""

    EASY = "EASY"
    MEDIUM = "MEDIUM"
    HIGH = "HIGH"

    @classmethod
    def parse(cls, value: Any) -> "AccessComplexity":
        try:
            return cls(str(value).strip().upper())
        except ValueError as exc:
            raise CatalogError(
                f"Unknown access complexity {value!r}; expected EASY, MEDIUM or HIGH."
            ) from exc


@dataclass(frozen=True, slots=True)
class Vulnerability:
    """A catalogued CVE with its CIA impact score and access complexity."""

    cve_id: str
    impact: float
    access_complexity: AccessComplexity

    def __post_init__(self) -> None:
        if not 0.0 <= self.impact <= 10.0:
            raise CatalogError(
                f"Impact of {self.cve_id} must lie in [0, 10], got {self.impact}."
            )


@dataclass(frozen=True, slots=True)
class ExploitSuccessModel:
    """Maps access complexity to the probability that an unmonitored exploit succeeds."""

    easy: float = 0.8
    medium: float = 0.5
    high: float = 0.2

    def __post_init__(self) -> None:
        for name in ("easy", "medium", "high"):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise CatalogError(f"Success probability {name}={value} must lie in (0, 1).")
        if not self.easy > self.medium > self.high:
            raise CatalogError("Success probabilities must satisfy easy > medium > high.")

    def probability(self, complexity: AccessComplexity) -> float:
        return {
            AccessComplexity.EASY: self.easy,
            AccessComplexity.MEDIUM: self.medium,
            AccessComplexity.HIGH: self.high,
        }[complexity]


class VulnerabilityCatalog(Mapping):
    """Immutable CVE id -> `Vulnerability` lookup."""

    def __init__(self, vulnerabilities: Dict[str, Vulnerability]) -> None:
        self._entries = dict(sorted(vulnerabilities.items()))

    def __getitem__(self, cve_id: str) -> Vulnerability:
        return self._entries[cve_id]

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)

    def __repr__(self) -> str:
        return f"VulnerabilityCatalog({list(self._entries)})"


def _decode(document: Document) -> Any:
    if isinstance(document, (str, bytes)):
        try:
            return json.loads(document)
        except json.JSONDecodeError as exc:
            raise CatalogError(f"Malformed document: {exc}") from exc
    return document


def load_catalog(document: Document) -> VulnerabilityCatalog:
    """Load a catalog from an array of `{cve, impact, ac}` records."""

    payload = _decode(document)
    if not isinstance(payload, list):
        raise CatalogError("Catalog document must be an array of {cve, impact, ac} records.")

    entries: Dict[str, Vulnerability] = {}
    for index, record in enumerate(payload):
        if not isinstance(record, Mapping):
            raise CatalogError(f"Catalog entry [{index}] must be an object.")
        missing = [key for key in ("cve", "impact", "ac") if key not in record]
        if missing:
            raise CatalogError(f"Catalog entry [{index}] is missing {', '.join(missing)}.")
        cve_id = str(record["cve"])
        if cve_id in entries:
            raise CatalogError(f"Duplicate catalog entry for {cve_id} at [{index}].")
        try:
            impact = float(record["impact"])
        except (TypeError, ValueError) as exc:
            raise CatalogError(f"Catalog entry [{index}] has a non-numeric impact.") from exc
        entries[cve_id] = Vulnerability(
            cve_id=cve_id,
            impact=impact,
            access_complexity=AccessComplexity.parse(record["ac"]),
        )

    logger.debug("Loaded %d catalog entries", len(entries))
    return VulnerabilityCatalog(entries)


def load_success_model(document: Document) -> ExploitSuccessModel:
    """Load an `{easy, medium, high}` success-probability override."""

    payload = _decode(document)
    if not isinstance(payload, Mapping):
        raise CatalogError("Success model document must be an object.")
    try:
        return ExploitSuccessModel(
            easy=float(payload.get("easy", 0.8)),
            medium=float(payload.get("medium", 0.5)),
            high=float(payload.get("high", 0.2)),
        )
    except (TypeError, ValueError) as exc:
        raise CatalogError("Success probabilities must be numbers.") from exc


def success_probability(model: ExploitSuccessModel, vulnerability: Vulnerability) -> float:
    return model.probability(vulnerability.access_complexity)


__all__ = [
    "AccessComplexity",
    "CatalogError",
    "ExploitSuccessModel",
    "Vulnerability",
    "VulnerabilityCatalog",
    "load_catalog",
    "load_success_model",
    "success_probability",
]
