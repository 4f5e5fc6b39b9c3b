"""Firm registry ingestion, size classes and wide-band coverage joins."""

from __future__ import annotations

import csv
import dataclasses
import enum
import functools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping
from urllib.parse import urlsplit

from .errors import ConfigError, DataError

MACRO_REGIONS = ("North", "Centre", "South")

# logical field -> default column name in the registry file
DEFAULT_SCHEMA: dict[str, str] = {
    "firm_id": "firm_id",
    "homepage_url": "url",
    "nace_section": "nace",
    "employees": "employees",
    "founding_year": "founding_year",
    "nuts3_code": "nuts3",
    "municipality_code": "municipality",
    "macro_region": "macro_region",
    "urban_pole": "urban_pole",
}
OPTIONAL_FIELDS = {"wideband_share"}


@functools.total_ordering
class SizeClass(enum.Enum):
    MICRO = "Micro"
    SMALL = "Small"
    MEDIUM = "Medium"
    LARGE = "Large"

    @property
    def rank(self) -> int:
        return list(SizeClass).index(self)

    def __lt__(self, other):
        if not isinstance(other, SizeClass):
            return NotImplemented
        return self.rank < other.rank


def classify_size(employees: int) -> SizeClass:
    """Micro < 10 <= Small < 50 <= Medium < 250 <= Large."""
    if employees < 0:
        raise ValueError(f"employees must be nonnegative, got {employees}")
    if employees < 10:
        return SizeClass.MICRO
    if employees < 50:
        return SizeClass.SMALL
    if employees < 250:
        return SizeClass.MEDIUM
    return SizeClass.LARGE


@dataclass(frozen=True)
class FirmRecord:
    firm_id: str
    homepage_url: str
    nace_section: str
    nuts3_code: str
    municipality_code: str
    macro_region: str
    urban_pole: bool
    employees: int | None = None
    founding_year: int | None = None
    wideband_share: float | None = None

    def __post_init__(self):
        parts = urlsplit(self.homepage_url)
        if parts.scheme not in ("http", "https") or not parts.hostname:
            raise ValueError(f"not an absolute http(s) URL: {self.homepage_url!r}")
        if self.macro_region not in MACRO_REGIONS:
            raise ValueError(f"macro_region must be one of {MACRO_REGIONS}, got {self.macro_region!r}")
        if self.wideband_share is not None and not 0.0 <= self.wideband_share <= 1.0:
            raise ValueError(f"wideband_share outside [0,1]: {self.wideband_share}")
        if self.employees is not None and self.employees < 0:
            raise ValueError(f"negative employees: {self.employees}")

    @property
    def size_class(self) -> SizeClass | None:
        return None if self.employees is None else classify_size(self.employees)


@dataclass
class Reject:
    line: int
    reason: str
    row: dict


@dataclass
class LoadReport:
    records: list[FirmRecord] = field(default_factory=list)
    rejects: list[Reject] = field(default_factory=list)
    # firm_id -> note, for rows accepted after normalization
    notes: dict[str, str] = field(default_factory=dict)

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)


def normalize_url(raw: str) -> tuple[str, str | None]:
    """Default a missing scheme to http://. Returns (url, note or None)."""
    url = raw.strip()
    if "://" not in url:
        return "http://" + url.lstrip("/"), f"scheme defaulted to http:// for {raw!r}"
    return url, None


def _parse_int(text: str, what: str) -> int | None:
    text = text.strip()
    if text == "":
        return None
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"non-numeric {what}") from None
    if value != int(value):
        raise ValueError(f"non-integer {what}")
    return int(value)


def _parse_bool(text: str) -> bool:
    text = text.strip().lower()
    if text in ("1", "true", "yes", "y"):
        return True
    if text in ("0", "false", "no", "n", ""):
        return False
    raise ValueError(f"non-boolean urban_pole {text!r}")


def _record_from_row(row: Mapping[str, str], schema: Mapping[str, str]) -> tuple[FirmRecord, str | None]:
    get = lambda name: (row.get(schema[name]) or "").strip()  # noqa: E731
    firm_id = get("firm_id")
    if not firm_id:
        raise ValueError("empty firm_id")
    url, note = normalize_url(get("homepage_url"))
    nace = get("nace_section").upper()
    if len(nace) != 1 or not "A" <= nace <= "U":
        raise ValueError(f"invalid NACE section {nace!r}")
    region = get("macro_region").capitalize()
    wideband = None
    if "wideband_share" in schema and row.get(schema["wideband_share"], "").strip():
        try:
            wideband = float(row[schema["wideband_share"]])
        except ValueError:
            raise ValueError("non-numeric wideband_share") from None
    record = FirmRecord(
        firm_id=firm_id,
        homepage_url=url,
        nace_section=nace,
        nuts3_code=get("nuts3_code"),
        municipality_code=get("municipality_code"),
        macro_region=region,
        urban_pole=_parse_bool(get("urban_pole")),
        employees=_parse_int(get("employees"), "employees"),
        founding_year=_parse_int(get("founding_year"), "founding_year"),
        wideband_share=wideband,
    )
    return record, note


def load_firms(path, schema: Mapping[str, str] | None = None, delimiter: str = ",") -> LoadReport:
    """Read a delimited registry file with a header row.

    `schema` remaps logical field names to column names; unspecified fields keep
    their default column. Malformed rows land in ``report.rejects``.
    """
    mapping = dict(DEFAULT_SCHEMA)
    if schema:
        mapping.update(schema)
    path = Path(path)
    report = LoadReport()
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        for name, column in mapping.items():
            if name not in OPTIONAL_FIELDS and column not in header:
                raise ConfigError(f"registry {path} is missing required column {column!r}")
        if "wideband_share" not in mapping and "wideband_share" in header:
            mapping["wideband_share"] = "wideband_share"
        seen: set[str] = set()
        for line, row in enumerate(reader, start=2):
            try:
                record, note = _record_from_row(row, mapping)
                if record.firm_id in seen:
                    raise ValueError(f"duplicate firm_id {record.firm_id!r}")
            except ValueError as exc:
                report.rejects.append(Reject(line, str(exc), dict(row)))
                continue
            seen.add(record.firm_id)
            report.records.append(record)
            if note:
                report.notes[record.firm_id] = note
    return report


def write_firms(records: Iterable[FirmRecord], path, delimiter: str = ",") -> None:
    """Serialize records in the default column layout (plus wideband_share)."""
    columns = list(DEFAULT_SCHEMA.values()) + ["wideband_share"]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(columns)
        for r in records:
            writer.writerow([
                r.firm_id, r.homepage_url, r.nace_section,
                "" if r.employees is None else r.employees,
                "" if r.founding_year is None else r.founding_year,
                r.nuts3_code, r.municipality_code, r.macro_region,
                int(r.urban_pole),
                "" if r.wideband_share is None else repr(r.wideband_share),
            ])


def load_coverage(path, delimiter: str = ",") -> dict[str, float]:
    """Read a municipality,share file into a dict."""
    coverage: dict[str, float] = {}
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        for column in ("municipality", "share"):
            if column not in (reader.fieldnames or []):
                raise ConfigError(f"coverage file {path} is missing column {column!r}")
        for line, row in enumerate(reader, start=2):
            try:
                coverage[row["municipality"].strip()] = float(row["share"])
            except ValueError:
                raise DataError(f"coverage row {line}: non-numeric share {row['share']!r}") from None
    return coverage


@dataclass
class JoinReport:
    matched: int = 0
    unmatched: int = 0
    unmatched_ids: list[str] = field(default_factory=list)


def join_wideband(firms: Iterable[FirmRecord], coverage: Mapping[str, float]) -> tuple[list[FirmRecord], JoinReport]:
    for key, share in coverage.items():
        if not 0.0 <= share <= 1.0:
            raise DataError(f"coverage for municipality {key!r} outside [0,1]: {share}")
    report = JoinReport()
    out = []
    for firm in firms:
        share = coverage.get(firm.municipality_code)
        if share is None:
            report.unmatched += 1
            report.unmatched_ids.append(firm.firm_id)
            out.append(firm)
        else:
            report.matched += 1
            out.append(dataclasses.replace(firm, wideband_share=float(share)))
    return out, report
