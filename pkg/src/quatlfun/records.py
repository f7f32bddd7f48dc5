"""Fixture records: newforms, elliptic curves and digest rows as
line-delimited JSON, with schema validation and an offline-first cache in
front of the public modular-forms database.

All algebraic numbers are serialized as (order, coefficient list)
cyclotomic tuples with rational coefficients in "num/den" strings, so
exactness survives a round-trip.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from fractions import Fraction
from math import prod

from .exactfield import CyclotomicNumber

SCHEMA_VERSION = 1

PROJECTIVE_TYPES = ("dihedral", "A4", "S4", "A5", "none")


def cyclo_to_json(x: CyclotomicNumber) -> list:
    return [x.order, [str(c) for c in x.coeffs]]


def cyclo_from_json(data) -> CyclotomicNumber:
    order, coeffs = data
    return CyclotomicNumber(int(order), [Fraction(c) for c in coeffs])


class SchemaError(ValueError):
    """One or more fixture lines violated the schema; carries the list of
    (line number, message) pairs."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(f"line {n}: {msg}"
                                   for n, msg in self.violations))


@dataclass(frozen=True)
class NewformRecord:
    """A holomorphic newform as shipped in the fixtures: exact Hecke
    eigenvalues at the primes up to ap_bound, and the invariants the digest
    predicates consume."""

    label: str
    level: int
    level_factorization: tuple  # ((q, e), ...)
    weight: int
    char_order: int
    char_conductor: int
    coefficient_field: str
    ap: dict  # prime -> CyclotomicNumber
    ap_bound: int
    cm_discriminant: int | None
    projective_type: str
    twist_minimal: dict  # prime -> bool

    def supercuspidal_primes(self) -> list:
        """Primes where the local component has conductor exponent 2 and
        the form is twist-minimal: the marked primes of the digest."""
        return [q for q, e in self.level_factorization
                if e == 2 and self.twist_minimal.get(q, False)]


@dataclass(frozen=True)
class CurveRecord:
    """An elliptic curve over Q by its minimal Weierstrass coefficients."""

    label: str
    conductor: int
    conductor_factorization: tuple
    ainvs: tuple


@dataclass(frozen=True)
class DigestRow:
    """One row of the example digest: a rational elliptic curve paired with
    a weight-one theta series (h = g* throughout the shipped rows).

    The rank pattern is carried verbatim from the source as informational
    text and is never recomputed or asserted.  The expected hypothesis
    flags record which predicates the row is stated to satisfy.
    """

    table: int
    row: int
    curve_label: str
    g_label: str
    h_label: str  # "g*" marks the conjugate form
    curve_sc_primes: tuple
    g_sc_primes: tuple
    rank_pattern: str
    cm_discriminant: int
    ring_class_conductor: int
    p: int
    expect_a_prime: bool
    expect_b_prime: bool
    expect_c: bool
    expect_c_prime: bool


def _require(obj, keys):
    return [k for k in keys if k not in obj]


def _parse_newform(obj):
    missing = _require(obj, ("label", "level", "level_factorization",
                             "weight", "char_order", "char_conductor",
                             "coefficient_field", "ap", "ap_bound",
                             "projective_type", "twist_minimal"))
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    fac = tuple((int(q), int(e)) for q, e in obj["level_factorization"])
    level = int(obj["level"])
    if prod(q ** e for q, e in fac) != level:
        raise ValueError("level_factorization does not multiply to level")
    if obj["projective_type"] not in PROJECTIVE_TYPES:
        raise ValueError(f"unknown projective_type {obj['projective_type']}")
    ap = {int(p): cyclo_from_json(v) for p, v in obj["ap"].items()}
    bound = int(obj["ap_bound"])
    absent = [p for p in _primes_upto(bound) if p not in ap]
    if absent:
        raise ValueError(f"ap missing for primes {absent} below the bound")
    return NewformRecord(
        label=obj["label"], level=level, level_factorization=fac,
        weight=int(obj["weight"]), char_order=int(obj["char_order"]),
        char_conductor=int(obj["char_conductor"]),
        coefficient_field=obj["coefficient_field"], ap=ap, ap_bound=bound,
        cm_discriminant=obj.get("cm_discriminant"),
        projective_type=obj["projective_type"],
        twist_minimal={int(q): bool(v)
                       for q, v in obj["twist_minimal"].items()})


def _parse_curve(obj):
    missing = _require(obj, ("label", "conductor", "conductor_factorization",
                             "ainvs"))
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    fac = tuple((int(q), int(e)) for q, e in obj["conductor_factorization"])
    conductor = int(obj["conductor"])
    if prod(q ** e for q, e in fac) != conductor:
        raise ValueError("conductor_factorization does not multiply to "
                         "conductor")
    return CurveRecord(label=obj["label"], conductor=conductor,
                       conductor_factorization=fac,
                       ainvs=tuple(int(a) for a in obj["ainvs"]))


def _parse_digest_row(obj):
    missing = _require(obj, ("table", "row", "curve_label", "g_label",
                             "h_label", "curve_sc_primes", "g_sc_primes",
                             "rank_pattern", "cm_discriminant",
                             "ring_class_conductor", "p", "expect_a_prime",
                             "expect_b_prime", "expect_c", "expect_c_prime"))
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    return DigestRow(
        table=int(obj["table"]), row=int(obj["row"]),
        curve_label=obj["curve_label"], g_label=obj["g_label"],
        h_label=obj["h_label"],
        curve_sc_primes=tuple(int(q) for q in obj["curve_sc_primes"]),
        g_sc_primes=tuple(int(q) for q in obj["g_sc_primes"]),
        rank_pattern=obj["rank_pattern"],
        cm_discriminant=int(obj["cm_discriminant"]),
        ring_class_conductor=int(obj["ring_class_conductor"]),
        p=int(obj["p"]), expect_a_prime=bool(obj["expect_a_prime"]),
        expect_b_prime=bool(obj["expect_b_prime"]),
        expect_c=bool(obj["expect_c"]),
        expect_c_prime=bool(obj["expect_c_prime"]))


_PARSERS = {"newform": _parse_newform, "elliptic_curve": _parse_curve,
            "digest_row": _parse_digest_row}


def _primes_upto(n: int):
    sieve = bytearray(n + 1)
    out = []
    for p in range(2, n + 1):
        if not sieve[p]:
            out.append(p)
            for m in range(p * p, n + 1, p):
                sieve[m] = 1
    return out


def ingest_records(path) -> list:
    """Parse a line-delimited JSON fixture file into records, collecting
    all schema violations with their line numbers before failing."""
    records, violations = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                violations.append((lineno, f"invalid JSON: {exc.msg}"))
                continue
            if obj.get("schema_version") != SCHEMA_VERSION:
                violations.append(
                    (lineno, f"schema_version {obj.get('schema_version')} "
                             f"!= {SCHEMA_VERSION}"))
                continue
            parser = _PARSERS.get(obj.get("kind"))
            if parser is None:
                violations.append((lineno, f"unknown kind {obj.get('kind')}"))
                continue
            try:
                records.append(parser(obj))
            except (ValueError, KeyError, TypeError) as exc:
                violations.append((lineno, str(exc)))
    if violations:
        raise SchemaError(violations)
    return records


def record_to_json(rec) -> str:
    """Serialize a record back to its fixture line (deterministic)."""
    if isinstance(rec, NewformRecord):
        obj = {
            "kind": "newform", "label": rec.label, "level": rec.level,
            "level_factorization": [list(t) for t in rec.level_factorization],
            "weight": rec.weight, "char_order": rec.char_order,
            "char_conductor": rec.char_conductor,
            "coefficient_field": rec.coefficient_field,
            "ap": {str(p): cyclo_to_json(v)
                   for p, v in sorted(rec.ap.items())},
            "ap_bound": rec.ap_bound,
            "cm_discriminant": rec.cm_discriminant,
            "projective_type": rec.projective_type,
            "twist_minimal": {str(q): v
                              for q, v in sorted(rec.twist_minimal.items())},
        }
    elif isinstance(rec, CurveRecord):
        obj = {
            "kind": "elliptic_curve", "label": rec.label,
            "conductor": rec.conductor,
            "conductor_factorization":
                [list(t) for t in rec.conductor_factorization],
            "ainvs": list(rec.ainvs),
        }
    elif isinstance(rec, DigestRow):
        obj = {
            "kind": "digest_row", "table": rec.table, "row": rec.row,
            "curve_label": rec.curve_label, "g_label": rec.g_label,
            "h_label": rec.h_label,
            "curve_sc_primes": list(rec.curve_sc_primes),
            "g_sc_primes": list(rec.g_sc_primes),
            "rank_pattern": rec.rank_pattern,
            "cm_discriminant": rec.cm_discriminant,
            "ring_class_conductor": rec.ring_class_conductor, "p": rec.p,
            "expect_a_prime": rec.expect_a_prime,
            "expect_b_prime": rec.expect_b_prime,
            "expect_c": rec.expect_c, "expect_c_prime": rec.expect_c_prime,
        }
    else:
        raise TypeError(f"cannot serialize {type(rec).__name__}")
    obj["schema_version"] = SCHEMA_VERSION
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# shipped fixtures and the remote cache
# ---------------------------------------------------------------------------


FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURE_DIR, name)


def shipped_records() -> list:
    """All records from the fixture files shipped with the package."""
    out = []
    for name in sorted(os.listdir(FIXTURE_DIR)):
        if name.endswith(".jsonl"):
            out.extend(ingest_records(fixture_path(name)))
    return out


def shipped_newform(label: str) -> NewformRecord:
    for rec in shipped_records():
        if isinstance(rec, NewformRecord) and rec.label == label:
            return rec
    raise KeyError(f"no shipped fixture for {label}")


def shipped_curve(label: str) -> CurveRecord:
    for rec in shipped_records():
        if isinstance(rec, CurveRecord) and rec.label == label:
            return rec
    raise KeyError(f"no shipped fixture for {label}")


def shipped_digest_rows(table: int | None = None) -> list:
    rows = [rec for rec in shipped_records() if isinstance(rec, DigestRow)]
    if table is not None:
        rows = [r for r in rows if r.table == table]
    return sorted(rows, key=lambda r: (r.table, r.row))


@dataclass
class RunConfig:
    """Plumbing knobs shared by the CLI commands."""

    cache_dir: str = field(default_factory=lambda: os.environ.get(
        "CACHE_DIR", os.path.join(os.path.expanduser("~"), ".cache",
                                  "quatlfun")))
    offline: bool = False
    truncation: int | None = None
    threads: int = 1
    format: str = "text"
    remote_base: str = "https://example.invalid/quatlfun-fixtures"


class RemoteUnavailable(RuntimeError):
    """The remote database could not be reached; safe to retry."""


class UnknownLabel(KeyError):
    """The requested label does not exist."""


def _cache_write(path: str, text: str):
    """Atomic exclusive write: concurrent fetchers race on the rename, and
    the loser's identical content is discarded."""
    os.makedirs(os.path.dirname(path), exist_ok=True)
    tmp = path + f".tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def fetch_remote(labels, config: RunConfig) -> list:
    """Records for the given newform labels, from the cache when present.

    Cache misses consult the remote database (never when config.offline)
    and persist the response in the fixture schema, so a re-run is a pure
    cache hit."""
    out = []
    for label in labels:
        cached = os.path.join(config.cache_dir, f"{label}.jsonl")
        if os.path.exists(cached):
            out.extend(ingest_records(cached))
            continue
        if config.offline:
            raise RemoteUnavailable(
                f"{label} is not cached and the run is offline")
        recs = _fetch_one(label, config)
        _cache_write(cached,
                     "".join(record_to_json(r) + "\n" for r in recs))
        out.extend(ingest_records(cached))
    return out


def _fetch_one(label: str, config: RunConfig) -> list:
    """One label from the remote fixture mirror, parsed through the same
    versioned schema as local files (drift raises SchemaError)."""
    url = f"{config.remote_base}/{label}.jsonl"
    try:
        with urllib.request.urlopen(url, timeout=30) as resp:
            body = resp.read().decode("utf-8")
    except urllib.error.HTTPError as exc:
        if exc.code == 404:
            raise UnknownLabel(label) from exc
        raise RemoteUnavailable(f"HTTP {exc.code} fetching {label}") from exc
    except (urllib.error.URLError, OSError, TimeoutError) as exc:
        raise RemoteUnavailable(f"cannot reach remote for {label}: "
                                f"{exc}") from exc
    records, violations = [], []
    for lineno, line in enumerate(body.splitlines(), 1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj.get("schema_version") != SCHEMA_VERSION:
            violations.append(
                (lineno, f"schema_version {obj.get('schema_version')} != "
                         f"{SCHEMA_VERSION}"))
            continue
        records.append(_PARSERS[obj["kind"]](obj))
    if violations:
        raise SchemaError(violations)
    if not records:
        raise UnknownLabel(label)
    return records
