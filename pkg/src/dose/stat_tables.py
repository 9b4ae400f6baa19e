"""Per-sample statistic tables: schema, validation, and CSV + manifest I/O.

A table is a row-major matrix of finite reals, one row per sample and one
column per (statistic, model) pair.  On disk a table is a UTF-8 CSV named
``<name>.csv`` with header ``sample_id,<col>,...`` plus a sibling manifest
``<name>.csv.manifest.json`` carrying the schema and role.  Reals are
serialized with shortest round-trip precision so golden files are bit-stable.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    DuplicateSampleId,
    MissingManifest,
    NonFiniteValue,
    RoleMismatch,
    SchemaMismatch,
    TableTooSmall,
    UnknownModel,
    UnknownStatistic,
)

ROLES = ("train", "val", "test", "ood")

# Separator for ensemble columns; forbidden inside statistic and model names.
ENSEMBLE_SEP = "@"

# Canonical statistic identifiers for VAE and flow models.
VAE_STATISTICS = ("xent", "ent", "rate", "distortion", "iwae")
FLOW_STATISTICS = ("like", "latent", "jac")

_DOMAIN_META_KEYS = ("height", "width", "channels", "levels")


def _format_real(x: float) -> str:
    # repr() of a Python float is the shortest decimal string that parses
    # back to the same bits.
    return repr(float(x))


def _check_role(role: str) -> str:
    if role not in ROLES:
        raise RoleMismatch(f"unknown role {role!r}; expected one of {ROLES}")
    return role


@dataclass(frozen=True)
class StatSchema:
    """Column layout of a statistic table.

    ``model_ids`` empty means the table is not ensembled and columns carry
    plain statistic names.  A non-empty ``model_ids`` means every statistic
    is present once per model under the name ``<statistic>@<model_id>``.
    """

    statistic_names: tuple[str, ...]
    model_ids: tuple[str, ...] = ()
    domain_meta: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "statistic_names", tuple(self.statistic_names))
        object.__setattr__(self, "model_ids", tuple(self.model_ids))
        if not self.statistic_names:
            raise SchemaMismatch("schema needs at least one statistic")
        if len(set(self.statistic_names)) != len(self.statistic_names):
            raise SchemaMismatch("statistic names must be unique")
        for name in self.statistic_names + self.model_ids:
            if not name:
                raise SchemaMismatch("empty statistic or model name")
            if ENSEMBLE_SEP in name:
                raise SchemaMismatch(
                    f"{name!r} contains the reserved separator {ENSEMBLE_SEP!r}"
                )
        if len(set(self.model_ids)) != len(self.model_ids):
            raise SchemaMismatch("model ids must be unique")
        if self.domain_meta is not None:
            meta = dict(self.domain_meta)
            if set(meta) != set(_DOMAIN_META_KEYS):
                raise SchemaMismatch(
                    f"domain_meta keys must be {_DOMAIN_META_KEYS}, got {sorted(meta)}"
                )
            for key in _DOMAIN_META_KEYS:
                value = meta[key]
                if not isinstance(value, int) or value <= 0:
                    raise SchemaMismatch(f"domain_meta[{key!r}] must be a positive int")
            if meta["levels"] < 2:
                raise SchemaMismatch("domain_meta['levels'] must be >= 2")
            object.__setattr__(self, "domain_meta", meta)

    @property
    def ensembled(self) -> bool:
        return bool(self.model_ids)

    @property
    def column_names(self) -> tuple[str, ...]:
        if self.ensembled:
            return tuple(
                f"{stat}{ENSEMBLE_SEP}{model}"
                for stat in self.statistic_names
                for model in self.model_ids
            )
        return self.statistic_names

    def columns_for(self, statistic: str) -> tuple[str, ...]:
        if statistic not in self.statistic_names:
            raise UnknownStatistic(f"unknown statistic {statistic!r}")
        if self.ensembled:
            return tuple(f"{statistic}{ENSEMBLE_SEP}{m}" for m in self.model_ids)
        return (statistic,)


@dataclass(frozen=True)
class StatTable:
    """Immutable matrix of per-sample statistics with named columns."""

    schema: StatSchema
    role: str
    sample_ids: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        _check_role(self.role)
        object.__setattr__(self, "sample_ids", tuple(self.sample_ids))
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionMismatch("values must be a 2-D matrix")
        n_cols = len(self.schema.column_names)
        if values.shape != (len(self.sample_ids), n_cols):
            raise DimensionMismatch(
                f"values shape {values.shape} does not match "
                f"{len(self.sample_ids)} samples x {n_cols} columns"
            )
        if len(set(self.sample_ids)) != len(self.sample_ids):
            raise DuplicateSampleId("sample ids must be unique within a table")
        bad = np.argwhere(~np.isfinite(values))
        if bad.size:
            r, c = bad[0]
            raise NonFiniteValue(self.sample_ids[r], self.schema.column_names[c])
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.sample_ids)

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.schema.column_names

    def column(self, name: str) -> np.ndarray:
        try:
            idx = self.column_names.index(name)
        except ValueError:
            raise UnknownStatistic(f"no column named {name!r}") from None
        return self.values[:, idx]

    def with_role(self, role: str) -> "StatTable":
        return StatTable(self.schema, role, self.sample_ids, self.values)


def manifest_dict(table: StatTable) -> dict:
    manifest = {
        "role": table.role,
        "statistic_names": list(table.schema.statistic_names),
        "model_ids": list(table.schema.model_ids),
    }
    if table.schema.domain_meta is not None:
        manifest["domain_meta"] = dict(table.schema.domain_meta)
    return manifest


def table_to_csv_bytes(table: StatTable) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["sample_id", *table.column_names])
    for sid, row in zip(table.sample_ids, table.values):
        writer.writerow([sid, *(_format_real(v) for v in row)])
    return buf.getvalue().encode("utf-8")


def write_stat_table(table: StatTable, path: str | Path) -> Path:
    """Write ``<path>`` (CSV) and ``<path>.manifest.json``."""
    path = Path(path)
    path.write_bytes(table_to_csv_bytes(table))
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(
        json.dumps(manifest_dict(table), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def read_stat_table(path: str | Path, expected_role: str | None = None) -> StatTable:
    """Read a CSV + manifest pair, validating header, ids, and finiteness."""
    path = Path(path)
    if not path.exists():
        raise MissingManifest(f"table file {path} does not exist")
    manifest_path = path.with_name(path.name + ".manifest.json")
    if not manifest_path.exists():
        raise MissingManifest(f"manifest {manifest_path} does not exist")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for key in ("role", "statistic_names", "model_ids"):
        if key not in manifest:
            raise MissingManifest(f"manifest {manifest_path} lacks key {key!r}")
    schema = StatSchema(
        tuple(manifest["statistic_names"]),
        tuple(manifest["model_ids"]),
        manifest.get("domain_meta"),
    )
    role = _check_role(manifest["role"])
    if expected_role is not None and role != expected_role:
        raise RoleMismatch(f"expected role {expected_role!r}, manifest says {role!r}")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path} is empty") from None
        expected_header = ["sample_id", *schema.column_names]
        if header != expected_header:
            raise SchemaMismatch(
                f"CSV header {header} does not match manifest columns {expected_header}"
            )
        sample_ids: list[str] = []
        rows: list[list[float]] = []
        seen: set[str] = set()
        for line in reader:
            if not line:
                continue
            if len(line) != len(expected_header):
                raise SchemaMismatch(
                    f"row {len(rows)} has {len(line)} fields, expected {len(expected_header)}"
                )
            sid = line[0]
            if sid in seen:
                raise DuplicateSampleId(f"duplicate sample id {sid!r}")
            seen.add(sid)
            parsed = []
            for col_name, token in zip(schema.column_names, line[1:]):
                try:
                    value = float(token)
                except ValueError:
                    raise NonFiniteValue(
                        sid, col_name, f"cannot parse {token!r} as a real"
                    ) from None
                if not math.isfinite(value):
                    raise NonFiniteValue(sid, col_name)
                parsed.append(value)
            sample_ids.append(sid)
            rows.append(parsed)
    values = np.array(rows, dtype=np.float64).reshape(len(sample_ids), len(schema.column_names))
    return StatTable(schema, role, tuple(sample_ids), values)


def split_holdout(
    table: StatTable, holdout_fraction: float, seed: int
) -> tuple[StatTable, StatTable]:
    """Partition a train table into (train, val) by a seeded uniform shuffle.

    The validation part takes ceil(fraction * n) rows.  Row order within each
    part follows the original table, so the split is stable to inspect.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise TableTooSmall(f"holdout_fraction must be in (0,1), got {holdout_fraction}")
    n = table.n
    if n < 2:
        raise TableTooSmall(f"need at least 2 rows to split, got {n}")
    # ceil with a relative fuzz so 0.1 * 2000 lands on 200, not 201.
    k = math.ceil(holdout_fraction * n - 1e-9)
    k = max(k, 1)
    if k >= n:
        raise TableTooSmall(
            f"holdout of {k} rows would leave an empty train table (n={n})"
        )
    rng = np.random.Generator(np.random.Philox(key=seed))
    perm = rng.permutation(n)
    val_idx = np.sort(perm[:k])
    train_idx = np.sort(perm[k:])

    def _take(indices: np.ndarray, role: str) -> StatTable:
        return StatTable(
            table.schema,
            role,
            tuple(table.sample_ids[i] for i in indices),
            table.values[indices],
        )

    return _take(train_idx, "train"), _take(val_idx, "val")


def select_columns(
    table: StatTable,
    statistic_names: Sequence[str],
    reducer: str = "ensemble_mean",
    model_id: str | None = None,
) -> StatTable:
    """Project a table onto the requested statistics under a reducer.

    ``single_model`` picks the ``<stat>@<model_id>`` column per statistic;
    ``ensemble_mean`` averages the per-model columns row-wise.  On a table
    that is not ensembled, ``ensemble_mean`` reduces to a plain column
    subset and ``single_model`` raises UnknownModel.
    """
    names = tuple(statistic_names)
    for name in names:
        if name not in table.schema.statistic_names:
            raise UnknownStatistic(f"unknown statistic {name!r}")
    if reducer == "single_model":
        if not table.schema.ensembled or model_id not in table.schema.model_ids:
            raise UnknownModel(f"unknown model id {model_id!r}")
        cols = [table.column(f"{name}{ENSEMBLE_SEP}{model_id}") for name in names]
    elif reducer == "ensemble_mean":
        cols = []
        for name in names:
            members = [table.column(c) for c in table.schema.columns_for(name)]
            cols.append(np.mean(members, axis=0))
    else:
        raise UnknownModel(f"unknown reducer {reducer!r}")
    schema = StatSchema(names, (), table.schema.domain_meta)
    return StatTable(schema, table.role, table.sample_ids, np.column_stack(cols))
