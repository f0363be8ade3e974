"""CSV ingestion and report serialization."""
import csv
import io
import json
import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .core import BivariateSample
from .errors import InputError, InvalidArguments, ParseError
from .measures import remap_labels

SCHEMA_VERSION = 1
MISSING = {"", "na", "nan", "null", "none"}


@dataclass
class DatasetTable:
    columns: List[str]
    rows: np.ndarray
    labels: Optional[list] = None
    label_column: Optional[str] = None
    dropped: int = 0

    def column(self, name):
        try:
            return self.rows[:, self.columns.index(name)]
        except ValueError:
            raise InvalidArguments(f"no numeric column named {name!r}") from None


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise InputError(f"input file not found: {path}") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise ParseError(f"{path} is empty; a header row is required")
    return rows[0], rows[1:]


def read_table(path, columns=None, label_column=None):
    """Numeric matrix from a headed CSV. Rows with a missing cell in a used column are dropped."""
    header, body = _read_rows(path)
    header = [h.strip() for h in header]
    wanted = [h for h in header if h != label_column] if columns is None else list(columns)
    for name in wanted + ([label_column] if label_column else []):
        if name not in header:
            raise InvalidArguments(f"missing column {name!r}")
    idx = [header.index(c) for c in wanted]
    lab_idx = header.index(label_column) if label_column else None
    data, labels, dropped = [], [], 0
    for r, row in enumerate(body, start=2):
        if not any(cell.strip() for cell in row):
            continue
        cells = [row[i].strip() if i < len(row) else "" for i in idx]
        lab = row[lab_idx].strip() if lab_idx is not None and lab_idx < len(row) else None
        if any(c.lower() in MISSING for c in cells) or (lab_idx is not None and not lab):
            dropped += 1
            continue
        vals = []
        for c, name in zip(cells, wanted):
            try:
                v = float(c)
            except ValueError:
                raise ParseError(f"row {r}, column {name!r}: cannot parse {c!r} as a number",
                                 row=r, col=name) from None
            if not math.isfinite(v):
                raise ParseError(f"row {r}, column {name!r}: non-finite value", row=r, col=name)
            vals.append(v)
        data.append(vals)
        labels.append(lab)
    rows = np.array(data, dtype=float).reshape(-1, len(wanted))
    return DatasetTable(columns=wanted, rows=rows,
                        labels=labels if label_column else None,
                        label_column=label_column, dropped=dropped)


def ingest_csv(path, x_col, y_col, label_col=None):
    """(sample, info) for two columns and an optional label column.

    Label values map to 1..K by first appearance; `info` holds the mapping and
    the number of dropped rows.
    """
    table = read_table(path, [x_col, y_col], label_col)
    labels, mapping = (None, {})
    if label_col:
        labels, mapping = remap_labels(table.labels)
    if table.rows.shape[0] < 1:
        raise InvalidArguments("no complete rows in input")
    sample = BivariateSample(table.rows[:, 0], table.rows[:, 1], labels)
    return sample, {"dropped_rows": table.dropped,
                    "label_map": {str(k): v for k, v in mapping.items()}}


def to_csv(records, fieldnames=None):
    records = list(records)
    if fieldnames is None:
        fieldnames = list(records[0].keys()) if records else []
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n",
                            quoting=csv.QUOTE_MINIMAL, extrasaction="ignore")
    writer.writeheader()
    for rec in records:
        writer.writerow(rec)
    return buf.getvalue()


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def to_json(obj):
    return json.dumps(_clean(obj), indent=2, sort_keys=False, allow_nan=False,
                      default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")
