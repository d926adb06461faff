"""Preparation of the San Francisco incident extract from the public
countrywide accidents CSV.

The raw download is not redistributable here; this module turns it into a
small plain CSV (one row per San Francisco accident, duration in minutes)
that the rest of the package loads like any other dataset. Experiments
that need the extract skip with a warning when the file is absent.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime
from importlib import resources

from .dataset import Dataset, FeatureColumn, FeatureSchema, load_csv

__all__ = ["sf_schema", "sf_column_map", "prepare_sf_extract", "load_sf_extract"]

_EXTRACT_COLUMNS = (
    FeatureColumn("severity", "numeric"),
    FeatureColumn("distance", "numeric"),
    FeatureColumn("temperature", "numeric"),
    FeatureColumn("humidity", "numeric"),
    FeatureColumn("pressure", "numeric"),
    FeatureColumn("visibility", "numeric"),
    FeatureColumn("wind_speed", "numeric"),
    FeatureColumn("weather", "categorical"),
    FeatureColumn("hour", "numeric"),
    FeatureColumn("day_of_week", "numeric"),
)


def sf_schema() -> FeatureSchema:
    return FeatureSchema(columns=_EXTRACT_COLUMNS, target_column="duration")


def sf_column_map() -> dict:
    """Canonical-name to raw-header mapping for the countrywide CSV."""
    with resources.files("incdur.data").joinpath("sf_column_map.json").open(
        "r", encoding="utf-8"
    ) as fh:
        return json.load(fh)


def _parse_time(raw: str) -> datetime | None:
    raw = raw.strip()
    if not raw:
        return None
    # timestamps appear with and without fractional seconds
    for fmt in ("%Y-%m-%d %H:%M:%S.%f", "%Y-%m-%d %H:%M:%S"):
        try:
            return datetime.strptime(raw, fmt)
        except ValueError:
            continue
    return None


def prepare_sf_extract(raw_path, out_path, city: str = "San Francisco") -> int:
    """Filter the countrywide accidents CSV to one city and write the
    per-incident extract (features + duration in minutes).

    Rows without parseable start/end timestamps or with non-positive
    duration are dropped. Returns the number of rows written.
    """
    column_map = sf_column_map()
    written = 0
    out_names = [c.name for c in _EXTRACT_COLUMNS] + ["duration"]
    with open(raw_path, newline="", encoding="utf-8") as raw, open(
        out_path, "w", newline="", encoding="utf-8"
    ) as out:
        reader = csv.DictReader(raw)
        writer = csv.DictWriter(out, fieldnames=out_names)
        writer.writeheader()
        for record in reader:
            if (record.get(column_map["city"]) or "").strip() != city:
                continue
            start = _parse_time(record.get(column_map["start_time"]) or "")
            end = _parse_time(record.get(column_map["end_time"]) or "")
            if start is None or end is None:
                continue
            duration = (end - start).total_seconds() / 60.0
            if duration <= 0:
                continue
            row = {"duration": duration, "hour": start.hour,
                   "day_of_week": start.weekday()}
            for name in ("severity", "distance", "temperature", "humidity",
                         "pressure", "visibility", "wind_speed", "weather"):
                row[name] = (record.get(column_map[name]) or "").strip()
            writer.writerow(row)
            written += 1
    return written


def load_sf_extract(path) -> Dataset:
    """Load an extract produced by :func:`prepare_sf_extract`."""
    return load_csv(path, sf_schema())
