"""REFIT processed CSV files: Time, Unix, Aggregate, Appliance1..Appliance9."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np
import pandas as pd

from nilmkit.errors import ParseError
from nilmkit.ingest.timeseries import ParseReport, TimeSeries

logger = logging.getLogger(__name__)

REFIT_SAMPLE_PERIOD = 8.0
SPACING_TOLERANCE = 2.0


@dataclass
class RefitHouse:
    """Aggregate plus appliance channels of one REFIT house file."""

    aggregate: TimeSeries
    appliances: Dict[str, TimeSeries]
    report: ParseReport
    median_spacing: Optional[float]


def _find_column(frame: pd.DataFrame, name: str) -> Optional[str]:
    for column in frame.columns:
        if column.strip().lower() == name.lower():
            return column
    return None


def parse_refit_house(path: str) -> RefitHouse:
    """Parse one REFIT house CSV, mapping columns by header name."""
    try:
        frame = pd.read_csv(path, dtype=str, skipinitialspace=True, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"unreadable CSV: {e}", path)

    unix_col = _find_column(frame, "unix")
    if unix_col is None:
        raise ParseError("missing 'Unix' column", path)
    agg_col = _find_column(frame, "aggregate")
    if agg_col is None:
        raise ParseError("missing 'Aggregate' column", path)
    appliance_cols = [c for c in frame.columns if c.strip().lower().startswith("appliance")]

    numeric = pd.DataFrame({
        col: pd.to_numeric(frame[col].str.strip(), errors="coerce")
        for col in [unix_col, agg_col] + appliance_cols
    })
    bad = numeric.isna().any(axis=1) | (numeric[[agg_col] + appliance_cols] < 0).any(axis=1)
    stamps = np.floor(numeric[unix_col].to_numpy(dtype=float, na_value=np.nan))

    # A row whose timestamp does not advance past the last accepted row is skipped too.
    good = ~bad.to_numpy()
    running = np.maximum.accumulate(np.where(good, stamps, -np.inf))
    previous = np.concatenate(([-np.inf], running[:-1]))
    keep = good & (stamps > previous)

    # CSV line numbers: header is line 1
    skipped_lines = [int(i) + 2 for i in np.flatnonzero(~keep)]
    report = ParseReport()
    report.record(path, len(frame), skipped_lines)
    if skipped_lines:
        logger.warning("%s: skipped %d unparseable row(s), first at line %d",
                       path, len(skipped_lines), skipped_lines[0])

    t = stamps[keep].astype(np.int64)
    aggregate = TimeSeries(t, numeric[agg_col].to_numpy()[keep])
    appliances = {
        col.strip(): TimeSeries(t, numeric[col].to_numpy()[keep]) for col in appliance_cols
    }

    median_spacing = float(np.median(np.diff(t))) if len(t) > 1 else None
    if median_spacing is not None and abs(median_spacing - REFIT_SAMPLE_PERIOD) > SPACING_TOLERANCE:
        message = f"median sample spacing {median_spacing:.1f}s, expected about {REFIT_SAMPLE_PERIOD:.0f}s"
        report.warnings.append(message)
        logger.warning("%s: %s", path, message)
    logger.info("parsed %s: %d samples, %d appliance channel(s)", path, len(t), len(appliances))
    return RefitHouse(aggregate=aggregate, appliances=appliances, report=report,
                      median_spacing=median_spacing)
