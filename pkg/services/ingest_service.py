# File: services/ingest_service.py
"""Daily `date,value` CSV files to yearly Fourier-coefficient curves."""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from services.datagen import DAYS_PER_YEAR
from services.funcspace import DEFAULT_T_ANALYSIS, CoeffSeries, fourier_basis, project
from utils.errors import IngestError

logger = logging.getLogger(__name__)

DEFAULT_MIN_DAYS = 360
REQUIRED_COLUMNS = ("date", "value")


@dataclass(frozen=True, eq=False)
class DailyIngest:
    series: CoeffSeries
    years: tuple
    excluded: dict = field(default_factory=dict)  # year -> number of valid readings


def day_of_year(dates: pd.Series) -> np.ndarray:
    """Day index 1..365 with Feb 29 removed, so Mar 1 is day 60 in every year."""
    doy = dates.dt.dayofyear.to_numpy()
    shift = (dates.dt.is_leap_year & (dates.dt.month > 2)).to_numpy()
    return doy - shift.astype(int)


def read_daily_csv(csv_path: str | Path) -> pd.DataFrame:
    """
    Read and validate a daily CSV.

    Args:
        csv_path: File with header `date,value`; empty value fields mark missing readings.

    Returns:
        pd.DataFrame: Columns date (datetime64), value (float, NaN when missing) and line
                      (1-based line number in the file), sorted by date.
    """
    try:
        raw = pd.read_csv(csv_path, dtype=str, keep_default_na=False, skipinitialspace=True, encoding="utf-8")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise IngestError(f"{csv_path}: {e}") from e
    raw.columns = [str(c).strip().lower() for c in raw.columns]
    missing = [c for c in REQUIRED_COLUMNS if c not in raw.columns]
    if missing:
        raise IngestError(f"{csv_path}: missing column(s) {', '.join(missing)}")

    lines = raw.index.to_numpy() + 2
    dates = pd.to_datetime(raw["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    text = raw["value"].str.strip()
    values = pd.to_numeric(text.where(text != ""), errors="coerce")
    bad_value = (values.isna() & (text != "")) | np.isinf(values)
    bad = dates.isna() | bad_value
    if bad.any():
        raise IngestError(f"{csv_path}: unparseable row(s)", lines[bad.to_numpy()].tolist())

    frame = pd.DataFrame({"date": dates, "value": values.astype(float), "line": lines})
    duplicated = frame["date"].duplicated(keep=False)
    if duplicated.any():
        raise IngestError(f"{csv_path}: duplicate date(s)", frame.loc[duplicated, "line"].tolist())
    return frame.sort_values("date", kind="stable").reset_index(drop=True)


def ingest_daily(csv_path: str | Path, T: int = DEFAULT_T_ANALYSIS, min_days: int = DEFAULT_MIN_DAYS) -> DailyIngest:
    """
    Smooth every calendar year of a daily CSV onto the order-T Fourier basis.

    Feb 29 is dropped and day d of the remaining 365-day year sits at node (d - 1/2)/365.
    Years with fewer than min_days valid readings are excluded and reported.

    Args:
        csv_path: Daily `date,value` CSV.
        T (int): Odd basis order.
        min_days (int): Minimum number of valid readings for a year to be kept.

    Returns:
        DailyIngest: One coefficient row per retained year, in calendar order.
    """
    frame = read_daily_csv(csv_path)
    frame = frame[~((frame["date"].dt.month == 2) & (frame["date"].dt.day == 29))]
    all_years = sorted(set(frame["date"].dt.year))
    frame = frame.dropna(subset=["value"])
    basis = fourier_basis(T, DAYS_PER_YEAR)
    nodes = (day_of_year(frame["date"]) - 0.5) / DAYS_PER_YEAR
    frame = frame.assign(node=nodes, year=frame["date"].dt.year)

    groups = {year: group for year, group in frame.groupby("year", sort=True)}
    rows, years, excluded = [], [], {}
    for year in all_years:
        group = groups.get(year)
        count = 0 if group is None else len(group)
        if count < min_days:
            excluded[int(year)] = count
            continue
        rows.append(project(group["value"].to_numpy(), group["node"].to_numpy(), basis))
        years.append(int(year))
    if excluded:
        logger.info("excluded %d year(s) with fewer than %d readings: %s",
                    len(excluded), min_days, ", ".join(str(y) for y in excluded))
    if not rows:
        raise IngestError(f"{csv_path}: no year has at least {min_days} valid readings")
    logger.info("ingested %d year(s) %d-%d from %s", len(years), years[0], years[-1], csv_path)
    return DailyIngest(series=CoeffSeries(np.vstack(rows), basis), years=tuple(years), excluded=excluded)
