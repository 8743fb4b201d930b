"""Tabular exports: pandas frames written as CSV and rendered with rich."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import pandas as pd
from rich.console import Console
from rich.table import Table

from ..metrics import DetCurve
from ..network.xvector import LayerSpec

DET_COLUMNS = ["threshold", "p_fa", "p_miss"]
SWEEP_COLUMNS = ["loss", "m", "seed", "eer", "min_dcf_p01", "min_dcf_p001"]
SUMMARY_COLUMNS = ["loss", "m", "runs", "median_eer", "median_min_dcf_p01", "median_min_dcf_p001", "eer_reduction"]


def save_df_csv(df: pd.DataFrame, path: Path) -> Path:
    """Persist *df* to *path* without the index."""

    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator="\n")
    return path


def _ensure_dataframe(columns: Iterable[str], rows: list[dict[str, object]]) -> pd.DataFrame:
    df = pd.DataFrame(rows, columns=list(columns))
    if df.empty:
        return pd.DataFrame(columns=list(columns))
    return df


def det_to_df(curve: DetCurve) -> pd.DataFrame:
    return pd.DataFrame(dict(zip(DET_COLUMNS, (curve.thresholds, curve.p_fa, curve.p_miss), strict=True)))


def layers_to_df(specs: Sequence[LayerSpec]) -> pd.DataFrame:
    rows = [
        {
            "layer": spec.name,
            "context": "" if spec.context is None else ",".join(str(o) for o in spec.context),
            "total_context": "" if spec.total_context is None else spec.total_context,
            "input_x_output": f"{spec.in_dim}x{spec.out_dim}",
        }
        for spec in specs
    ]
    return _ensure_dataframe(["layer", "context", "total_context", "input_x_output"], rows)


def sweep_to_df(rows: list[dict[str, object]]) -> pd.DataFrame:
    return _ensure_dataframe(SWEEP_COLUMNS, rows)


def summarize_sweep(df: pd.DataFrame, *, baseline: str = "softmax") -> pd.DataFrame:
    """Median metrics per ``(loss, m)`` and the relative EER change against *baseline*.

    ``eer_reduction`` is ``1 − eer / eer_baseline``; it is empty when the
    baseline is missing or its median EER is zero.
    """

    if df.empty:
        return pd.DataFrame(columns=SUMMARY_COLUMNS)
    grouped = (
        df.groupby(["loss", "m"], sort=False)
        .agg(
            runs=("seed", "count"),
            median_eer=("eer", "median"),
            median_min_dcf_p01=("min_dcf_p01", "median"),
            median_min_dcf_p001=("min_dcf_p001", "median"),
        )
        .reset_index()
    )
    base = grouped.loc[grouped["loss"] == baseline, "median_eer"]
    if base.empty or float(base.iloc[0]) == 0.0:
        grouped["eer_reduction"] = pd.NA
    else:
        grouped["eer_reduction"] = 1.0 - grouped["median_eer"] / float(base.iloc[0])
    return grouped[SUMMARY_COLUMNS]


def _cell(value: Any) -> str:
    if value is None or (not isinstance(value, str) and pd.isna(value)):
        return "-"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def render_table(df: pd.DataFrame, *, title: str, console: Console | None = None) -> Table:
    table = Table(title=title)
    for column in df.columns:
        table.add_column(str(column))
    for record in df.itertuples(index=False):
        table.add_row(*(_cell(value) for value in record))
    (console or Console()).print(table)
    return table


__all__ = [
    "DET_COLUMNS",
    "SUMMARY_COLUMNS",
    "SWEEP_COLUMNS",
    "det_to_df",
    "layers_to_df",
    "render_table",
    "save_df_csv",
    "summarize_sweep",
    "sweep_to_df",
]
