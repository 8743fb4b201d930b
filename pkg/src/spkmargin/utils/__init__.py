"""Small helpers shared by the commands."""

from .tables import det_to_df, layers_to_df, render_table, save_df_csv, summarize_sweep, sweep_to_df

__all__ = ["det_to_df", "layers_to_df", "render_table", "save_df_csv", "summarize_sweep", "sweep_to_df"]
