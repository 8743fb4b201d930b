"""``describe-net``: layer contexts, shapes and the parameter count."""

from __future__ import annotations

import pandas as pd

from ..domain.configs import NetworkConfig
from ..network import XVectorNet, parameter_count
from ..numeric import Rng
from ..utils.tables import layers_to_df, render_table


def cmd_describe_net(net_cfg: NetworkConfig, n_classes: int, *, with_bias: bool = True) -> pd.DataFrame:
    df = layers_to_df(XVectorNet(net_cfg, Rng(0)).describe())
    total = parameter_count(net_cfg, n_classes, with_bias=with_bias)
    render_table(df, title=f"x-vector network ({total:,} parameters with a {n_classes}-way projection)")
    return df


__all__ = ["cmd_describe_net"]
