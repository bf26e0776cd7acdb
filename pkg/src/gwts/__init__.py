"""Groundwater time-series toolkit.

Quarterly panel ingestion, VAR(p) modelling with residual diagnostics and
structural analysis, copula directional dependence networks between
monitoring stations, and forecast shelf-life estimation.
"""

from .dataio import (ColumnSchema, HoldoutSplit, StationId, TimeSeriesPanel,
                     extract_matrix, holdout_split, load_panel, panel_summary,
                     write_panel)
from .var_core import (LagSelection, VarModel, companion_stability, fit_var,
                       forecast, model_from_json, model_to_json,
                       select_lag_order, simulate_var)
from .diagnostics import (DiagnosticReport, EfpPath, arch_test, cusum_boundary,
                          normality_tests, ols_cusum, portmanteau_test)
from .structural import (FevdResult, GrangerReport, IrfResult, fevd,
                         granger_test, irf)
from .copula_cdd import (CddResult, DependencyNetwork, GcbrFit, PseudoSeries,
                         build_network, cdd, cdd_series, fit_gcbr,
                         network_to_csv, network_to_geojson,
                         pseudo_observations)
from .shelflife import (ApeTable, Forecaster, SeasonalNaiveForecaster,
                        ShelfLifeResult, VarForecaster, compare_shelf_lives,
                        estimate_shelf_life, rolling_origin_errors)

__version__ = "0.1.0"
