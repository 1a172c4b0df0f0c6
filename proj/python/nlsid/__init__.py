"""Python bindings for the nlsid C++ library."""

from ._core import (
    BlaEstimate,
    ConfigError,
    DistortionReport,
    FormatError,
    HarmonicGrid,
    IdentifyResult,
    InstabilityError,
    InsufficientDataError,
    MultisineSpec,
    NumericalError,
    PipelineConfig,
    PnlssModel,
    TimeRecord,
    TrendResult,
    __version__,
    analyze,
    build_grid,
    cell_preset,
    dft,
    identify,
    l1_trend,
    lambda_max,
    lpm_frf,
    realizations,
    run_cli,
    simulate_cell,
    tile,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
