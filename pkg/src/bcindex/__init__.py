"""Daily business-conditions index toolkit.

A single latent daily activity factor is extracted from mixed-frequency
indicators by a missing-data Kalman smoother; parameters come from
pseudo-likelihood MLE; vintage replay reconstructs the real-time belief
path by release.
"""

from .calendar import Day, DayGrid, Frequency, Period
from .chronology import (NBER_TABLE, RecessionEpisode, RecessionTable, depth,
                         duration_months, severity, trough_day,
                         zero_crossing_recovery)
from .covid import DailySeries, correlate, covid_pipeline, hp_filter, lead
from .errors import (BcIndexError, ConfigError, GridRangeError,
                     InitializationError, NumericalError,
                     OptimizerFailureError, SchemaError, ValidationError)
from .estimate import (EstimateOptions, EstimationReport, ParamTransform,
                       estimate_mle, profile_likelihood, standard_errors)
from .kalman import FilterResult, SmootherResult, filter, log_likelihood, smooth
from .model import (DfmParams, DfmSpec, ErrorModel, IndicatorSpec, Kind,
                    ObservationSet, Scaling, StateSpaceSystem, Transform,
                    build_state_space, canonical_spec, default_params,
                    simulate, transform_observations)
from .vintage import (DotSeries, FixedParams, Path, ReestimatePerVintage,
                      ReleaseEvent, VintageDataset,
                      build_vintages_from_releases, evaluation_mode,
                      extract_path, ingest_vintages, replay)

__version__ = "0.1.0"
