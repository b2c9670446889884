"""Gompertz mortality modeling, annuity valuation and longevity risk pooling."""

from .calibrate import (
    ClamFit,
    GompertzFit,
    MortalityObservations,
    ProjectedRate,
    clam_fit,
    gompertz_fit,
    growth_rate_between,
    mixture_fit,
    project_qx,
)
from .ingest import (
    DatasetConfig,
    LoadResult,
    PoolingReport,
    RunConfig,
    load_mortality_csv,
    read_report,
    write_report,
)
from .mortality import (
    AgeAnchoredLaw,
    GompertzLaw,
    LifetimeMoments,
    PlateauLaw,
    covol_profile,
    density,
    exponential_moments,
    from_hg,
    moments,
    plateau_hazard,
    survival,
    to_hg,
)
from .pipeline import build_report, clam_by_gender, fit_cohorts
from .pooling import (
    ClamLine,
    Participant,
    PoolingResult,
    Preferences,
    aew_group,
    aew_homogeneous,
    delta_vs_g_sweep,
    subsidy_table,
    utility_oracle_delta,
    wtp,
)
from .pricing import (
    MarketBasis,
    annuity_factor_hg,
    annuity_factor_mb,
    annuity_factor_quadrature,
    exponential_annuity_factor,
    term_certain_pv,
)
from .specfun import upper_incomplete_gamma

__version__ = "0.1.0"
