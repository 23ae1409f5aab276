"""Detection and estimation of gradual changes in the jump behaviour of
discretely observed semimartingales."""

from .api import GradualChangeDetector, GradualChangeTest
from .bootstrap import (
    RADEMACHER,
    STANDARD_NORMAL,
    Multiplier,
    ThresholdConfig,
    bootstrap_quantile,
    bootstrap_sup_draws,
    bounded_custom,
    hat_g_n,
    hat_h_n,
    hat_h_sup,
    threshold_lambda,
)
from .changepoint import ChangePointEstimate, adaptive_estimate, estimate_theta
from .changetest import TestReport, test_global, test_local
from .estimator import (
    IncrementGrid,
    PrefixStats,
    build_prefix,
    d_n,
    sup_d_n,
    sup_d_n_by_z,
    u_n,
    w_stat,
)
from .harness import (
    ConfigError,
    DataError,
    McConfig,
    McReport,
    calibrate_amplitude,
    ingest_csv,
    run_mc,
    run_sweep,
)
from .kernel import (
    AbruptKernel,
    ConstantKernel,
    ExpTail,
    PowerTail,
    QuadratureError,
    SeparableKernel,
    SimKernel,
    StableKernel,
    TailKernel,
    ZGrid,
    integrated_tail,
    inverse_tail,
    sup_variation,
    tail,
    time_variation,
    true_change_point,
)
from .simulate import (
    ContinuousPart,
    PathConfig,
    SamplePath,
    add_continuous,
    exact_halfstable_increment,
    simulate_path,
    strip_continuous,
)

__version__ = "0.1.0"
