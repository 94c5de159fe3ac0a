"""On-line testing of exchangeability with conformal martingales.

Labeled examples are turned into randomized conformal p-values with a
1-nearest-neighbour nonconformity score; betting functions on those p-values
(power, simple mixture, plug-in kernel density) build test martingales whose
size measures evidence against the i.i.d. assumption.
"""

from .betting import (
    ConstantBetting,
    KdeModel,
    PluginBetting,
    PowerBetting,
    SimpleMixtureBetting,
    fit_kde,
    kde_density,
    log_mixture_integral,
    mixture_increment,
    parse_strategy,
    power_bet,
    silverman_bandwidth,
)
from .calibration import SynthConfig, avg_log_growth, ks_uniform, synth_arrays, synth_stream
from .core import INF, InvalidInputError, LabeledExample, RngHandle, euclidean_distance, ext_ratio
from .estimators import ConformalPValues, ExchangeabilityMartingale, ExchangeabilityTester
from .martingale import MartingaleTracker, run
from .nonconformity import NonconformityState, batch_scores
from .pvalues import PValueRecord, PValueStream, next_pvalue, process_stream

__version__ = "0.1.0"
