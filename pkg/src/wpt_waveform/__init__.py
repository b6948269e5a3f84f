"""Channel-adaptive multisine waveform design for wireless power transfer."""

from .baselines import matched_filter_waveform, strongest_sinewave_waveform, uniform_waveform
from .channel import (
    ArrayGeometry,
    FrequencyGrid,
    FrequencyResponse,
    MultipathChannel,
    MultipathTap,
    PowerDelayProfile,
    frequency_response,
    generate_channel,
    ula_phase_shift,
)
from .harvester import (
    DiodeParameters,
    HarvesterModel,
    linear_model_power,
    taylor_coefficients,
    z_dc_analytic,
    z_dc_time_domain,
)
from .optimizer import (
    IterationTrace,
    Monomial,
    PosynomialObjective,
    amgm_lower_bound,
    build_posynomial,
    evaluate_posynomial,
    maximize_monomial_under_power,
    optimal_phases,
    optimize_amplitudes,
)
from .rectifier import RectifierCircuit, dc_power, simulate_rectifier
from .waveform import (
    MultisineWaveform,
    ReceivedSpectrum,
    received_spectrum,
    synthesize_received,
    transmit_power,
)

__version__ = "0.1.0"
