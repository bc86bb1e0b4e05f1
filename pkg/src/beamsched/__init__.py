"""beamsched: seeded discrete-time simulator and scheduling library for a
single steerable server over parallel queues with time-varying FSO link
rates and stochastic, pair-dependent switchover delays."""

from .channel import (ChannelDraw, HopParams, RadioParams, bufton_wind,
                      coherence_time, e2e_gain_sample, gain_threshold,
                      geometric_coupling, hufnagel_valley, outage_curve,
                      outage_probability, path_loss, pointing_loss,
                      snr_and_rate, turbulence_sample)
from .config import (ConfigError, ExperimentConfig, apply_override,
                     emit_config, parse_config)
from .engine import (MetricsLog, Simulation, delay_cdf, feasibility_check,
                     phi_sw, run, stability_probe, summarize, time_budget)
from .geometry import Formation, angular_separation, range_to_master, slave_position
from .policies import (Decision, PolicyConfig, PolicySnapshot, aci_a_select,
                       aci_pa_select, aci_select, amortized_goodput,
                       early_halt_check, estimated_frame_bits, mw_select,
                       starvation_threshold, switching_modulator, zeta_bound)
from .presets import PRESETS, run_preset, run_replications
from .queueing import (QueueState, SlotEligibility, advance_slot, hol_age,
                       sample_arrivals, service_amount)
from .switching import (AcquisitionParams, DependentSwitchModel, FsoSwitchModel,
                        GimbalLimits, IidSwitchModel, LinkUnavailableError,
                        SwitchSample, acquisition_rounds, sample_switch,
                        slew_time)
from .streams import derive_streams, replication_seeds

__version__ = "0.1.0"
