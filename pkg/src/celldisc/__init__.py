"""Cell-discovery training schemes for mm-wave networks: beam sweep, beam
combining, differential encoding, MUB-based and random beamforming."""
from .analytics import (ProbabilityReport, monte_carlo_probe, pd_cs_exact, pd_cs_lower_bound, pd_nonoverlap,
                        pd_overlap_bound, pf_beam_sweep, scheme_mu_closed_form)
from .channel import (AngularChannel, MultipathChannel, PathComponent, angular_transform, array_response,
                      dft_matrix, sample_geometric_channel, sample_ideal_channel, synthesize_channel)
from .codebook import (Scheme, SchemeCodebook, beam_combine_codebook, beam_sweep_codebook,
                       build_codebook, differential_pilots, mubb_codebook, rbf_codebook)
from .detection import (DetectionResult, beamforming_gain, calibrate_threshold, differential_detect,
                        matched_filter_detect, strongest_bs, tau_for_pf, threshold_detect)
from .errors import *  # noqa: F401,F403
from .measurement import (ObservationSet, SensingMatrix, best_rbf_draw, mutual_coherence, observation_vector,
                          sensing_matrix, simulate_observations)
from .mub import MubFamily, mub_family
from .scenario import (ExperimentConfig, NetworkRealization, SchemeSpec, build_network, run_bfgain_cdf,
                       run_detection_curve, run_rf_chain_study, thermal_noise_variance)
from .verify import run_theorem_verification
