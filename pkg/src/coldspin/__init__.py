"""coldspin: simulate and analyze single-pass Faraday-rotation probing of
a cold atomic ensemble.

The package forward-models the light-atom interface at the Gaussian-moment
level (means and variances of collective pseudo-spin and Stokes
components), simulates shot-noise-limited balanced detection of the probe
polarization, and provides the analysis chain that turns rotation-angle
scans into a column density and optical depth, photon budgets for
projection-noise-limited probing, and trap-characterization fits
(two-body loss, time of flight, dipole trap depth).
"""

__version__ = "0.1.0"

from .analysis import (
    FitResult,
    compute_od,
    fit_column_density,
    fit_result_from_json_dict,
    fit_tof_temperature,
    fit_two_body_decay,
    photon_budget,
    snr_report,
    write_fit_json,
)
from .atomic_data import (
    AtomSpec,
    TrapSpec,
    default_atom_spec,
    default_trap_spec,
    load_atom_file,
    load_atom_spec,
    load_trap_file,
    load_trap_spec,
    resonant_cross_section,
)
from .detector import (
    DetectorSpec,
    PulseRecord,
    TransmissionSpec,
    angle_variance,
    extract_angle,
    integrate_window,
    read_pulse_samples,
    simulate_pulse_detection,
    synthesize_waveform,
    write_pulse_csv,
)
from .ensemble import (
    TrapPopulationParams,
    dipole_trap_depth,
    effective_two_body_volume,
    evolve_trap_population,
    evolve_trap_population_rk4,
    light_shift,
    peak_density,
    tof_radius,
)
from .errors import FitError, NearResonanceError, ValidationError
from .experiment import (
    DestructionModel,
    ScanConfig,
    ScanDataset,
    ScanPoint,
    child_stream,
    read_scan_csv,
    run_detuning_scan,
    run_pulse_train,
    scattering_probability,
    write_scan_csv,
)
from .spin_optics import (
    CollectiveSpinState,
    CouplingParams,
    StokesState,
    alignment_interact,
    coherent_pulse,
    coherent_spin_state,
    collective_from_amplitudes,
    coupling_constant,
    decay_mean_z,
    detuning_factor,
    faraday_angle,
    od_from_angle,
    output_variance,
    qnd_interact,
    rotation_cross_section,
    scale_atom_number,
    single_atom_pseudospin,
)

__all__ = [
    "AtomSpec",
    "CollectiveSpinState",
    "CouplingParams",
    "DestructionModel",
    "DetectorSpec",
    "FitError",
    "FitResult",
    "NearResonanceError",
    "PulseRecord",
    "ScanConfig",
    "ScanDataset",
    "ScanPoint",
    "StokesState",
    "TransmissionSpec",
    "TrapPopulationParams",
    "TrapSpec",
    "ValidationError",
    "alignment_interact",
    "angle_variance",
    "child_stream",
    "coherent_pulse",
    "coherent_spin_state",
    "collective_from_amplitudes",
    "compute_od",
    "coupling_constant",
    "decay_mean_z",
    "default_atom_spec",
    "default_trap_spec",
    "detuning_factor",
    "dipole_trap_depth",
    "effective_two_body_volume",
    "evolve_trap_population",
    "evolve_trap_population_rk4",
    "extract_angle",
    "faraday_angle",
    "fit_column_density",
    "fit_result_from_json_dict",
    "fit_tof_temperature",
    "fit_two_body_decay",
    "integrate_window",
    "light_shift",
    "load_atom_file",
    "load_atom_spec",
    "load_trap_file",
    "load_trap_spec",
    "od_from_angle",
    "output_variance",
    "peak_density",
    "photon_budget",
    "qnd_interact",
    "read_pulse_samples",
    "read_scan_csv",
    "resonant_cross_section",
    "rotation_cross_section",
    "run_detuning_scan",
    "run_pulse_train",
    "scale_atom_number",
    "scattering_probability",
    "simulate_pulse_detection",
    "single_atom_pseudospin",
    "snr_report",
    "synthesize_waveform",
    "tof_radius",
    "write_fit_json",
    "write_pulse_csv",
    "write_scan_csv",
]
