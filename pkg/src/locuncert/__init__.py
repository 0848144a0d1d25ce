"""Stereophonic localization-uncertainty model and panning-design toolkit."""

from .auditory import (
    CueSet,
    FilterbankSpec,
    SilentInputError,
    binaural_cues,
    erb_center_frequencies,
    extract_ild,
    extract_itd,
    gammatone_filter,
    hair_cell,
)
from .geometry import (
    EXACT_PATH,
    PRINTED_APPROXIMATION,
    SPEED_OF_SOUND,
    ListenerPose,
    PanningPoint,
    RelativePanningPoint,
    SourcePlacement,
    StereoSetup,
    exact_ear_paths,
    loudspeaker_positions,
    mic_radius_from_distance,
    distance_from_mic_radius,
    psr_distance_for_tau_overlap,
    relative_panning,
    source_relative_to_listener,
    tau_overlap,
    x_for_full_shift,
)
from .hrir import (
    HrirFormatError,
    HrirSet,
    default_azimuth_grid,
    load_hrir_set,
    save_hrir_set,
    spherical_head_hrirs,
)
from .loudness import loudness_weights, phon_from_spl, spl_from_phon
from .model import (
    FreeFieldDictionary,
    LikelihoodFunction,
    NormalizedCues,
    UncertaintyResult,
    build_dictionary,
    circular_variance,
    likelihood,
    load_dictionary,
    localization_uncertainty,
    normalize_cues,
    save_dictionary,
    xi_distance,
)
from .panning import (
    MicArrangement,
    PatternNullError,
    PsrDesign,
    TABLE_ARRANGEMENTS,
    WilliamsCurves,
    arrangement_curve,
    beta_closed_form,
    coverage_angle,
    polarity_inverted,
    psr_arrangement,
    psr_curve,
    psr_design,
    williams_icld,
)
from .render import EarSignals, RenderSource, fractional_delay, render, stereo_pair_sources
from .stimuli import Stimulus, generate, tukey_window, write_wav
from .sweeps import (
    SweepConfig,
    SweepResult,
    VALIDATION_SCATTER,
    arrangement_comparison,
    config_hash,
    grid_ictd_icld,
    pearson,
    psr_average_vs_d,
    psr_surface,
    score_panning_point,
    spatial_map,
    write_result_csv,
    write_result_json,
)

__version__ = "0.1.0"
