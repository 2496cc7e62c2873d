"""Mixed variational one-step integrators for lumped-parameter structural dynamics."""

from .analysis import (
    StabilityReport,
    amplification_elastic,
    amplification_viscoplastic,
    equivalence_residuals,
    spectral_radius,
    stability_report,
)
from .integrators import (
    BranchDecision,
    SingularSystem,
    StepSystem,
    assemble_elastic,
    assemble_viscoplastic,
    classify_branch,
    init_state,
    invert_elastic_lhs,
    invert_viscoplastic_lhs,
    simulate,
    step_elastic,
    step_viscoplastic,
)
from .loading import (
    AnalyticSine,
    EmptyRecord,
    ForcingRecord,
    Interpretation,
    MalformedLine,
    NonMonotonicTime,
    Sampled,
    parse_record,
    pre_initial_impulse,
    sample_forcing,
)
from .model import (
    Branch,
    Diagnostic,
    InitialConditions,
    InvalidParams,
    MixedState,
    OscillatorParams,
    Severity,
    SimulationResult,
    TimeGrid,
    validate_params,
)
from .postprocess import EmptyResult, HysteresisSeries, PlotKind, emit_plot, export_csv, hysteresis, read_csv
from .reference_newmark import NewmarkSettings, newmark_linear, newmark_viscoplastic

__version__ = "0.1.0"
