from app.schemas.bell import BellConfig, BellCurve, BellSummary, SweepRow
from app.schemas.homodyne import PhaseSetting, QuadBin
from app.schemas.pipeline import PipelineConfig
from app.schemas.recon import EfficiencyFit, ReconConfig, ReconDiagnostics
from app.schemas.run import PhaseSchedule, RunConfig
from app.schemas.state import BeamSplitterSpec, FockCutoff, ModelSpec, StateDocument
from app.schemas.wigner import GridSpec, PhasePoint4, WignerPlane

__all__ = [
    "BellConfig",
    "BellCurve",
    "BellSummary",
    "SweepRow",
    "PhaseSetting",
    "QuadBin",
    "PipelineConfig",
    "EfficiencyFit",
    "ReconConfig",
    "ReconDiagnostics",
    "PhaseSchedule",
    "RunConfig",
    "BeamSplitterSpec",
    "FockCutoff",
    "ModelSpec",
    "StateDocument",
    "GridSpec",
    "PhasePoint4",
    "WignerPlane",
]
