from app.models.povm import Histogram, PovmSet
from app.models.sample import QuadratureSample, SampleBatch
from app.models.state import SingleModeDensityMatrix, TwoModeDensityMatrix
from app.models.wigner import WignerGrid

__all__ = [
    "Histogram",
    "PovmSet",
    "QuadratureSample",
    "SampleBatch",
    "SingleModeDensityMatrix",
    "TwoModeDensityMatrix",
    "WignerGrid",
]
