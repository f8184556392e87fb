"""Loss-model families and their Malliavin weights."""

from .archimedean import (ArchimedeanCopulaModel, ArchimedeanGenerator, Clayton, Gumbel,
                          archimedean_alpha, archimedean_gamma, generator_from_dict)
from .base import DrawBatch, LossModel, WeightFailure, malliavin_weight, sample
from .elliptical import (EllipticalModel, ExpRadial, GaussianRadial, StudentRadial,
                         elliptical_allocation_share, elliptical_f, elliptical_weights)
from .gaussian import GaussianLinearModel, gaussian_min_norm_f
from .independent import IndependentModel

FAMILIES = {
    cls.family: cls
    for cls in (IndependentModel, GaussianLinearModel, EllipticalModel, ArchimedeanCopulaModel)
}


def model_from_dict(spec: dict) -> LossModel:
    family = spec.get("family")
    if family not in FAMILIES:
        raise ValueError(f"unknown model family {family!r}; expected one of {sorted(FAMILIES)}")
    return FAMILIES[family].from_dict(spec)


__all__ = [
    "ArchimedeanCopulaModel", "ArchimedeanGenerator", "Clayton", "Gumbel", "DrawBatch",
    "EllipticalModel", "ExpRadial", "GaussianRadial", "StudentRadial", "GaussianLinearModel",
    "IndependentModel", "LossModel", "WeightFailure", "archimedean_alpha", "archimedean_gamma",
    "elliptical_allocation_share", "elliptical_f", "elliptical_weights", "gaussian_min_norm_f",
    "generator_from_dict", "malliavin_weight", "model_from_dict", "sample", "FAMILIES",
]
