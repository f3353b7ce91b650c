"""Generative "true" distributions: adaptive bounded KDE, empirical PMF and
a class-conditional logit model."""
from .classcond import ClassConditionalModel, PointMassMixture, fit_class_conditional
from .io import load_model, model_from_dict, model_to_dict, save_model
from .kde import Kde1D, KdeMulti, fit_kde, fit_kde_multi
from .pmf import Pmf, fit_pmf
from .truth import TrueModel, TruthValue, draw, true_statistic

__all__ = [
    "ClassConditionalModel",
    "Kde1D",
    "KdeMulti",
    "PointMassMixture",
    "Pmf",
    "TrueModel",
    "TruthValue",
    "draw",
    "fit_class_conditional",
    "fit_kde",
    "fit_kde_multi",
    "fit_pmf",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "save_model",
    "true_statistic",
]
