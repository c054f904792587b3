"""LDA over Bag-of-Label-Words corpora."""

from .config import GibbsSettings, LdaConfig, VbSettings
from .gibbs import fit_gibbs, gibbs_sweeps
from .model import (
    TopicLabels,
    TopicModel,
    TopicReport,
    load_model,
    save_model,
    top_labels,
    write_elbo_csv,
    write_report_csv,
)
from .simulate import SimulatedCorpus, sample_dirichlet, simulate_corpus
from .vb import LikelihoodRow, fit_vb, log_likelihood_report, project

__all__ = [
    "GibbsSettings",
    "LdaConfig",
    "LikelihoodRow",
    "SimulatedCorpus",
    "TopicLabels",
    "TopicModel",
    "TopicReport",
    "VbSettings",
    "fit_gibbs",
    "gibbs_sweeps",
    "fit_vb",
    "load_model",
    "log_likelihood_report",
    "project",
    "sample_dirichlet",
    "save_model",
    "simulate_corpus",
    "top_labels",
    "write_elbo_csv",
    "write_report_csv",
]
