"""Extinction and survival of complete N-ary subtrees in Galton-Watson trees."""
from gwnary.critical import CriticalReport, find_critical, one_or_many_closed_form
from gwnary.mc import McConfig, McEstimate, estimate_gamma_nt, has_nary_subtree
from gwnary.offspring import (
    Binomial,
    Finite,
    Geometric,
    OffspringSpec,
    OneOrMany,
    Poisson,
    mean,
    parse_spec,
    pgf,
    pgf_deriv,
    sample,
)
from gwnary.solve import Criticality, RootReport, classify, pemantle_bound, smallest_root
from gwnary.subtree_gf import SubtreeGF
from gwnary.survival import AsymptoteFit, SurvivalCurve, fit_asymptote, iterate_survival

__version__ = "0.1.0"
