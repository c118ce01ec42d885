"""Calculus, convexity and σ₂(𝓗)-measures on the Heisenberg group ℍⁿ."""
from .group import (Box, GaugeAnnulus, GaugeBall, Point, compose, dilate, distance, gauge, inverse)
from .fields import (Polynomial, ScalarField, gauge4_field, gauge_field, quadratic_form_field, sq_field,
                     t_field)
from .horizontal import (HorizontalJet, WeightedPolynomial, hessian_c, horizontal_jet, taylor_decay,
                         taylor_polynomial)
from .convexity import (ConvexityReport, SymMatrix, Verdict, classify, compose_convex, lemma_partial_s,
                        sigma2, sigma2_gradient_matrix, sigma2_horizontal, smooth_max)
from .jacobi import eigenvalues
from .barrier import Barrier
from .measures import (MeasureEstimate, compare_pair, measure_density, measure_of_region, oscillation,
                       oscillation_bound_check, trace_integral, weak_convergence_test)
from .mollify import mollify

__all__ = [
    "Box", "GaugeAnnulus", "GaugeBall", "Point", "compose", "dilate", "distance", "gauge", "inverse",
    "Polynomial", "ScalarField", "gauge4_field", "gauge_field", "quadratic_form_field", "sq_field", "t_field",
    "HorizontalJet", "WeightedPolynomial", "hessian_c", "horizontal_jet", "taylor_decay", "taylor_polynomial",
    "ConvexityReport", "SymMatrix", "Verdict", "classify", "compose_convex", "lemma_partial_s", "sigma2",
    "sigma2_gradient_matrix", "sigma2_horizontal", "smooth_max", "eigenvalues", "Barrier", "MeasureEstimate",
    "compare_pair", "measure_density", "measure_of_region", "oscillation", "oscillation_bound_check",
    "trace_integral", "weak_convergence_test", "mollify",
]
