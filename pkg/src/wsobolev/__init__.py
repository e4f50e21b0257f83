"""Sharp constants and extremals for weighted Sobolev inequalities on the
upper half space and for the Baouendi-Grushin operator."""
from .errors import (DegenerateFieldError, DomainError, NoSolution, ShotFailed, Stagnation,
                     UnsupportedCaseError, WSobolevError)
from .params import (AdmissibilityClass, GrushinParams, WeightPair, classify, constant_conversion,
                     critical_exponent, grushin_to_weight)
from .special import grushin_sharp_constant_tau1, sharp_constant_case1, sharp_constant_case2

__version__ = "0.1.0"
