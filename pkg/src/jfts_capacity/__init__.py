"""Capacity of joint fading and two-path shadowing (JFTS) channels.

Closed forms for OPRA, ORA, CIFR and TIFR evaluated as published, each
paired with truncated quadrature and Monte Carlo estimates so the gaps
between them can be measured.
"""

__version__ = "0.1.0"

from .capacity import (CapacityResult, CutoffSolution, Method, Scheme, cifr, cutoff_residual,
                       opra_closed, opra_quadrature, ora_quadrature, ora_series, solve_cutoff,
                       tifr_capacity, tifr_max)
from .errors import (ConfigurationError, DomainError, JftsError, ModelError, NoCapacityError,
                     NoRootError, NumericError, PoleError, RangeError)
from .model import (CsnrDensityForm, JftsParams, amount_of_fading, b_aggregate, csnr_pdf,
                    envelope_pdf, omega_a, outage_probability)
