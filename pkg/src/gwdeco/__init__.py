"""Decoherence of matter-wave interferometers by stochastic gravitational-wave backgrounds."""

from ._version import __version__
from .apparatus import (ApparatusFunction, FixedSplitter, Geometry, GratingSplitter,
                        QuadrupolePath, RamanSplitter, apparatus_function, mz_response,
                        path_response, response_from_apparatus_function, rhombic_quadrupole,
                        sin_alpha_from_transfer, splitter_energy_transfer)
from .decoherence import (DecoherenceResult, ThresholdResult, averaged_strain_variance,
                          band_edge_scan, bec_amplification, contrast, sweep, threshold_mass,
                          variance, variance_estimate)
from .errors import (ConvergenceError, DivergenceError, DomainError, GWDecoError,
                     OutOfRangeError, ValidationError)
from .filters import Average, Brickwall, NoFilter, brickwall_for, filter_eval
from .montecarlo import (Ensemble, PhaseSampleSet, RealizationConfig, empirical_contrast,
                         sample_phase, synthesize_realizations, validate)
from .quadrature import QuadratureConfig
from .scenario import Scenario, load_scenario, preset
from .spectra import (CompositeSpectrum, CosmologicalSpectrum, PlateauSpectrum,
                      TabulatedSpectrum, load_tabulated, spectrum_eval)
from .tensor import SymTensor3, contract_delta, polarization_basis

__all__ = [name for name in dir() if not name.startswith("_")]
