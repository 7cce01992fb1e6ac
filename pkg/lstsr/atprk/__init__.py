from .regression import fit_regression
from .variogram import Variogram, VariogramModel, fit_variogram, empirical_semivariogram, MIN_VARIOGRAM_PIXELS
from .kriging import AtprkModel, atpk_residuals, kriging_weights, regularized_covariances, DEFAULT_NEIGHBORHOOD
from .sharpen import atprk_sharpen, fit_atprk
