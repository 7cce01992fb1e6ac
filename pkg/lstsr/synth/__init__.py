from .base import FieldSpec, Generator, generate, gaussian_random_field, LST_BOUNDS, NDVI_BOUNDS
