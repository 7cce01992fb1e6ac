from .base import SuperResolutionMethod
from .baselines import BicubicMethod, AtprkMethod
from .mrunet import MruNetMethod
