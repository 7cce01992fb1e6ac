from .errors import LstsrError, GridFormatError, ShapeError, CheckpointError, GraphError, DivergenceError
from .internal_data import InternalDataFrame, InternalSeries, write_csv
