from .config import TrainConfig
from .trainer import TrainHistory, train, evaluate, predict_dataset, HISTORY_COLUMNS
from .inference import super_resolve, tile_starts, feather_window, TILE_SIZE, TILE_OVERLAP
