from .base import Dataset
from .patches import (
    PatchDataset, SplitTag, build_dataset, save_dataset, load_dataset, available_splits, DEFAULT_SPLIT
)
