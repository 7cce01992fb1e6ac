import numpy as np

from abc import ABC, abstractmethod
from pydantic import BaseModel
from typing import Iterator, Optional, Tuple

Batch = Tuple[np.ndarray, np.ndarray]


class Dataset(BaseModel, ABC):
    """
    Abstract base class representing a dataset of (input, target) image pairs.

    Concrete implementations provide batch iteration, their size and a short description.
    """

    @abstractmethod
    def batch_iterator(self, batch_size: int = 32, order: Optional[np.ndarray] = None) -> Iterator[Batch]:
        """
        Yields batches of (input, target) arrays shaped `(N, 1, H, W)`.

        Args:
            batch_size (int, optional): Size of each batch to be yielded. Defaults to 32.
            order (np.ndarray, optional): Permutation of record indices. Defaults to storage order.

        Returns:
            Iterator[Batch]: Batches of (input, target) arrays.
        """

    @abstractmethod
    def __len__(self) -> int:
        """
        Provides the number of records in the dataset.

        Returns:
            int: Total number of records in the dataset.
        """

    @abstractmethod
    def info(self) -> None:
        """
        Displays information about the dataset.
        """
