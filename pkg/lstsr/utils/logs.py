import math
import threading

from contextlib import contextmanager
from rich import box
from rich.console import Console
from rich.progress import BarColumn, Progress, TextColumn, TimeElapsedColumn
from rich.table import Table
from typing import Callable, Iterator, Optional
from .internal_data import InternalDataFrame, InternalSeries

console = Console()
error_console = Console(stderr=True, style="bold red")


def print_text(text: str, style=None):
    console.print(text, style=style)


def print_error(text: str):
    error_console.print(text)


def _format_cell(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return '+inf' if value > 0 else '-inf'
        return f'{value:.4f}'
    return str(value)


def print_dataframe(dataframe: InternalDataFrame, num_rows: Optional[int] = 10, title: Optional[str] = None):
    table = Table(show_header=True, header_style="bold magenta", title=title)

    for column in dataframe.columns:
        table.add_column(str(column))

    rows = dataframe if num_rows is None else dataframe.iloc[:num_rows]
    for value_list in rows.values.tolist():
        table.add_row(*[_format_cell(x) for x in value_list])

    table.row_styles = ["none", "dim"]
    table.box = box.SIMPLE_HEAD

    console.print(table)


def print_series(data: InternalSeries):
    table = Table(show_header=True, header_style="bold magenta")

    for index in data.index:
        table.add_column(str(index))

    table.add_row(*[_format_cell(value) for value in data])

    console.print(table)


def progress_bar() -> Progress:
    """Progress display of the training loop; `progress_task` wraps it for tiled inference and kriging."""
    return Progress(
        TextColumn("[progress.description]{task.description}"),
        BarColumn(),
        TextColumn("{task.completed}/{task.total}"),
        TimeElapsedColumn(),
        console=console,
        transient=True,
    )


@contextmanager
def progress_task(description: str, total: int, visible: bool = True) -> Iterator[Callable[..., None]]:
    """
    Yield an `advance(n=1)` callback for a loop of `total` steps.

    The bar is drawn only when `visible` and on the main thread; calls fanned out to worker
    threads get a no-op callback, since only one live display can be active at a time.
    """
    if not visible or threading.current_thread() is not threading.main_thread():
        yield lambda n=1: None
        return
    with progress_bar() as progress:
        task = progress.add_task(description, total=total)
        yield lambda n=1: progress.update(task, advance=n)
