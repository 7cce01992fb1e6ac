import pandas as pd

# Internal tables representation (metric reports, benchmark tables, training history).
InternalDataFrame = pd.DataFrame
InternalSeries = pd.Series


def write_csv(df: InternalDataFrame, path) -> None:
    """Write a table as CSV: header row, '.' decimal separator, no index column."""
    df.to_csv(path, index=False, decimal='.')
