# services/reporting.py
import io
import logging
import pathlib
import sys
from typing import Optional, Union

import numpy as np
import pandas as pd

from distributions import StrictPareto, TLPa
from services.errors import TlpaInputError
from services.models import ExceedanceSample, QQTable, SPFit, TLPaFit

logger = logging.getLogger(__name__)

PLOTTING_POSITIONS = ("weibull", "hazen")
FLOAT_FORMAT = "%.17g"


def plotting_positions(n: int, convention: str = "weibull") -> np.ndarray:
    i = np.arange(1, n + 1, dtype=float)
    if convention == "weibull":
        return i / (n + 1.0)
    if convention == "hazen":
        return (i - 0.5) / n
    raise TlpaInputError(f"Unknown plotting position '{convention}' (expected one of {', '.join(PLOTTING_POSITIONS)})")


def qq_data(s: ExceedanceSample, u: float, sp: SPFit, tlpa: TLPaFit, plotting_position: str = "weibull") -> QQTable:
    """
    Log quantiles of the fitted SP and TLPa against the log sorted observations above u.

    Quantiles are taken at plotting positions of the sorted excesses and shifted by log u
    so they sit on the scale of the raw observations.
    """
    if not u > 0:
        raise TlpaInputError(f"Threshold must be positive, got {u}")
    p = plotting_positions(s.n, plotting_position)
    log_u = np.log(u)
    return QQTable(
        log_sorted_obs=np.log(u * s.y),
        log_q_sp=StrictPareto(gamma=sp.gamma_hat).log_quantile(p) + log_u,
        log_q_tlpa=TLPa(alpha=tlpa.alpha_hat, gamma=tlpa.gamma_hat).log_quantile(p) + log_u,
    )


def hist_data(values, bins: Union[str, int] = "fd", threshold: Optional[float] = None) -> pd.DataFrame:
    """
    Bin counts of `values`; `contains_threshold` marks the bin holding the threshold, if one is given.

    `bins` is a numpy bin rule ("fd" is Freedman-Diaconis) or a bin count.
    """
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise TlpaInputError("Cannot build a histogram of no values")
    if isinstance(bins, str) and bins.isdigit():
        bins = int(bins)
    edges = np.histogram_bin_edges(arr, bins=bins)
    counts, _ = np.histogram(arr, bins=edges)
    frame = pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts.astype(np.int64)})
    marker = np.zeros(len(frame), dtype=bool)
    if threshold is not None:
        # np.histogram bins are half-open except the last, which includes its right edge
        index = int(np.searchsorted(edges, threshold, side="right")) - 1
        if index == len(frame) and threshold == edges[-1]:
            index -= 1
        if 0 <= index < len(frame):
            marker[index] = True
        else:
            logger.warning(f"[Reporting] Threshold {threshold} lies outside the histogram range")
    frame["contains_threshold"] = marker.astype(np.int64)
    return frame


def fit_frame(s: ExceedanceSample, sp: SPFit, tlpa: TLPaFit, level: float = 0.95) -> pd.DataFrame:
    """One row with the SP and TLPa estimates at a threshold, plus the SP credible interval of the EVI."""
    evi_lo, evi_hi = sp.evi_interval(level)
    return pd.DataFrame([{
        "rank": s.rank, "u": s.u, "n_exceed": s.n,
        "gamma_sp": sp.gamma_hat, "evi_sp": sp.evi, "evi_sp_lo": evi_lo, "evi_sp_hi": evi_hi,
        "alpha_hat": tlpa.alpha_hat, "gamma_tlpa": tlpa.gamma_hat, "evi_tlpa": tlpa.evi,
        "alpha_sd": tlpa.alpha_sd, "gamma_sd": tlpa.gamma_sd,
    }])


def format_table(frame: pd.DataFrame) -> str:
    """CSV text: header row, comma delimiter, LF line endings, 17 significant digits."""
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def write_table(frame: pd.DataFrame, out: Optional[Union[str, pathlib.Path]] = None) -> None:
    """Writes `frame` as UTF-8 CSV to `out`, or to standard output when `out` is None or "-"."""
    text = format_table(frame)
    if out is None or str(out) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    out_path = pathlib.Path(out).expanduser()
    if out_path.parent and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    logger.info(f"[Reporting] Wrote {len(frame)} rows to {out_path}")
