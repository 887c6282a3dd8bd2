"""Static SVG line charts of MNE curves.

Accepts either curve CSVs (step, median, q25, q75), drawn as a median line
with an IQR band, or trace CSVs (step, mne, ...), drawn as a single line.
The y axis is log-scaled MNE.
"""
import logging
from pathlib import Path
from typing import Dict, Optional, Union

import matplotlib

matplotlib.use("Agg")
from matplotlib import pyplot as plt  # noqa: E402

from src.harness.output import read_csv  # noqa: E402
from src.mdp.errors import InvalidArgumentError  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# fixed id salt and no timestamp keep repeated renders identical
plt.rcParams["svg.hashsalt"] = "ttql"


def _floats(values):
    return [float(v) for v in values]


def plot_curves(series: Dict[str, PathLike], out_path: PathLike, title: Optional[str] = None) -> Path:
    """Draw one line per ``{label: csv_path}`` entry into an SVG file."""
    if not series:
        raise InvalidArgumentError("nothing to plot")
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)

    fig, ax = plt.subplots(figsize=(8, 5))
    for label, csv_path in series.items():
        csv_path = Path(csv_path)
        if not csv_path.is_file():
            raise InvalidArgumentError(f"CSV '{csv_path}' not found")
        columns = read_csv(csv_path)
        if "step" not in columns:
            raise InvalidArgumentError(f"CSV '{csv_path}' has no step column")
        steps = _floats(columns["step"])
        if "median" in columns:
            line = ax.plot(steps, _floats(columns["median"]), label=label, linewidth=1.2)[0]
            ax.fill_between(
                steps,
                _floats(columns["q25"]),
                _floats(columns["q75"]),
                color=line.get_color(),
                alpha=0.2,
                linewidth=0,
            )
        elif "mne" in columns:
            ax.plot(steps, _floats(columns["mne"]), label=label, linewidth=1.2)
        else:
            raise InvalidArgumentError(f"CSV '{csv_path}' has neither a median nor an mne column")

    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("MNE")
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small", ncol=2)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote chart to {out_path}")
    return out_path
