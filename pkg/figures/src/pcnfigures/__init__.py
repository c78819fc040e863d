"""Figure rendering for pcnsim result directories.

Strictly a consumer of the documented CSV contracts; the simulator stays
the single source of numerical truth.
"""

__version__ = "0.1.0"

from .render import FigureSpec, MissingColumnError, build_figure, render, render_all

__all__ = ["FigureSpec", "MissingColumnError", "build_figure", "render", "render_all"]
