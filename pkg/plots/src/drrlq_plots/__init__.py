"""Figure generation for drrlq benchmark and convergence artifacts."""

from .figures import FIGURE_KINDS, FigureSpec, Series, build_series, render

__version__ = "0.1.0"

__all__ = ["FIGURE_KINDS", "FigureSpec", "Series", "build_series",
           "render", "__version__"]
