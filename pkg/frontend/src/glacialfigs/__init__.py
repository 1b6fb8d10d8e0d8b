"""Figure rendering for glacialcycle CLI outputs."""
from .io import SchemaError
from .render import KINDS, FigureSpec, render

__version__ = "0.1.0"
