"""minidot: an executable workbench for the System D family of calculi."""

__version__ = "0.1.0"
