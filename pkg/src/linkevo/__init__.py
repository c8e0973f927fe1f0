"""Temporal link formation and persistence analysis on survey-annotated contact networks."""

__version__ = "0.1.0"
