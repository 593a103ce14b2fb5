"""Trajectory data model, dataset file I/O and context-window sampling."""
