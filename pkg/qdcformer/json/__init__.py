"""Checkpoint document keys and reader/writer."""
