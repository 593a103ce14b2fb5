"""Unit test package for qdcformer."""
