"""Top-level package for qdcformer."""

__author__ = """qdcformer developers"""
__email__ = 'qdcformer@users.noreply.github.com'
__version__ = '0.1.0'
