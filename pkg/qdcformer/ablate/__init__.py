"""Ablation suites: stitching and context length."""
