"""Training loop and deployment-time action selection."""
