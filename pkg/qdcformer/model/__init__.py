"""Return-conditioned conv policy and the twin Q-networks."""
