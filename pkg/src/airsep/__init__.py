"""Decentralized RL separation assurance for simulated air-corridor traffic."""

__version__ = "0.1.0"
