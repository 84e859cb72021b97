"""Synthetic clinical-interview summaries via two-step chain-of-thought
prompting, and their utility / fidelity / privacy evaluation."""

__version__ = "0.1.0"
