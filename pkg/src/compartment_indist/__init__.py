"""Structural indistinguishability of linear compartmental models."""
