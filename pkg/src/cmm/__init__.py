"""Contextual measurement models."""
