"""Experiment orchestration: config, manifests, run artifacts, CLI."""
