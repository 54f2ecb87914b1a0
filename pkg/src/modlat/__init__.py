"""Canonical-form algebra for the classical modal logic E."""
