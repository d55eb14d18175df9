"""Tests package for AI QA Framework."""
