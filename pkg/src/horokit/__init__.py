"""Horosphere toolkit."""
