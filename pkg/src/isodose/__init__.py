"""Centered isotonic regression for dose-response studies."""
