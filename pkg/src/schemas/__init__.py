"""Pydantic models for codes, codebooks, judges and saturation reports."""
