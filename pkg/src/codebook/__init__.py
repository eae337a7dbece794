"""Cumulative codebooks (TCC/UCC) and their CSV artifacts."""
