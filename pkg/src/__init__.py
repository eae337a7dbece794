"""LLM coding, codebook reduction and thematic saturation metrics."""
