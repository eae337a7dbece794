"""LLM gateway, prompt templates and embedding providers."""
