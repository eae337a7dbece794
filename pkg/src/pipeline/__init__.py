"""Pipeline steps: corpus, initial coding, reduction, saturation, similarity, report."""
