"""Judge compiler: example banks, bootstrap random search, prompt files."""
