"""pygibbsuniq module."""
