class TrainingError(Exception):
    """Training failed (divergence or invalid configuration)."""
