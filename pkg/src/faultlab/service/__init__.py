"""HTTP service and shared request/response models."""
