"""Dense tensor storage and kernels."""
