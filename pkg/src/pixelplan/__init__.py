"""pixelplan: vision-only motion planning and control over image-space
keypoint states."""

__version__ = "0.1.0"
