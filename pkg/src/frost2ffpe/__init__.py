"""Frozen-section to FFPE-style histology translation toolkit.

Subpackages cover the full workflow: whole-slide tiling (`wsi`), the
generator/discriminator networks (`models`), the hybrid training objective
(`losses`), the one-sided training loop (`training`), patch and slide
inference (`inference`), quality metrics and reader-study statistics
(`evaluation`), and the survey backend (`survey`).
"""

__version__ = "0.1.0"
