"""Link-level THz MIMO detection laboratory.

Submodules: ``linalg`` (QRD, sorted QRD, WRD, LLL), ``channel`` (fading,
LoS geometry, wideband multipath), ``constellation`` (Gray QAM),
``detectors`` (ML through SQLD), ``analysis`` (PEP bounds), ``complexity``
(FLOPs models) and ``harness`` (Monte Carlo engine and CLI).
"""

__version__ = "0.1.0"
