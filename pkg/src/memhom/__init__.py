"""Two-source Hong-Ou-Mandel interference of Raman photons from atomic-ensemble memories.

Submodules:

- :mod:`memhom.angular_momentum`: exact Clebsch-Gordan algebra and the write-process mixing angles.
- :mod:`memhom.fock_engine`: truncated Fock-space simulator with threshold detection.
- :mod:`memhom.analytic_rates`: closed-form two- and four-fold coincidence rates.
- :mod:`memhom.trial_sampler`: seeded Monte Carlo of the counting procedure.
- :mod:`memhom.cli`: config-driven command-line runs producing CSV tables.
"""

__version__ = "0.1.0"
