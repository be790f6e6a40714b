"""entryflow: continuum (density-based) uncertainty propagation for planetary entry.

The pipeline transports a joint PDF along entry-dynamics characteristics,
reconstructs it from the scattered samples with alpha-shape simplicial
interpolation, and derives marginals, load distributions, and compliance
probabilities, with a Monte Carlo baseline over the same dynamics.
"""

__version__ = "0.1.0"
