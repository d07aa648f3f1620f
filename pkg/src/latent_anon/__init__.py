"""latent-anon: sensor time-series anonymization in the latent space of
attribute-specific variational autoencoders.

The package trains one VAE per public attribute class, computes per-class
mean latent vectors, and obfuscates windowed sensor data by shifting each
latent between private-class means before decoding, either always
(deterministic) or with probability 1/2 from a secure coin (probabilistic).
Harnesses measure the privacy gain against a re-identification attacker and
the per-stage latency against the real-time budget.
"""

from . import attack, bench, data, models, nn, pipeline, transform

__version__ = "0.1.0"

__all__ = ["attack", "bench", "data", "models", "nn", "pipeline", "transform", "__version__"]
