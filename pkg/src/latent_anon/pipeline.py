"""The anonymization pipeline, per embedding and over streams.

For each embedding the six steps run in order:

    1. predict the public class u and private class i with the pretrained
       classifiers (the true labels are never consulted),
    2. encode with the VAE of class u and sample a latent z,
    3. pick the target private class i' = Modify(i),
    4. look up the class means for (u, i) and (u, i'),
    5. shift the latent: z_hat = z - mean(u, i) + mean(u, i'),
    6. decode z_hat with the decoder of class u.

Every call returns the reconstructed embedding plus a provenance record of
what was predicted and applied.
"""

import zlib
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from .models.vae import sample_latent
from .transform import SecureCoin

STAGES = ("classify_public", "classify_private", "encode", "transform", "decode")

_DEFAULT_RNG = np.random.default_rng()


class PipelineError(RuntimeError):
    pass


@dataclass
class ModelRegistry:
    """Everything the pipeline needs: one VAE per public class, the two
    attribute classifiers, the class-mean table and the Modify policy."""

    vaes: dict
    public_classifier: object
    private_classifier: object
    mean_table: object
    policy: object


def validate_registry(registry):
    """Returns a list of defects; empty means the registry is coherent."""
    defects = []
    u_count = registry.public_classifier.n_classes
    m_count = registry.private_classifier.n_classes
    table = registry.mean_table
    dims = {v.input_dim for v in registry.vaes.values()}
    latents = {v.latent_dim for v in registry.vaes.values()}
    if len(dims) > 1:
        defects.append(f"VAEs disagree on input dim: {sorted(dims)}")
    if len(latents) > 1:
        defects.append(f"VAEs disagree on latent dim: {sorted(latents)}")
    for u in range(u_count):
        if u not in registry.vaes:
            defects.append(f"no VAE for public class {u}")
    if dims and registry.public_classifier.input_dim not in dims:
        defects.append("public classifier input dim does not match the VAEs")
    if dims and registry.private_classifier.input_dim not in dims:
        defects.append("private classifier input dim does not match the VAEs")
    if table.n_public != u_count or table.n_private != m_count:
        defects.append(
            f"table covers ({table.n_public}, {table.n_private}) classes, "
            f"classifiers emit ({u_count}, {m_count})"
        )
    if latents and table.latent_dim not in latents:
        defects.append(
            f"table latent dim {table.latent_dim} does not match the VAEs {sorted(latents)}"
        )
    for u in range(min(u_count, table.n_public)):
        for i in range(min(m_count, table.n_private)):
            if not table.has(u, i):
                defects.append(f"table is missing cell (u={u}, i={i})")
    policy = registry.policy
    if policy.mode != "identity":
        if policy.n_classes != m_count:
            defects.append(
                f"policy covers {policy.n_classes} private classes, classifier emits {m_count}"
            )
        elif m_count >= 2 and any(m == i for i, m in enumerate(policy.mapping)):
            defects.append(f"deterministic mapping {policy.mapping} has a fixed point")
    return defects


@dataclass
class AnonymizationRecord:
    index: int
    predicted_public: int
    predicted_private: int
    target_private: int
    applied: bool
    zhat_crc32: int
    x_hat: np.ndarray = field(repr=False, default=None)


class StageTimings:
    """Per-stage wall-clock accumulator filled by anonymize_embedding."""

    def __init__(self):
        self.samples = {name: [] for name in STAGES}

    def add(self, stage, seconds):
        self.samples[stage].append(seconds)


def anonymize_embedding(
    x,
    registry,
    *,
    index=0,
    noise=None,
    noise_rng=None,
    coin=None,
    latent_mode="sample",
    timings=None,
):
    """Run the six anonymization steps on one flattened embedding.

    noise injects the standard-normal draw for the latent sample (tests);
    otherwise noise_rng provides it. latent_mode "mean" skips sampling and
    uses the posterior mean, a deterministic variant kept for tests and
    debugging. The coin drives probabilistic Modify and defaults to the
    secure source.
    """
    x = np.asarray(x, dtype=float)
    if latent_mode not in ("sample", "mean"):
        raise ValueError(f"unknown latent mode {latent_mode!r}")
    timed = timings is not None
    table = registry.mean_table

    t0 = perf_counter() if timed else 0.0
    u = int(registry.public_classifier.predict(x))
    if timed:
        timings.add("classify_public", perf_counter() - t0)

    t0 = perf_counter() if timed else 0.0
    i = int(registry.private_classifier.predict(x))
    if timed:
        timings.add("classify_private", perf_counter() - t0)

    vae = registry.vaes.get(u)
    if vae is None:
        raise PipelineError(f"no VAE registered for predicted public class {u}")

    t0 = perf_counter() if timed else 0.0
    dist = vae.encode(x)
    if latent_mode == "mean":
        z = dist.mu
    else:
        if noise is None:
            rng = noise_rng if noise_rng is not None else _DEFAULT_RNG
            noise = rng.standard_normal(vae.latent_dim)
        z = sample_latent(dist, noise)
    if timed:
        timings.add("encode", perf_counter() - t0)

    t0 = perf_counter() if timed else 0.0
    if registry.policy.mode == "probabilistic" and coin is None:
        coin = SecureCoin()
    i_prime, applied = registry.policy.modify(i, coin)
    if i_prime != i:
        z_hat = z - table.mean(u, i) + table.mean(u, i_prime)
    else:
        z_hat = z
    crc = zlib.crc32(np.ascontiguousarray(z_hat, dtype="<f8").tobytes())
    if timed:
        timings.add("transform", perf_counter() - t0)

    t0 = perf_counter() if timed else 0.0
    x_hat = vae.decode(z_hat)
    if timed:
        timings.add("decode", perf_counter() - t0)

    record = AnonymizationRecord(
        index=index,
        predicted_public=u,
        predicted_private=i,
        target_private=i_prime,
        applied=applied,
        zhat_crc32=crc,
        x_hat=x_hat,
    )
    return x_hat, record


def anonymize_batch(embeddings, registry, *, noise_rng=None, coin=None, latent_mode="sample"):
    """Elementwise anonymization, order preserved.

    Accepts Embedding objects or raw vectors. Returns (outputs (N, D), records).
    Per-item failures carry the offending index.
    """
    xs = [e.x if hasattr(e, "x") else np.asarray(e, dtype=float) for e in embeddings]
    if registry.policy.mode == "probabilistic" and coin is None:
        coin = SecureCoin()
    outputs = []
    records = []
    for k, x in enumerate(xs):
        try:
            x_hat, record = anonymize_embedding(
                x,
                registry,
                index=k,
                noise_rng=noise_rng,
                coin=coin,
                latent_mode=latent_mode,
            )
        except (PipelineError, ValueError) as exc:
            raise PipelineError(f"embedding {k}: {exc}") from exc
        outputs.append(x_hat)
        records.append(record)
    if not outputs:
        dim = registry.public_classifier.input_dim
        return np.empty((0, dim)), records
    return np.stack(outputs), records


def anonymize_stream(samples, window, stride, registry, **kwargs):
    """Windowed anonymization over a stream of C-channel sample rows.

    Keeps a ring buffer of the last `window` rows; once full, emits one
    anonymized embedding every `stride` rows. Yields (x_hat, record) pairs in
    arrival order. The generator owns the buffer, so each stream has a single
    writer by construction.
    """
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    buffer = None
    n_channels = None
    pos = 0
    seen = 0
    index = 0
    if registry.policy.mode == "probabilistic" and "coin" not in kwargs:
        kwargs = dict(kwargs, coin=SecureCoin())
    for row in samples:
        row = np.asarray(row, dtype=float).reshape(-1)
        if n_channels is None:
            n_channels = row.size
            buffer = np.zeros((window, n_channels))
        elif row.size != n_channels:
            raise PipelineError(
                f"channel count changed mid-stream: {row.size} after {n_channels}"
            )
        buffer[pos] = row
        pos = (pos + 1) % window
        seen += 1
        if seen >= window and (seen - window) % stride == 0:
            # rows in arrival order: oldest starts at pos once the buffer is full
            ordered = np.concatenate((buffer[pos:], buffer[:pos])) if pos else buffer
            yield anonymize_embedding(ordered.reshape(-1), registry, index=index, **kwargs)
            index += 1


def make_anonymizer(registry, seed=None, latent_mode="sample"):
    """Batch-anonymization closure with its own seeded noise stream.

    The probabilistic coin stays cryptographically secure regardless of the
    seed; the seed only pins the latent sampling noise.
    """
    noise_rng = np.random.default_rng(seed)

    def anonymize(embeddings):
        outputs, _ = anonymize_batch(
            embeddings, registry, noise_rng=noise_rng, latent_mode=latent_mode
        )
        return outputs

    return anonymize
