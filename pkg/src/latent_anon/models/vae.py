"""Variational autoencoder with a Gaussian latent and a latent classification head.

One model serves one public attribute class. The encoder maps an embedding to
(mu, logvar) of a diagonal Gaussian posterior, the decoder reconstructs from a
latent point, and a single softmax layer on the latent predicts the private
attribute class while training. That head shapes the latent space so private
classes become linearly separable; at anonymization time it is not used.

Training minimizes, summed over a batch,

    reconstruction + beta * KL + alpha * cross_entropy(head(z), private label)

where reconstruction is half squared error (unit-variance Gaussian likelihood)
and KL is the closed form against a standard normal prior, including its 1/2
factor, which the beta weight therefore multiplies.
"""

from dataclasses import dataclass

import numpy as np

from ..nn.layers import MLP, Dense
from ..nn.losses import cross_entropy_from_labels, squared_error
from ..nn.tape import Tape


@dataclass
class LatentDistribution:
    """Encoder output: mean and log variance (natural log of sigma squared)."""

    mu: np.ndarray
    logvar: np.ndarray


@dataclass
class LossBreakdown:
    reconstruction: float
    kl: float
    classification: float
    total: float
    alpha: float
    beta: float


def sample_latent(dist, noise):
    """Reparameterized sample: z = mu + exp(logvar / 2) * noise."""
    noise = np.asarray(noise, dtype=float)
    if noise.shape != np.shape(dist.mu):
        raise ValueError(f"noise shape {noise.shape} does not match mu {np.shape(dist.mu)}")
    return dist.mu + np.exp(0.5 * dist.logvar) * noise


def kl_gaussian(dist):
    """Closed-form KL(q || N(0, I)) for a diagonal Gaussian posterior.

    -1/2 * sum_j (1 + logvar_j - exp(logvar_j) - mu_j^2), clamped at zero to
    absorb rounding at the optimum. 1-D input gives a float, 2-D one value
    per row.
    """
    mu = np.asarray(dist.mu, dtype=float)
    logvar = np.asarray(dist.logvar, dtype=float)
    if mu.shape != logvar.shape:
        raise ValueError("mu and logvar must have the same shape")
    per = -0.5 * np.sum(1.0 + logvar - np.exp(logvar) - mu * mu, axis=-1)
    per = np.maximum(per, 0.0)
    return float(per) if mu.ndim == 1 else per


def reconstruction_loss(x, x_hat):
    """Half squared error; the Gaussian unit-variance log-likelihood up to a constant."""
    return squared_error(x, x_hat)


class VaeModel:
    """Encoder/decoder pair plus the private-attribute head, for one public class."""

    def __init__(
        self,
        input_dim,
        latent_dim,
        n_private,
        public_class=0,
        hidden=(64, 32),
        rng=None,
        alpha=2.0,
        beta=1.0,
    ):
        if rng is None:
            rng = np.random.default_rng()
        hidden = tuple(hidden)
        if not hidden:
            raise ValueError("need at least one hidden layer")
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.n_private = n_private
        self.public_class = public_class
        self.hidden = hidden
        self.alpha = alpha
        self.beta = beta
        self.encoder = MLP([input_dim, *hidden], ["tanh"] * len(hidden), rng)
        self.mu_head = Dense(hidden[-1], latent_dim, "identity", rng)
        self.logvar_head = Dense(hidden[-1], latent_dim, "identity", rng)
        self.decoder = MLP(
            [latent_dim, *hidden[::-1], input_dim],
            ["tanh"] * len(hidden) + ["identity"],
            rng,
        )
        self.class_head = Dense(latent_dim, n_private, "softmax", rng)

    def parameters(self):
        return (
            self.encoder.parameters()
            + self.mu_head.parameters()
            + self.logvar_head.parameters()
            + self.decoder.parameters()
            + self.class_head.parameters()
        )

    def named_tensors(self):
        out = {}
        for prefix, mlp in (("encoder", self.encoder), ("decoder", self.decoder)):
            for k, layer in enumerate(mlp.layers):
                out[f"{prefix}.{k}.W"] = layer.W
                out[f"{prefix}.{k}.b"] = layer.b
        for prefix, layer in (
            ("mu_head", self.mu_head),
            ("logvar_head", self.logvar_head),
            ("class_head", self.class_head),
        ):
            out[f"{prefix}.W"] = layer.W
            out[f"{prefix}.b"] = layer.b
        return out

    def encode(self, x):
        """Deterministic map to the posterior parameters (mu, logvar)."""
        h, _ = self.encoder.forward(x)
        mu, _ = self.mu_head.forward(h)
        logvar, _ = self.logvar_head.forward(h)
        return LatentDistribution(mu=mu, logvar=logvar)

    def decode(self, z):
        x_hat, _ = self.decoder.forward(z)
        return x_hat

    def classify_latent(self, z):
        """Softmax distribution of the private-attribute head at z."""
        probs, _ = self.class_head.forward(z)
        return probs

    def reconstruct(self, x):
        """Deterministic round trip through the posterior mean."""
        return self.decode(self.encode(x).mu)


def _forward_pass(model, x, labels, noise):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.shape[0] < 1:
        raise ValueError("empty batch")
    y = np.atleast_1d(np.asarray(labels, dtype=int))
    if y.shape != (xb.shape[0],):
        raise ValueError(f"expected {xb.shape[0]} labels, got shape {y.shape}")
    if y.min() < 0 or y.max() >= model.n_private:
        raise ValueError(f"private label out of range [0, {model.n_private})")
    eb = np.asarray(noise, dtype=float)
    if single and eb.ndim == 1:
        eb = eb[None, :]
    if eb.shape != (xb.shape[0], model.latent_dim):
        raise ValueError(f"noise shape {np.shape(noise)} does not match (batch, latent_dim)")

    h, enc_caches = model.encoder.forward(xb)
    mu, mu_cache = model.mu_head.forward(h)
    logvar, lv_cache = model.logvar_head.forward(h)
    sigma = np.exp(0.5 * logvar)
    z = mu + sigma * eb
    x_hat, dec_caches = model.decoder.forward(z)
    probs, cls_cache = model.class_head.forward(z)

    recon = squared_error(xb, x_hat)
    kl = kl_gaussian(LatentDistribution(mu, logvar))
    ce = cross_entropy_from_labels(probs, y)
    state = {
        "xb": xb,
        "y": y,
        "eb": eb,
        "enc_caches": enc_caches,
        "mu_cache": mu_cache,
        "lv_cache": lv_cache,
        "dec_caches": dec_caches,
        "cls_cache": cls_cache,
        "mu": mu,
        "logvar": logvar,
        "sigma": sigma,
        "z": z,
        "x_hat": x_hat,
        "probs": probs,
        "recon": recon,
        "kl": kl,
        "ce": ce,
    }
    return state


def _breakdown(state, alpha, beta):
    r = float(state["recon"].sum())
    k = float(state["kl"].sum())
    c = float(state["ce"].sum())
    return LossBreakdown(
        reconstruction=r,
        kl=k,
        classification=c,
        total=float(r + beta * k + alpha * c),
        alpha=alpha,
        beta=beta,
    )


def augmented_loss(model, x, labels, alpha, beta, noise):
    """Batch loss summed over items: recon + beta * KL + alpha * head cross entropy.

    noise is the standard-normal draw for the reparameterized latent sample,
    one row per item; tests inject it, trainers draw it fresh.
    """
    state = _forward_pass(model, x, labels, noise)
    return _breakdown(state, alpha, beta)


def loss_and_gradients(model, x, labels, alpha, beta, noise):
    """Loss breakdown plus a tape holding gradients for model.parameters().

    The reverse sweep is hand-orchestrated: the latent gradient collects the
    decoder branch and the alpha-weighted classification branch, then flows
    into mu and logvar together with the beta-weighted KL terms.
    """
    state = _forward_pass(model, x, labels, noise)
    tape = Tape()
    xb, y, eb = state["xb"], state["y"], state["eb"]
    mu, logvar, sigma, z = state["mu"], state["logvar"], state["sigma"], state["z"]
    b = xb.shape[0]

    d_xhat = state["x_hat"] - xb
    d_z = model.decoder.backward(d_xhat, state["dec_caches"], tape)

    # fused softmax + cross entropy; exact while probs stay above the log floor
    g = state["probs"].copy()
    g[np.arange(b), y] -= 1.0
    g *= alpha
    d_z = d_z + model.class_head.backward_preactivation(g, state["cls_cache"], tape)

    d_mu = d_z + beta * mu
    d_logvar = d_z * eb * 0.5 * sigma + beta * 0.5 * (np.exp(logvar) - 1.0)
    d_h = model.mu_head.backward_into(d_mu, state["mu_cache"], tape)
    d_h = d_h + model.logvar_head.backward_into(d_logvar, state["lv_cache"], tape)
    model.encoder.backward(d_h, state["enc_caches"], tape)
    return _breakdown(state, alpha, beta), tape
