"""Semantic kernels built from semantic graphs.

Graph kernels (heat ``e^{-tL}`` and Matérn ``(2ν/κ² I + L)^{-ν}``) are
normalized to unit trace before use. The block-diagonal semantic-entropy
kernel places ``p(C)/m_C`` on every entry within cluster ``C``, so its von
Neumann entropy equals the Shannon entropy of the cluster probabilities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidLengthscale, InvalidParams, InvalidProbs, ValidationError
from .graph import Clustering, SemanticGraph, laplacian
from .linalg import as_symmetric, spectral_map, unit_trace_normalize, von_neumann_entropy

FAMILIES = ("heat", "matern", "se_block", "combination")
PROB_TOL = 1e-9


@dataclass(frozen=True)
class KernelConfig:
    """Kernel family and hyperparameters.

    Defaults are ``t=0.3``, ``nu=1``, ``kappa=1`` on the unnormalized
    Laplacian. ``combination`` mixes ``components`` with convex weights
    ``alpha``; with ``normalize_components`` each graph component is brought
    to unit trace before mixing, otherwise the mixture is normalized once
    afterwards.
    """

    family: str = "heat"
    t: float = 0.3
    nu: float = 1.0
    kappa: float = 1.0
    normalized_laplacian: bool = False
    components: tuple["KernelConfig", ...] = ()
    alpha: tuple[float, ...] = ()
    normalize_components: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown kernel family {self.family!r}")
        if self.family == "heat" and not self.t > 0:
            raise InvalidLengthscale(f"heat lengthscale must be positive, got {self.t}")
        if self.family == "matern" and not (self.nu > 0 and self.kappa > 0):
            raise InvalidParams(f"Matérn needs nu > 0 and kappa > 0, got {self.nu}, {self.kappa}")
        if self.family == "combination":
            object.__setattr__(self, "components", tuple(self.components))
            object.__setattr__(self, "alpha", tuple(float(a) for a in self.alpha))
            _check_convex(self.alpha, len(self.components))

    @classmethod
    def heat(cls, t: float = 0.3, normalized_laplacian: bool = False) -> "KernelConfig":
        return cls("heat", t=t, normalized_laplacian=normalized_laplacian)

    @classmethod
    def matern(cls, nu: float = 1.0, kappa: float = 1.0, normalized_laplacian: bool = False) -> "KernelConfig":
        return cls("matern", nu=nu, kappa=kappa, normalized_laplacian=normalized_laplacian)

    @classmethod
    def se_block(cls) -> "KernelConfig":
        return cls("se_block")

    @classmethod
    def full(cls, t: float = 0.3, alpha: float = 0.5, **kw) -> "KernelConfig":
        """``alpha * heat + (1 - alpha) * se_block``."""
        return cls(
            "combination",
            components=(cls.heat(t, kw.pop("normalized_laplacian", False)), cls.se_block()),
            alpha=(alpha, 1.0 - alpha),
            **kw,
        )

    @property
    def lengthscale(self) -> float:
        if self.family == "heat":
            return self.t
        if self.family == "matern":
            return self.kappa
        if self.family == "combination":
            return min((c.lengthscale for c in self.components if c.family != "se_block"), default=0.0)
        return 0.0

    @property
    def needs_probs(self) -> bool:
        return self.family == "se_block" or any(c.needs_probs for c in self.components)

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.family == "heat":
            d["t"] = self.t
        elif self.family == "matern":
            d.update(nu=self.nu, kappa=self.kappa)
        elif self.family == "combination":
            d["components"] = [c.to_dict() for c in self.components]
            d["alpha"] = list(self.alpha)
            d["normalize_components"] = self.normalize_components
        if self.family in ("heat", "matern"):
            d["normalized_laplacian"] = self.normalized_laplacian
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelConfig":
        d = dict(d)
        if "components" in d:
            d["components"] = tuple(cls.from_dict(c) for c in d["components"])
        if "alpha" in d:
            a = d["alpha"]
            d["alpha"] = tuple(a) if isinstance(a, (list, tuple)) else (a, 1.0 - a)
        return cls(**d)


@dataclass(frozen=True, eq=False)
class SemanticKernel:
    matrix: np.ndarray
    config: KernelConfig
    node_kind: str = "answers"
    # order that makes cluster blocks contiguous (se_block kernels only)
    permutation: tuple[int, ...] | None = field(default=None)

    @property
    def entropy(self) -> float:
        return von_neumann_entropy(self.matrix)


def _check_convex(alpha: Sequence[float], k: int) -> None:
    if len(alpha) != k or k == 0:
        raise InvalidParams(f"need one weight per component, got {len(alpha)} for {k}")
    if any(a < 0 for a in alpha) or abs(sum(alpha) - 1.0) > PROB_TOL:
        raise InvalidParams(f"combination weights {tuple(alpha)} are not convex")


def _check_probs(probs, m: int) -> np.ndarray:
    p = np.asarray(probs, dtype=float)
    if p.shape != (m,):
        raise InvalidProbs(f"expected {m} cluster probabilities, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise InvalidProbs(f"not a probability vector: {p.tolist()}")
    return p


def heat_kernel(L, t: float) -> np.ndarray:
    """``e^{-tL}`` through the eigendecomposition of ``L``."""
    if not t > 0:
        raise InvalidLengthscale(f"heat lengthscale must be positive, got {t}")
    return spectral_map(L, lambda lam: np.exp(-t * lam))


def matern_kernel(L, nu: float, kappa: float, scaled: bool = False) -> np.ndarray:
    """``(2ν/κ² I + L)^{-ν}``.

    With ``scaled=True`` the result is multiplied by ``(2ν/κ²)^ν``, i.e.
    ``(I + κ²L/2ν)^{-ν}``. Normalization removes the factor anyway and the
    scaled form does not underflow for large ``ν``.
    """
    if not (nu > 0 and kappa > 0):
        raise InvalidParams(f"Matérn needs nu > 0 and kappa > 0, got {nu}, {kappa}")
    shift = 2.0 * nu / kappa**2
    if scaled:
        return spectral_map(L, lambda lam: (1.0 + lam / shift) ** (-nu))
    return spectral_map(L, lambda lam: (shift + lam) ** (-nu))


def se_block_kernel(clustering: Clustering, cluster_probs) -> SemanticKernel:
    """Block-diagonal kernel whose entropy is the semantic entropy.

    Entry ``(i, j)`` is ``p(C)/m_C`` when both answers belong to cluster ``C``
    and zero otherwise. The matrix keeps the answer order; ``permutation``
    records the stable ordering in which the blocks are contiguous.
    """
    p = _check_probs(cluster_probs, clustering.M)
    a = np.asarray(clustering.assignment)
    order = np.argsort(a, kind="stable")
    sizes = np.asarray(clustering.sizes, dtype=float)
    blocks = [np.full((int(m), int(m)), pc / m) for pc, m in zip(p, sizes)]
    B = _block_diag(blocks)
    inv = np.empty_like(order)
    inv[order] = np.arange(len(order))
    K = B[np.ix_(inv, inv)]
    return SemanticKernel(K, KernelConfig.se_block(), "answers", tuple(order.tolist()))


def _block_diag(blocks: list[np.ndarray]) -> np.ndarray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n))
    k = 0
    for b in blocks:
        m = b.shape[0]
        out[k : k + m, k : k + m] = b
        k += m
    return out


def combine_kernels(kernels: Sequence, alphas: Sequence[float]) -> np.ndarray:
    """Convex combination ``Σ α_i K_i`` of equally sized kernels."""
    mats = [as_symmetric(k.matrix if isinstance(k, SemanticKernel) else k) for k in kernels]
    _check_convex(alphas, len(mats))
    shape = mats[0].shape
    if any(m.shape != shape for m in mats):
        raise DimensionMismatch(f"kernel shapes differ: {[m.shape for m in mats]}")
    return sum(a * m for a, m in zip(alphas, mats))


def build_kernel(
    G: SemanticGraph,
    cfg: KernelConfig,
    clustering: Clustering | None = None,
    probs=None,
) -> SemanticKernel:
    """Construct the configured kernel on ``G`` as a density matrix.

    ``clustering`` and ``probs`` are required when the configuration uses the
    block-diagonal SE kernel. On a cluster-level graph the SE kernel is
    ``diag(probs)`` and ``clustering`` may be omitted.
    """
    K = _raw(G, cfg, clustering, probs, normalize=True)
    perm = None
    if cfg.family == "se_block" and G.node_kind == "answers":
        perm = se_block_kernel(clustering, probs).permutation
    return SemanticKernel(K, cfg, G.node_kind, perm)


def _raw(G, cfg, clustering, probs, normalize):
    if cfg.family in ("heat", "matern"):
        L = laplacian(G, cfg.normalized_laplacian)
        if cfg.family == "heat":
            K = heat_kernel(L, cfg.t)
        else:
            K = matern_kernel(L, cfg.nu, cfg.kappa, scaled=True)
        return unit_trace_normalize(K) if normalize else K
    if cfg.family == "se_block":
        if probs is None:
            raise InvalidProbs("the SE kernel needs cluster probabilities")
        if G.node_kind == "clusters":
            return np.diag(_check_probs(probs, G.n))
        if clustering is None:
            raise ValidationError("the SE kernel over answers needs a clustering")
        if clustering.n != G.n:
            raise DimensionMismatch(f"clustering covers {clustering.n} answers, graph has {G.n}")
        return se_block_kernel(clustering, probs).matrix
    # combination
    parts = [_raw(G, c, clustering, probs, cfg.normalize_components) for c in cfg.components]
    if cfg.normalize_components:
        return combine_kernels(parts, cfg.alpha)
    return unit_trace_normalize(combine_kernels(parts, cfg.alpha))
