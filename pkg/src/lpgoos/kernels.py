"""Link functions of the latent position model and an empirical feature map.

All kernels are scaled so that they take values in ``[0, 1]`` on their
declared domain, which lets them serve directly as edge probabilities.
Positive rescaling keeps each kernel positive definite.
"""

from dataclasses import dataclass, field
import json

import numpy as np

from .errors import DegenerateSpectrumError, DomainError
from .spectral import top_eigenpairs

KINDS = ("dot-product", "gaussian", "exponential", "binomial", "inverse-multiquadric")

# kernel parameters that matter for each kind
_PARAMS = {
    "dot-product": (),
    "gaussian": ("sigma",),
    "exponential": ("radius",),
    "binomial": ("alpha", "radius"),
    "inverse-multiquadric": ("c", "beta"),
}

_SIMPLEX_TOL = 1e-12
_BINOMIAL_MAX_INNER = 1.0 - 1e-6


@dataclass(frozen=True)
class KernelSpec:
    """A positive definite link function with values in [0, 1].

    Parameters
    ----------
    kind : str
        One of ``KINDS``.
    domain_dim : int, optional
        Ambient dimension of the latent space. ``None`` accepts any dimension.
    sigma : float
        Gaussian bandwidth, ``exp(-||x - y||^2 / sigma^2)``.
    alpha : float
        Binomial exponent, ``((1 - radius^2) / (1 - <x, y>))^alpha``.
    c, beta : float
        Inverse multiquadric parameters, ``(c^2 / (c^2 + ||x - y||^2))^beta``.
    radius : float
        Norm bound of the domain for the exponential and binomial kernels.
        The exponential kernel is ``exp(<x, y> - radius^2)``.
    """

    kind: str
    domain_dim: int = None
    sigma: float = 1.0
    alpha: float = 1.0
    c: float = 1.0
    beta: float = 1.0
    radius: float = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError("unknown kernel kind %r, expected one of %s" % (self.kind, KINDS))
        if self.domain_dim is not None and int(self.domain_dim) < 1:
            raise ValueError("domain_dim must be a positive integer")
        if self.sigma <= 0 or self.alpha <= 0 or self.beta <= 0:
            raise ValueError("sigma, alpha and beta must be positive")
        if self.kind == "inverse-multiquadric" and self.c == 0:
            raise ValueError("inverse multiquadric kernel needs c != 0")
        if self.radius is None:
            object.__setattr__(self, "radius", 0.5 if self.kind == "binomial" else 1.0)
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if self.kind == "binomial" and self.radius ** 2 > _BINOMIAL_MAX_INNER:
            raise ValueError("binomial kernel needs radius^2 <= 1 - 1e-6")

    def params(self):
        out = {"kind": self.kind}
        for name in _PARAMS[self.kind]:
            out[name] = float(getattr(self, name))
        if self.domain_dim is not None:
            out["domain_dim"] = int(self.domain_dim)
        return out

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        kind = d.pop("kind")
        return cls(kind=kind, **d)

    def to_toml(self, key="kernel"):
        """Render as an inline TOML table, e.g. ``kernel = { kind = "gaussian", sigma = 1.0 }``."""
        parts = []
        for name, value in self.params().items():
            parts.append("%s = %s" % (name, json.dumps(value) if isinstance(value, str) else repr(value)))
        return "%s = { %s }" % (key, ", ".join(parts))

    @classmethod
    def from_toml(cls, text, key="kernel"):
        from .io import toml_loads

        return cls.from_dict(toml_loads(text)[key])

    def __call__(self, x, y):
        return eval_kernel(self, x, y)


def _as_points(X, spec):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[None, :]
    if X.ndim != 2:
        raise ValueError("points must be a vector or a 2-d array")
    if spec.domain_dim is not None and X.shape[1] != spec.domain_dim:
        raise ValueError("expected points of dimension %d, got %d" % (spec.domain_dim, X.shape[1]))
    return X


def _check_simplex(X):
    if np.any(X < 0) or np.any(X.sum(axis=1) > 1 + _SIMPLEX_TOL):
        raise DomainError("dot-product kernel requires points in the unit simplex")


def _inner(X, Y):
    # coordinate loop instead of BLAS: exact symmetry and thread-independent bits
    out = np.zeros((X.shape[0], Y.shape[0]))
    for k in range(X.shape[1]):
        out += X[:, k, None] * Y[None, :, k]
    return out


def _sqdist(X, Y):
    out = np.zeros((X.shape[0], Y.shape[0]))
    for k in range(X.shape[1]):
        diff = X[:, k, None] - Y[None, :, k]
        out += diff * diff
    return out


def kernel_block(spec, X, Y):
    """Kernel values ``kappa(X_i, Y_j)`` for all row pairs."""
    X = _as_points(X, spec)
    Y = _as_points(Y, spec)
    if X.shape[1] != Y.shape[1]:
        raise ValueError("dimension mismatch: %d vs %d" % (X.shape[1], Y.shape[1]))
    kind = spec.kind
    if kind == "dot-product":
        _check_simplex(X)
        _check_simplex(Y)
        vals = _inner(X, Y)
    elif kind == "gaussian":
        vals = np.exp(-_sqdist(X, Y) / spec.sigma ** 2)
    elif kind == "exponential":
        vals = np.exp(_inner(X, Y) - spec.radius ** 2)
    elif kind == "binomial":
        inner = _inner(X, Y)
        if np.any(inner > _BINOMIAL_MAX_INNER):
            raise DomainError("binomial kernel requires <x, y> <= 1 - 1e-6")
        vals = ((1.0 - spec.radius ** 2) / (1.0 - inner)) ** spec.alpha
    else:
        c2 = spec.c ** 2
        vals = (c2 / (c2 + _sqdist(X, Y))) ** spec.beta
    return np.clip(vals, 0.0, 1.0)


def eval_kernel(spec, x, y):
    """Evaluate ``kappa(x, y)`` for two single points."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("eval_kernel takes two points; use kernel_block for arrays")
    if x.shape != y.shape:
        raise ValueError("dimension mismatch: %d vs %d" % (x.size, y.size))
    return float(kernel_block(spec, x, y)[0, 0])


def kernel_matrix(spec, X, rho=1.0):
    """Edge probability matrix ``K_ij = rho * kappa(X_i, X_j)``, diagonal included."""
    if not 0 < rho <= 1:
        raise ValueError("rho must lie in (0, 1], got %r" % rho)
    X = _as_points(X, spec)
    return rho * kernel_block(spec, X, X)


@dataclass(frozen=True)
class EmpiricalFeatureMap:
    """Nystrom estimate of the truncated Mercer feature map.

    Built from the eigenpairs of ``K_ref / N_ref`` on a reference sample, with
    ``rho = 1``. Calling the map on points returns rows
    ``sqrt(lambda_s) psi_s(x)`` for ``s = 1..d``.
    """

    spec: KernelSpec
    reference_positions: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    next_eigenvalue: float

    @property
    def dim(self):
        return self.eigenvalues.size

    @property
    def spectral_gap(self):
        return float(self.eigenvalues[-1] - self.next_eigenvalue)

    def __call__(self, X):
        return feature_map_at(self, self.spec, X)


def build_empirical_feature_map(spec, X_ref, d):
    X_ref = _as_points(X_ref, spec)
    N = X_ref.shape[0]
    if d < 1 or N < d + 1:
        raise ValueError("need 1 <= d and at least d + 1 reference points")
    K = kernel_matrix(spec, X_ref, 1.0) / N
    pairs = top_eigenpairs(K, d + 1)
    lam = pairs.values[:d]
    gap = lam[-1] - pairs.values[d]
    if lam[-1] <= 0 or gap <= 1e-10:
        raise DegenerateSpectrumError(
            "feature map undefined: lambda_d = %.3g, gap = %.3g" % (lam[-1], gap)
        )
    return EmpiricalFeatureMap(
        spec=spec,
        reference_positions=X_ref,
        eigenvalues=lam.copy(),
        eigenvectors=pairs.vectors[:, :d].copy(),
        next_eigenvalue=float(pairs.values[d]),
    )


def feature_map_at(fmap, spec, x):
    """Evaluate the empirical feature map at one point (vector) or many (rows)."""
    if spec != fmap.spec:
        raise ValueError("feature map was built from a different kernel")
    single = np.ndim(x) == 1
    X = _as_points(x, spec)
    if X.shape[1] != fmap.reference_positions.shape[1]:
        raise ValueError("point dimension does not match the reference sample")
    N = fmap.reference_positions.shape[0]
    Kx = kernel_block(spec, X, fmap.reference_positions)
    out = (Kx @ fmap.eigenvectors) / np.sqrt(fmap.eigenvalues * N)
    return out[0] if single else out


def save_feature_map(fmap, path):
    np.savez(
        path,
        eigenvalues=fmap.eigenvalues,
        eigenvectors=fmap.eigenvectors,
        reference_positions=fmap.reference_positions,
        next_eigenvalue=fmap.next_eigenvalue,
        spec=json.dumps(fmap.spec.params(), sort_keys=True),
    )


def load_feature_map(path):
    with np.load(path) as data:
        return EmpiricalFeatureMap(
            spec=KernelSpec.from_dict(json.loads(str(data["spec"]))),
            reference_positions=data["reference_positions"],
            eigenvalues=data["eigenvalues"],
            eigenvectors=data["eigenvectors"],
            next_eigenvalue=float(data["next_eigenvalue"]),
        )
