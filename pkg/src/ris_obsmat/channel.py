"""Correlated channel synthesis for a RIS-aided uplink.

Builds spatial covariance matrices for the BS and RIS arrays, assembles the
covariance (kernel) of the cascaded user-RIS-BS channel, and simulates pilot
reception through analog combiners and RIS phase patterns.

Index layout used everywhere: the cascaded channel h stacks M blocks of
length N, block m being conj(F[:, m]) * g. vec(F) uses the same layout
(columns of F stacked).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_RTOL = 1e-10
PSD_RTOL = 1e-8


def herm(a: np.ndarray) -> np.ndarray:
    """Hermitian part (a + a^H) / 2."""
    return 0.5 * (a + a.conj().T)


def hermitian_defect(a: np.ndarray) -> float:
    """Relative Frobenius distance from a to its conjugate transpose."""
    denom = np.linalg.norm(a)
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(a - a.conj().T) / denom)


def require_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL, name: str = "matrix"):
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    defect = hermitian_defect(a)
    if defect > rtol:
        raise ValueError(f"{name} is not Hermitian: relative defect {defect:.3e} > {rtol:g}")


def psd_project(a: np.ndarray, rtol: float = PSD_RTOL, name: str = "matrix") -> np.ndarray:
    """Return `a` with tiny negative eigenvalues clipped to zero.

    Violations up to rtol * lambda_max are repaired by clipping; anything
    worse raises ValueError.
    """
    require_hermitian(a, name=name)
    a = herm(np.asarray(a, dtype=complex))
    w, v = np.linalg.eigh(a)
    lam_max = max(float(w[-1]), 0.0)
    lam_min = float(w[0])
    if lam_min >= 0.0:
        return a
    slack = rtol * lam_max + a.shape[0] * np.finfo(float).eps
    if lam_min < -slack:
        raise ValueError(
            f"{name} is not PSD: min eigenvalue {lam_min:.3e} below -{slack:.3e}"
        )
    w = np.clip(w, 0.0, None)
    return herm((v * w) @ v.conj().T)


@dataclass(frozen=True)
class CorrelationModel:
    """Analytic spatial-correlation family for a single array.

    kind is one of "isotropic-sinc", "exponential", "identity"; rho is the
    per-spacing correlation coefficient and only meaningful for the
    exponential family.
    """

    kind: str
    rho: float = 0.0

    KINDS = ("isotropic-sinc", "exponential", "identity")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown correlation kind {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "exponential" and not (0.0 <= self.rho < 1.0):
            raise ValueError(f"exponential correlation requires 0 <= rho < 1, got {self.rho}")


@dataclass(frozen=True)
class ArrayGeometry:
    """BS ULA and RIS UPA element positions, in wavelength units."""

    bs_positions: np.ndarray  # (M, 3)
    ris_positions: np.ndarray  # (N, 3)
    n1: int
    n2: int
    spacing: float

    def __post_init__(self):
        bs = np.asarray(self.bs_positions, dtype=float)
        ris = np.asarray(self.ris_positions, dtype=float)
        object.__setattr__(self, "bs_positions", bs)
        object.__setattr__(self, "ris_positions", ris)
        if bs.ndim != 2 or bs.shape[1] != 3 or bs.shape[0] < 1:
            raise ValueError(f"bs_positions must be (M, 3) with M >= 1, got {bs.shape}")
        if ris.ndim != 2 or ris.shape[1] != 3:
            raise ValueError(f"ris_positions must be (N, 3), got {ris.shape}")
        if ris.shape[0] != self.n1 * self.n2:
            raise ValueError(f"N = {ris.shape[0]} != n1 * n2 = {self.n1 * self.n2}")
        if not self.spacing > 0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")
        if not (np.all(np.isfinite(bs)) and np.all(np.isfinite(ris))):
            raise ValueError("array positions contain non-finite coordinates")

    @property
    def m(self) -> int:
        return self.bs_positions.shape[0]

    @property
    def n(self) -> int:
        return self.ris_positions.shape[0]

    @classmethod
    def ula_upa(cls, m: int, n1: int, n2: int, spacing: float) -> "ArrayGeometry":
        """Standard layout: BS ULA along x, RIS n1 x n2 UPA in the y-z plane."""
        bs = np.zeros((m, 3))
        bs[:, 0] = spacing * np.arange(m)
        i1, i2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
        ris = np.zeros((n1 * n2, 3))
        ris[:, 1] = spacing * i1.reshape(-1)
        ris[:, 2] = spacing * i2.reshape(-1)
        return cls(bs, ris, n1, n2, spacing)


@dataclass(frozen=True)
class ChannelKernel:
    """Hermitian PSD covariance of the cascaded channel, with the array split."""

    sigma_h: np.ndarray  # (M*N, M*N)
    m: int
    n: int

    def __post_init__(self):
        sig = np.asarray(self.sigma_h, dtype=complex)
        if sig.shape != (self.m * self.n, self.m * self.n):
            raise ValueError(f"kernel shape {sig.shape} does not match m*n = {self.m * self.n}")
        sig = psd_project(sig, name="channel kernel")
        object.__setattr__(self, "sigma_h", sig)

    @property
    def mn(self) -> int:
        return self.m * self.n


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of (g, F) together with the cascaded channel h."""

    g: np.ndarray  # (N,)
    f: np.ndarray  # (N, M)
    h: np.ndarray  # (M*N,)

    def __post_init__(self):
        n, m = self.f.shape
        if self.g.shape != (n,) or self.h.shape != (m * n,):
            raise ValueError("inconsistent dimensions for (g, f, h)")
        ref = cascade_channel(self.g, self.f)
        scale = max(float(np.linalg.norm(ref)), 1.0)
        if np.linalg.norm(self.h - ref) > 1e-10 * scale:
            raise ValueError("h is not the cascade of (g, f)")


def spatial_covariance(positions, model: CorrelationModel, spacing: float | None = None) -> np.ndarray:
    """Spatial correlation matrix of an array given element positions.

    Entries: isotropic-sinc gives sinc(2 d_ij) with d in wavelengths;
    exponential gives rho**(d_ij / spacing); identity gives I. The result is
    clipped to PSD. `spacing` defaults to the smallest nonzero pairwise
    distance and only matters for the exponential family.
    """
    pos = np.asarray(positions, dtype=float)
    if pos.ndim == 1:
        pos = pos[:, None]
    if pos.size == 0:
        raise ValueError("positions must be nonempty")
    if not np.all(np.isfinite(pos)):
        raise ValueError("invalid geometry: positions contain non-finite coordinates")
    d = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    if not np.all(np.isfinite(d)):
        raise ValueError("invalid geometry: non-finite pairwise distances")
    k = pos.shape[0]
    if model.kind == "identity":
        return np.eye(k, dtype=complex)
    if model.kind == "isotropic-sinc":
        c = np.sinc(2.0 * d)
    else:  # exponential
        if spacing is None:
            off = d[d > 0]
            spacing = float(off.min()) if off.size else 1.0
        if not spacing > 0:
            raise ValueError(f"spacing must be positive, got {spacing}")
        c = model.rho ** (d / spacing)
    c = c.astype(complex)
    # Both families are positive definite in R^3; clipping only mops up
    # floating-point leakage of the smallest eigenvalues.
    w = np.linalg.eigvalsh(herm(c))
    if float(w[0]) < 0.0:
        c = psd_project(c, rtol=np.inf, name="spatial covariance")
    return c


def separable_f_kernel(sigma_bs: np.ndarray, sigma_ris: np.ndarray) -> np.ndarray:
    """Covariance of vec(F) under a separable (Kronecker) correlation model.

    Block (m, m') of the result is conj(sigma_bs)[m, m'] * sigma_ris, i.e.
    E[F(:,m) F(:,m')^H], matching the column-stacked vec(F) layout.
    """
    require_hermitian(sigma_bs, name="sigma_bs")
    require_hermitian(sigma_ris, name="sigma_ris")
    return np.kron(np.conj(sigma_bs), sigma_ris)


def cascade_kernel(sigma_f: np.ndarray, sigma_g: np.ndarray, m: int, n: int) -> ChannelKernel:
    """Kernel of the cascaded channel from the covariances of F and g.

    Entrywise product of conj(sigma_f) with the M x M block tiling of
    sigma_g; PSD by the Schur product theorem.
    """
    sigma_f = np.asarray(sigma_f, dtype=complex)
    sigma_g = np.asarray(sigma_g, dtype=complex)
    if sigma_f.shape != (m * n, m * n):
        raise ValueError(f"sigma_f shape {sigma_f.shape} does not match (m*n, m*n)")
    if sigma_g.shape != (n, n):
        raise ValueError(f"sigma_g shape {sigma_g.shape} does not match (n, n)")
    sig = np.conj(sigma_f) * np.tile(sigma_g, (m, m))
    return ChannelKernel(sig, m, n)


def complex_randn(k: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. CN(0, 1) entries: real and imaginary parts each of variance 1/2."""
    return (rng.standard_normal(k) + 1j * rng.standard_normal(k)) / np.sqrt(2.0)


def cov_factor(sigma: np.ndarray) -> np.ndarray:
    """Factor L with L L^H = sigma, from an eigendecomposition with clipping."""
    sigma = np.asarray(sigma, dtype=complex)
    require_hermitian(sigma, name="covariance")
    w, v = np.linalg.eigh(herm(sigma))
    lam_max = max(float(w[-1]), 0.0)
    slack = PSD_RTOL * lam_max + sigma.shape[0] * np.finfo(float).eps
    if float(w[0]) < -slack:
        raise ValueError(f"covariance is not PSD: min eigenvalue {w[0]:.3e}")
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_gaussian(sigma: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw from CN(0, sigma)."""
    l = cov_factor(sigma)
    return l @ complex_randn(l.shape[1], rng)


def cascade_channel(g: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cascaded channel h: block m is conj(F[:, m]) * g."""
    g = np.asarray(g)
    f = np.asarray(f)
    if f.ndim != 2 or g.shape != (f.shape[0],):
        raise ValueError(f"dimension mismatch: g {g.shape}, f {f.shape}")
    return (np.conj(f) * g[:, None]).T.reshape(-1)


def draw_realization(sigma_g: np.ndarray, sigma_f: np.ndarray, m: int, n: int,
                     rng: np.random.Generator) -> ChannelRealization:
    """Draw independent g ~ CN(0, sigma_g) and vec(F) ~ CN(0, sigma_f)."""
    g = sample_gaussian(sigma_g, rng)
    vec_f = sample_gaussian(sigma_f, rng)
    f = vec_f.reshape(m, n).T  # undo the column-stacked layout
    return ChannelRealization(g, f, cascade_channel(g, f))


def observe(h: np.ndarray, x_mat: np.ndarray, sigma2: float, rng: np.random.Generator) -> np.ndarray:
    """Received pilots y = X^H h + n with i.i.d. CN(0, sigma2) noise."""
    if sigma2 < 0:
        raise ValueError(f"noise power must be nonnegative, got {sigma2}")
    h = np.asarray(h)
    x_mat = np.asarray(x_mat)
    if x_mat.ndim != 2 or x_mat.shape[0] != h.shape[0]:
        raise ValueError(f"dimension mismatch: h {h.shape}, x_mat {x_mat.shape}")
    y = x_mat.conj().T @ h
    if sigma2 > 0:
        y = y + np.sqrt(sigma2) * complex_randn(x_mat.shape[1], rng)
    return y
