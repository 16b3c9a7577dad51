"""Discrete calculus on the flat complex torus C^n/(Z+iZ)^n, n in {1,2}.

Conventions (fixed throughout the package):

* real coordinates (x_1..x_n, y_1..y_n) on [0,1)^{2n}, grid axis j is x_{j+1}
  for j < n and y_{j-n+1} for j >= n; N nodes per axis, row-major storage;
* background metric g_{jk} = 1/2 delta_{jk}, so the background volume form
  equals Lebesgue measure on the unit cube and Vol = 1, and the background
  Laplacian is half the real one: lap0 = (1/2) * (d^2/dx^2 + d^2/dy^2 + ...);
* holomorphic derivative d/dz_j = (d/dx_j - i d/dy_j)/2; on the Fourier mode
  exp(2 pi i (k.x + m.y)) it acts as multiplication by sigma_j = pi(m_j + i k_j).

Scalar fields are plain float64 arrays of shape (N,)*(2n); Hermitian matrix
fields (complex Hessians, metric tensors) are complex arrays of shape
(N,)*(2n) + (n, n), pointwise Hermitian in the trailing axes.

Dealiasing uses the 2/3 rule with per-axis integer cutoff N//3; because N is a
power of two, triple products of dealiased fields stay strictly below the grid
bandwidth, which makes the node-mean quadrature of the package's integral
identities exact to roundoff.
"""

import numpy as np

__all__ = [
    "TorusSpec",
    "build_spec",
    "dealias",
    "random_field",
    "integrate",
    "complex_hessian",
    "gradient_z",
    "holomorphic_hessian",
    "flat_laplacian",
]


def _is_power_of_two(m):
    return m >= 1 and (m & (m - 1)) == 0


class TorusSpec:
    """Grid, wavenumber tables and background conventions for one torus."""

    def __init__(self, n, N):
        if n not in (1, 2):
            raise ValueError("complex dimension must be 1 or 2, got %r" % (n,))
        if not isinstance(N, (int, np.integer)) or not _is_power_of_two(int(N)) or N < 16:
            raise ValueError("grid size must be a power of two >= 16, got %r" % (N,))
        self.n = int(n)
        self.N = int(N)
        self.dim_real = 2 * self.n
        self.shape = (self.N,) * self.dim_real
        self.nodes = self.N ** self.dim_real
        self.volume = 1.0
        # integer frequencies per axis in [-N/2, N/2)
        self.axis_freq = np.fft.fftfreq(self.N, d=1.0 / self.N).astype(np.int64)
        self.cutoff = self.N // 3

        # broadcastable frequency arrays, one per real axis
        freq = []
        for ax in range(self.dim_real):
            sh = [1] * self.dim_real
            sh[ax] = self.N
            freq.append(self.axis_freq.reshape(sh))
        self._freq = freq

        # sigma_j = pi (m_j + i k_j): symbol of d/dz_j (axis j is x_j, axis n+j is y_j)
        self.sigma = [np.pi * (self._freq[self.n + j] + 1j * self._freq[j])
                      for j in range(self.n)]
        # |K|^2 = sum k_j^2 + m_j^2; flat Laplacian symbol is -2 pi^2 |K|^2
        k2 = np.zeros(self.shape)
        for ax in range(self.dim_real):
            k2 = k2 + self._freq[ax].astype(np.float64) ** 2
        self.kmag2 = k2

        keep = np.ones(self.shape, dtype=bool)
        for ax in range(self.dim_real):
            keep &= np.abs(self._freq[ax]) <= self.cutoff
        self.dealias_mask = keep

        # background metric: g = (1/2) I, det g = 2^-n
        self.det_flat = 0.5 ** self.n

    def coordinates(self):
        """Full coordinate arrays (x_1..x_n, y_1..y_n), each of grid shape."""
        t = np.arange(self.N) / self.N
        out = []
        for ax in range(self.dim_real):
            sh = [1] * self.dim_real
            sh[ax] = self.N
            out.append(np.broadcast_to(t.reshape(sh), self.shape).copy())
        return out

    def __repr__(self):
        return "TorusSpec(n=%d, N=%d)" % (self.n, self.N)


def build_spec(n, N):
    """Construct a TorusSpec; rejects n not in {1,2} and non-power-of-two N."""
    return TorusSpec(n, N)


def dealias(spec, f):
    """Project a real field onto the 2/3-rule band (|k| <= N//3 per axis)."""
    fh = np.fft.fftn(f)
    fh[~spec.dealias_mask] = 0.0
    return np.fft.ifftn(fh).real


def random_field(spec, seed, decay=4.0, kmax=None):
    """Seeded random real field with spectral amplitude ~ (1+|k|)^-decay.

    Output is dealiased, has zero Lebesgue mean and unit sup norm; identical
    seeds give identical bytes. kmax truncates harder than the 2/3 rule
    (per-axis |k| <= kmax); band-limited fields keep pointwise products of
    several factors below the grid bandwidth, which finite-difference
    curvature oracles need.
    """
    if decay <= 1.0:
        raise ValueError("decay must exceed 1, got %r" % (decay,))
    rng = np.random.default_rng(seed)
    white = rng.standard_normal(spec.shape)
    coef = np.fft.fftn(white)
    coef *= (1.0 + np.sqrt(spec.kmag2)) ** (-decay)
    coef[~spec.dealias_mask] = 0.0
    if kmax is not None:
        for ax in range(spec.dim_real):
            coef = np.where(np.abs(spec._freq[ax]) > kmax, 0.0, coef)
    coef[(0,) * spec.dim_real] = 0.0
    out = np.fft.ifftn(coef).real
    m = np.max(np.abs(out))
    if m > 0.0:
        out = out / m
    return out


def integrate(spec, f, density=None):
    """Node-mean quadrature (1/N^{2n}) sum f*density; exact for trig polynomials.

    density None means the flat volume form (Lebesgue); otherwise it must be
    positive pointwise (it is e^u for some potential).
    """
    if density is None:
        return float(np.sum(f) / spec.nodes)
    density = np.asarray(density)
    if density.ndim and np.min(density) <= 0.0:
        raise ValueError("density must be positive pointwise")
    return float(np.sum(f * density) / spec.nodes)


def gradient_z(spec, f):
    """Holomorphic gradient (df/dz_1, ..., df/dz_n), complex grid arrays."""
    fh = np.fft.fftn(f)
    return [np.fft.ifftn(s * fh) for s in spec.sigma]


def complex_hessian(spec, f):
    """Mixed complex Hessian f_{j kbar} = d^2 f / dz_j dzbar_k.

    Returns a complex array of shape grid + (n, n), Hermitian at every node.
    The input should be dealiased (spectral derivatives themselves do not
    alias, but downstream pointwise products do).
    """
    n = spec.n
    fh = np.fft.fftn(f)
    out = np.empty(spec.shape + (n, n), dtype=complex)
    for j in range(n):
        for k in range(j, n):
            # d/dz_j d/dzbar_k has symbol -sigma_j * conj(sigma_k)
            block = np.fft.ifftn(-spec.sigma[j] * np.conj(spec.sigma[k]) * fh)
            if j == k:
                out[..., j, j] = block.real
            else:
                out[..., j, k] = block
                out[..., k, j] = np.conj(block)
    return out


def holomorphic_hessian(spec, f):
    """Pure second derivatives f_{jk} = d^2 f / dz_j dz_k (symbol sigma_j sigma_k).

    Returns a complex array of shape grid + (n, n), symmetric (not Hermitian)
    at every node; this is the (2,0) part of the Hessian, which enters the
    norm |D^2 psi|^2 in the second variation of the energy functional.
    """
    n = spec.n
    fh = np.fft.fftn(f)
    out = np.empty(spec.shape + (n, n), dtype=complex)
    for j in range(n):
        for k in range(j, n):
            block = np.fft.ifftn(spec.sigma[j] * spec.sigma[k] * fh)
            out[..., j, k] = block
            if k != j:
                out[..., k, j] = block
    return out


def flat_laplacian(spec, f):
    """Background Laplacian lap0 = (1/2) * (real Laplacian); symbol -2 pi^2 |K|^2."""
    fh = np.fft.fftn(f)
    return np.fft.ifftn(-2.0 * np.pi ** 2 * spec.kmag2 * fh).real
