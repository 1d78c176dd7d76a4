"""Lossless scattering matrices: constructors, verification and fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import circulant

LOSSLESS_TOL = 1e-9
MAX_EIGENBASIS_COND = 1e8


@dataclass(frozen=True, eq=False)
class LosslessMatrix:
    """A real K×K scattering matrix together with the norm it preserves.

    ``Y`` is the positive-definite weighting with ``A^T Y A = Y``; it is
    ``diag(admittance)`` when admittances are given and the identity when
    neither is.
    """

    entries: np.ndarray
    admittance: np.ndarray | None = None
    Y: np.ndarray | None = None
    kind: str = "custom"

    def __post_init__(self):
        entries = np.array(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ValueError("scattering matrix must be square")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)
        y = self.Y
        if y is None:
            if self.admittance is not None:
                y = np.diag(np.asarray(self.admittance, float))
            else:
                y = np.eye(entries.shape[0])
        y = np.array(y, dtype=float)
        y.setflags(write=False)
        object.__setattr__(self, "Y", y)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)


@dataclass(frozen=True)
class BlockDiagonalSpectrum:
    """Real canonical form of a diagonalizable spectrum.

    ``real`` lists real eigenvalues (1x1 blocks); ``pairs`` lists ``(r, θ)``
    for conjugate pairs ``r e^{±jθ}``, each realized as the 2x2 block
    ``[[0, -r], [r, 2 r cos θ]]``.
    """

    real: tuple[float, ...] = ()
    pairs: tuple[tuple[float, float], ...] = ()

    @property
    def size(self) -> int:
        return len(self.real) + 2 * len(self.pairs)

    def is_unit_modulus(self, tol: float = LOSSLESS_TOL) -> bool:
        return all(abs(abs(v) - 1.0) <= tol for v in self.real) and all(
            abs(r - 1.0) <= tol for r, _ in self.pairs
        )

    def blocks(self) -> list[np.ndarray]:
        out = [np.array([[v]], float) for v in self.real]
        for r, theta in self.pairs:
            out.append(np.array([[0.0, -r], [r, 2.0 * r * math.cos(theta)]]))
        return out

    def matrix(self) -> np.ndarray:
        from scipy.linalg import block_diag

        return block_diag(*self.blocks())


@dataclass
class LosslessVerdict:
    lossless: bool
    Y: np.ndarray | None = None
    residual: float = float("nan")
    reason: str = ""
    eigenvalues: np.ndarray | None = field(default=None, repr=False)

    def __bool__(self):
        return self.lossless


def _check_positive(y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.ndim != 1 or y.size < 1:
        raise ValueError("admittances must be a non-empty vector")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("admittances must be positive")
    return y


def isotropic_matrix(K: int) -> LosslessMatrix:
    """``(2/K) 1 1^T - I``: every incoming wave spread evenly over the other ports."""
    if K < 2:
        raise ValueError("isotropic scattering needs K >= 2")
    A = np.full((K, K), 2.0 / K) - np.eye(K)
    return LosslessMatrix(A, kind="isotropic")


def admittance_scattering(y) -> LosslessMatrix:
    """Pressure-wave junction of tubes with characteristic admittances ``y``."""
    y = _check_positive(y)
    K = y.size
    A = (2.0 / y.sum()) * np.outer(np.ones(K), y) - np.eye(K)
    return LosslessMatrix(A, admittance=y, kind="admittance")


def normalized_householder(y) -> LosslessMatrix:
    """Root-power-wave junction: Householder reflection about ``sqrt(y)``."""
    y = _check_positive(y)
    v = np.sqrt(y)
    A = (2.0 / (v @ v)) * np.outer(v, v) - np.eye(y.size)
    return LosslessMatrix(A, kind="householder")


def householder_matrix(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    return 2.0 * np.outer(v, v) - np.eye(v.size)


def _block_certificate(block: np.ndarray) -> np.ndarray:
    if block.shape == (1, 1):
        return np.eye(1)
    w, V = np.linalg.eig(block)
    Vinv = np.linalg.inv(V)
    Y = (Vinv.conj().T @ Vinv).real
    return (Y + Y.T) / 2


def construct_lossless(T, spectrum: BlockDiagonalSpectrum, max_cond: float = MAX_EIGENBASIS_COND) -> LosslessMatrix:
    """Build ``T^{-1} Λ T`` from a unit-modulus real canonical spectrum.

    The preserved norm is ``T^T Y_Λ T`` where ``Y_Λ`` certifies each block of
    ``Λ``; it reduces to ``T^T T`` when every block is orthogonal.
    """
    T = np.asarray(T, dtype=float)
    if T.ndim != 2 or T.shape[0] != T.shape[1]:
        raise ValueError("T must be square")
    if T.shape[0] != spectrum.size:
        raise ValueError(f"T is {T.shape[0]}x{T.shape[0]} but spectrum has size {spectrum.size}")
    cond = np.linalg.cond(T)
    if not np.isfinite(cond) or cond > max_cond:
        raise ValueError(f"T is singular or ill-conditioned (cond={cond:.3g})")
    if not spectrum.is_unit_modulus():
        raise ValueError("spectrum is not unit-modulus; the result would not be lossless")
    for r, theta in spectrum.pairs:
        if abs(math.sin(theta)) < 1e-12:
            raise ValueError("complex pair with θ in {0, π} has a defective 2x2 block")
    from scipy.linalg import block_diag

    lam = spectrum.matrix()
    A = np.linalg.solve(T, lam @ T)
    y_lam = block_diag(*[_block_certificate(b) for b in spectrum.blocks()])
    Y = T.T @ y_lam @ T
    return LosslessMatrix(A, Y=(Y + Y.T) / 2, kind="parametrized")


def is_lossless(A, Y="auto", tol: float = LOSSLESS_TOL) -> LosslessVerdict:
    """Decide whether ``A`` preserves some (or the given) elliptic norm.

    With an explicit ``Y`` the residual ``||A^T Y A - Y||_2 / ||Y||_2`` is
    compared with ``tol``. With ``"auto"`` the matrix must be diagonalizable
    with unit-modulus eigenvalues, and ``Y = V^{-H} V^{-1}`` built from the
    eigenvectors is returned as a certificate.
    """
    if isinstance(A, LosslessMatrix):
        A = A.entries
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A must be square")
    K = A.shape[0]

    if not (isinstance(Y, str) and Y == "auto"):
        Y = np.asarray(Y, dtype=complex if np.iscomplexobj(Y) else float)
        res = np.linalg.norm(A.T @ Y @ A - Y, 2) / np.linalg.norm(Y, 2)
        ok = bool(res <= tol)
        return LosslessVerdict(ok, Y, float(res), "" if ok else "A^T Y A differs from Y")

    eigvals = np.linalg.eigvals(A)
    off_circle = np.max(np.abs(np.abs(eigvals) - 1.0))
    if off_circle > tol:
        return LosslessVerdict(
            False, None, float(off_circle), "eigenvalues off the unit circle", eigvals
        )
    # orthogonal matrices certify themselves with Y = I
    res_orth = np.linalg.norm(A.T @ A - np.eye(K), 2)
    if res_orth <= tol:
        return LosslessVerdict(True, np.eye(K), float(res_orth), "", eigvals)
    eigvals, V = np.linalg.eig(A)
    cond = np.linalg.cond(V)
    if not np.isfinite(cond) or cond > MAX_EIGENBASIS_COND:
        return LosslessVerdict(False, None, float(cond), "numerically not diagonalizable", eigvals)
    Vinv = np.linalg.inv(V)
    Yc = Vinv.conj().T @ Vinv
    Yc = (Yc + Yc.conj().T) / 2
    if np.max(np.abs(Yc.imag)) <= 1e-12 * np.max(np.abs(Yc)):
        Yc = Yc.real
    res = np.linalg.norm(A.conj().T @ Yc @ A - Yc, 2) / np.linalg.norm(Yc, 2)
    ok = bool(res <= tol)
    return LosslessVerdict(ok, Yc, float(res), "" if ok else "certificate check failed", eigvals)


def givens_orthogonal(angles) -> np.ndarray:
    """Product of Givens rotations over all index pairs ``(i, j), i < j``."""
    angles = np.asarray(angles, dtype=float)
    K = int(round((1 + math.sqrt(1 + 8 * angles.size)) / 2))
    if K * (K - 1) // 2 != angles.size:
        raise ValueError("need K(K-1)/2 angles")
    Q = np.eye(K)
    idx = 0
    for i in range(K - 1):
        for j in range(i + 1, K):
            c, s = math.cos(angles[idx]), math.sin(angles[idx])
            G = np.eye(K)
            G[i, i] = G[j, j] = c
            G[i, j], G[j, i] = -s, s
            Q = Q @ G
            idx += 1
    return Q


def circulant_from_spectrum(spectrum) -> LosslessMatrix:
    """Real circulant matrix whose DFT eigenvalues are ``spectrum``."""
    lam = np.asarray(spectrum, dtype=complex)
    K = lam.size
    if not np.allclose(lam, np.conj(lam[(-np.arange(K)) % K]), atol=1e-12):
        raise ValueError("spectrum must be conjugate-symmetric for a real matrix")
    if np.max(np.abs(np.abs(lam) - 1.0)) > LOSSLESS_TOL:
        raise ValueError("circulant all-pass spectrum must be unit-modulus")
    col = np.fft.ifft(lam).real
    return LosslessMatrix(circulant(col), kind="circulant")


def _random_unit_spectrum(K: int, rng: np.random.Generator) -> np.ndarray:
    lam = np.empty(K, dtype=complex)
    lam[0] = rng.choice([-1.0, 1.0])
    for k in range(1, K // 2 + 1):
        if 2 * k == K:
            lam[k] = rng.choice([-1.0, 1.0])
        else:
            lam[k] = np.exp(1j * rng.uniform(0, 2 * np.pi))
            lam[K - k] = np.conj(lam[k])
    return lam


RANDOM_KINDS = ("orthogonal-givens", "permutation", "circulant-allpass")


def random_lossless(kind: str, K: int, seed: int | None = None) -> LosslessMatrix:
    """Seeded random lossless matrix of one of ``RANDOM_KINDS``."""
    if K < 2:
        raise ValueError("K must be >= 2")
    rng = np.random.default_rng(seed)
    if kind == "orthogonal-givens":
        angles = rng.uniform(0.0, 2 * np.pi, K * (K - 1) // 2)
        return LosslessMatrix(givens_orthogonal(angles), kind="orthogonal")
    if kind == "permutation":
        return LosslessMatrix(np.eye(K)[rng.permutation(K)], kind="permutation")
    if kind == "circulant-allpass":
        return circulant_from_spectrum(_random_unit_spectrum(K, rng))
    raise ValueError(f"unknown random lossless kind {kind!r}; expected one of {RANDOM_KINDS}")


def nearest_orthogonal(D) -> LosslessMatrix:
    """Orthogonal matrix closest to ``D`` in Frobenius norm (``U V^T`` from the SVD)."""
    D = np.asarray(D, dtype=float)
    U, _, Vt = np.linalg.svd(D)
    return LosslessMatrix(U @ Vt, kind="nearest-orthogonal")


@dataclass
class HouseholderFit:
    v: np.ndarray
    matrix: LosslessMatrix
    degenerate: bool


def householder_cost(v, D) -> float:
    return float(np.linalg.norm(householder_matrix(v) - np.asarray(D), "fro") ** 2)


def nearest_householder(D, tol: float = 1e-10) -> HouseholderFit:
    """Householder reflection ``2 v v^T - I`` closest to ``D``.

    The optimal ``v`` maximizes ``v^T D v``, i.e. it is a top eigenvector of
    the symmetric part. When the top eigenvalue is repeated any vector in
    its eigenspace is optimal; the one returned has its first significant
    entry positive and ``degenerate`` is set.
    """
    D = np.asarray(D, dtype=float)
    S = D + D.T
    w, V = np.linalg.eigh(S)
    v = V[:, -1]
    scale = max(1.0, float(np.max(np.abs(w))))
    degenerate = bool(w.size > 1 and w[-1] - w[-2] <= tol * scale)
    lead = np.flatnonzero(np.abs(v) > 1e-12)
    if lead.size and v[lead[0]] < 0:
        v = -v
    return HouseholderFit(v, LosslessMatrix(householder_matrix(v), kind="householder"), degenerate)


def check_isotropic_uniqueness(A, tol: float = 1e-9) -> bool:
    """True iff ``A`` is orthogonal with equal off-diagonals, i.e. ``±((2/K)11^T - I)``."""
    A = np.asarray(A, dtype=float)
    K = A.shape[0]
    if np.linalg.norm(A.T @ A - np.eye(K), 2) > tol:
        return False
    off = A[~np.eye(K, dtype=bool)]
    if np.ptp(off) > tol:
        return False
    iso = isotropic_matrix(K).entries
    return bool(np.max(np.abs(A - iso)) <= tol or np.max(np.abs(A + iso)) <= tol)


def matrix_for_kind(kind: str, K: int, seed: int | None = None, admittance=None) -> LosslessMatrix:
    """Scattering matrix by name, as used by the network builder and the CLI."""
    if kind == "isotropic":
        return isotropic_matrix(K)
    if kind in ("householder", "admittance"):
        if admittance is None:
            admittance = np.random.default_rng(seed).uniform(0.5, 2.0, K)
        admittance = _check_positive(admittance)
        if admittance.size != K:
            raise ValueError(f"need {K} admittances, got {admittance.size}")
        return normalized_householder(admittance) if kind == "householder" else admittance_scattering(admittance)
    aliases = {"orthogonal": "orthogonal-givens", "circulant": "circulant-allpass"}
    return random_lossless(aliases.get(kind, kind), K, seed)


MATRIX_KINDS = ("isotropic", "householder", "admittance", "orthogonal", "permutation", "circulant")
