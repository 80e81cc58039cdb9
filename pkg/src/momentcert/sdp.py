"""Feasibility solver for affine families of real symmetric matrices.

The question "is there a v in the box with Gamma(v) >= 0" is answered by
maximizing the concave function f(v) = lambda_min(gamma0 + sum_k v_k G_k)
with projected supergradient ascent: at the current iterate, a unit
eigenvector u of the smallest eigenvalue gives the supergradient component
g_k = u' G_k u, steps shrink like 1/sqrt(t), and iterates are projected onto
the variable box.  Several restarts from seeded random box points guard
against slow starts; the best value is kept.  A coordinate-wise line-search
polish sharpens the returned maximum, and near-feasible points are refined
by alternating projections between the PSD cone and the affine slice.

Infeasibility is never reported on optimizer convergence alone.  A dual
certificate is a symmetric Z >= 0 with Tr Z = 1 and <G_k, Z> = 0 for every
variable direction; for any v whatsoever,

    lambda_min(Gamma(v)) <= <Gamma(v), Z> = <gamma0, Z>,

so <gamma0, Z> < 0 proves that no completion is positive semidefinite.  The
certificate is checked by :func:`verify_certificate` using nothing but an
eigendecomposition and inner products, independently of the solver.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .hierarchy import AffineMatrixFamily

FEASIBLE = "FEASIBLE"
CERTIFIED_INFEASIBLE = "CERTIFIED_INFEASIBLE"
UNDECIDED = "UNDECIDED"

# A point counts as a feasibility witness when lambda_min is above this.
WITNESS_TOL = 1e-8
# Alternating-projection rounding is attempted when the best value found is
# within this window below feasibility.
ROUNDING_WINDOW = 0.05


@dataclass(frozen=True)
class SolverConfig:
    """Knobs for :func:`maximize_lambda_min`.

    ``margin`` is the decision threshold separating a certified negative
    value from numerical noise; it must stay well above ``tol_cert``, the
    tolerance at which certificates are verified.
    """

    max_iters: int = 5000
    step_scale: float = 1.0
    tol_cert: float = 1e-7
    margin: float = 1e-3
    restarts: int = 4
    seed: int = 0
    polish_sweeps: int = 3

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.step_scale <= 0.0:
            raise ValueError("step_scale must be positive")
        if self.tol_cert <= 0.0:
            raise ValueError("tol_cert must be positive")
        if self.margin <= self.tol_cert:
            raise ValueError("margin must exceed tol_cert")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if self.polish_sweeps < 0:
            raise ValueError("polish_sweeps must be nonnegative")


@dataclass(frozen=True)
class DualCertificate:
    """An infeasibility certificate: value = <gamma0, Z>."""

    matrix: np.ndarray
    value: float


@dataclass(frozen=True)
class SolveOutcome:
    status: str
    lambda_star: float
    v_star: np.ndarray
    certificate: DualCertificate | None
    iterations: int


@dataclass
class AscentTrace:
    """Iterate information the certificate extractor works from."""

    v_best: np.ndarray
    lambda_best: float
    tail_vectors: np.ndarray
    tail_weights: np.ndarray


def min_eigen(matrix) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue and a unit eigenvector of a symmetric matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if m.size and np.abs(m - m.T).max() > 1e-10:
        raise ValueError("matrix is not symmetric")
    w, v = np.linalg.eigh(m)
    return float(w[0]), v[:, 0]


class _FamilyOps:
    """Index-array machinery for fast evaluation of one affine family."""

    def __init__(self, family: AffineMatrixFamily):
        self.gamma0 = np.asarray(family.gamma0, dtype=float)
        self.dim = family.dim
        self.nvars = family.num_variables
        rows, cols, vidx = [], [], []
        counts = np.zeros(self.nvars)
        for k, pattern in enumerate(family.basis):
            i_idx, j_idx = np.nonzero(np.triu(pattern, 1))
            rows.append(i_idx)
            cols.append(j_idx)
            vidx.append(np.full(i_idx.size, k, dtype=int))
            counts[k] = i_idx.size
        self.rows = np.concatenate(rows) if rows else np.zeros(0, dtype=int)
        self.cols = np.concatenate(cols) if cols else np.zeros(0, dtype=int)
        self.vidx = np.concatenate(vidx) if vidx else np.zeros(0, dtype=int)
        self.counts = counts
        # <G_k, G_k>: each variable position appears in both triangles.
        self.norms = 2.0 * counts
        if self.nvars and (counts == 0).any():
            raise ValueError("family has a variable with empty support")
        if self.rows.size and np.abs(self.gamma0[self.rows, self.cols]).max() > 0.0:
            raise ValueError("gamma0 overlaps a variable support")
        bounds = np.asarray(family.bounds, dtype=float).reshape(self.nvars, 2)
        self.lo = bounds[:, 0]
        self.hi = bounds[:, 1]

    def gamma(self, v: np.ndarray) -> np.ndarray:
        out = self.gamma0.copy()
        if self.nvars:
            vals = v[self.vidx]
            out[self.rows, self.cols] = vals
            out[self.cols, self.rows] = vals
        return out

    def lambda_min(self, v: np.ndarray) -> tuple[float, np.ndarray]:
        w, vec = np.linalg.eigh(self.gamma(v))
        return float(w[0]), vec[:, 0]

    def supergradient(self, u: np.ndarray) -> np.ndarray:
        weights = u[self.rows] * u[self.cols]
        return 2.0 * np.bincount(self.vidx, weights=weights, minlength=self.nvars)

    def inner_with_basis(self, z: np.ndarray) -> np.ndarray:
        """<G_k, Z> for every k."""
        weights = z[self.rows, self.cols] + z[self.cols, self.rows]
        return np.bincount(self.vidx, weights=weights, minlength=self.nvars)

    def read_back(self, matrix: np.ndarray) -> np.ndarray:
        """Project a symmetric matrix onto the family slice, per variable."""
        sums = self.inner_with_basis(matrix)
        means = sums / self.norms
        return np.clip(means, self.lo, self.hi)

    def affine_project(self, z: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto {Tr Z = 1, <G_k, Z> = 0 for all k}.

        The G_k have disjoint off-diagonal supports and zero diagonal, so
        together with the identity they form an orthogonal set and a single
        pass is exact.
        """
        z = 0.5 * (z + z.T)
        if self.nvars:
            coeff = self.inner_with_basis(z) / self.norms
            z = z.copy()
            z[self.rows, self.cols] -= coeff[self.vidx]
            z[self.cols, self.rows] -= coeff[self.vidx]
        return z + (1.0 - np.trace(z)) / self.dim * np.eye(self.dim)


def _product_start(family: AffineMatrixFamily, ops: _FamilyOps) -> np.ndarray:
    """Moments of independent +-1 signs with the pinned one-body means.

    Each variable is a word; assigning every letter an independent random
    sign whose mean is the letter's pinned one-body moment (zero when none
    is pinned) gives the word the product of those means.  This is the
    completion an uncorrelated local model would produce, and when the
    pinned data itself comes from a product state the entire matrix becomes
    that model's Gram matrix, so the start is already feasible.
    """
    mu = {key[0]: value for key, value in family.pinned if len(key) == 1}
    v = np.zeros(ops.nvars)
    for k, (_, letters) in enumerate(family.variables):
        value = 1.0
        for letter in letters:
            value *= mu.get(letter, 0.0)
        v[k] = value
    return np.clip(v, ops.lo, ops.hi)


def _coordinate_polish(ops: _FamilyOps, v: np.ndarray, lam: float, sweeps: int):
    """Cyclic exact line maximization along coordinates.

    f is concave, hence unimodal along every line, so a bounded scalar
    search per coordinate is reliable; endpoints are probed explicitly.
    """
    v = v.copy()
    for _ in range(sweeps):
        improved = False
        for k in range(ops.nvars):
            lo, hi = ops.lo[k], ops.hi[k]
            if hi - lo < 1e-12:
                continue
            current = v[k]

            def negated(x, k=k):
                v[k] = x
                return -ops.lambda_min(v)[0]

            result = minimize_scalar(
                negated, bounds=(lo, hi), method="bounded", options={"xatol": 1e-11}
            )
            best_x, best_f = current, lam
            if -float(result.fun) > best_f:
                best_x, best_f = float(result.x), -float(result.fun)
            for x in (lo, hi):
                v[k] = x
                f = ops.lambda_min(v)[0]
                if f > best_f:
                    best_x, best_f = x, f
            v[k] = best_x
            if best_f > lam + 1e-15:
                lam = best_f
                improved = True
        if not improved:
            break
    return v, lam


def _feasibility_rounding(ops: _FamilyOps, v0: np.ndarray, max_iters=4000, stop_tol=1e-10):
    """Alternating projections between the PSD cone and the family slice.

    Converges to a feasible completion whenever one exists near the start;
    only the best in-slice point actually visited is returned, so the result
    is always an honest witness candidate.
    """
    v = v0.copy()
    best_lam = -np.inf
    best_v = v0.copy()
    for _ in range(max_iters):
        w, vec = np.linalg.eigh(ops.gamma(v))
        lam = float(w[0])
        if lam > best_lam:
            best_lam = lam
            best_v = v.copy()
        if lam >= -stop_tol:
            break
        psd = (vec * np.clip(w, 0.0, None)) @ vec.T
        v = ops.read_back(psd)
    return best_v, best_lam


def maximize_lambda_min(
    family: AffineMatrixFamily, config: SolverConfig | None = None
) -> SolveOutcome:
    """Maximize lambda_min over the variable box and decide feasibility.

    Returns FEASIBLE with a witness when the best value clears the witness
    tolerance, CERTIFIED_INFEASIBLE when a verified dual certificate with
    value below -margin is extracted, and UNDECIDED otherwise.
    """
    cfg = config if config is not None else SolverConfig()
    if family.dim == 0:
        raise ValueError("degenerate family of dimension 0")
    ops = _FamilyOps(family)
    nvars = ops.nvars
    rng = np.random.default_rng(cfg.seed)
    step_base = cfg.step_scale * (1.0 + np.linalg.norm(ops.gamma0))

    best_lam = -np.inf
    best_v = np.zeros(nvars)
    best_tail_u = None
    best_tail_w = None
    iterations = 0
    tail_len = 300

    for restart in range(cfg.restarts):
        if restart == 0:
            v = _product_start(family, ops)
        elif restart == 1:
            v = np.clip(np.zeros(nvars), ops.lo, ops.hi)
        else:
            v = rng.uniform(ops.lo, ops.hi)
        tail_u: deque = deque(maxlen=tail_len)
        tail_w: deque = deque(maxlen=tail_len)
        lam_r = -np.inf
        v_r = v.copy()
        for t in range(1, cfg.max_iters + 1):
            iterations += 1
            lam, u = ops.lambda_min(v)
            if lam > lam_r:
                lam_r = lam
                v_r = v.copy()
            step = step_base / np.sqrt(t)
            tail_u.append(u)
            tail_w.append(step)
            if nvars == 0:
                break
            v = np.clip(v + step * ops.supergradient(u), ops.lo, ops.hi)
        if lam_r > best_lam:
            best_lam = lam_r
            best_v = v_r
            best_tail_u = np.array(tail_u)
            best_tail_w = np.array(tail_w)
        if nvars == 0:
            break

    if nvars and cfg.polish_sweeps:
        best_v, best_lam = _coordinate_polish(ops, best_v, best_lam, cfg.polish_sweeps)
    if nvars and -ROUNDING_WINDOW < best_lam < WITNESS_TOL:
        v_round, lam_round = _feasibility_rounding(ops, best_v)
        if lam_round > best_lam:
            best_lam, best_v = lam_round, v_round

    certificate = None
    if best_lam >= -WITNESS_TOL:
        status = FEASIBLE
    else:
        trace = AscentTrace(
            v_best=best_v,
            lambda_best=best_lam,
            tail_vectors=best_tail_u,
            tail_weights=best_tail_w,
        )
        candidate = extract_certificate(family, trace, cfg.tol_cert)
        if candidate is not None and verify_certificate(family, candidate, cfg.tol_cert):
            certificate = candidate
        if certificate is not None and certificate.value < -cfg.margin:
            status = CERTIFIED_INFEASIBLE
        else:
            status = UNDECIDED
    return SolveOutcome(
        status=status,
        lambda_star=float(best_lam),
        v_star=best_v,
        certificate=certificate,
        iterations=iterations,
    )


def _simplex_project(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    desc = np.sort(y)[::-1]
    cumulative = np.cumsum(desc) - 1.0
    counts = np.arange(1, y.size + 1)
    mask = desc - cumulative / counts > 0.0
    rho = counts[mask][-1]
    theta = cumulative[rho - 1] / rho
    return np.clip(y - theta, 0.0, None)


def _spectraplex_project(s: np.ndarray) -> np.ndarray:
    """Projection onto {S symmetric, S >= 0, Tr S = 1}."""
    w, v = np.linalg.eigh(0.5 * (s + s.T))
    w = _simplex_project(w)
    return (v * w) @ v.T


def _cluster_mixing(ops: _FamilyOps, basis_u: np.ndarray, tol: float) -> np.ndarray:
    """Mixing matrix over a bottom eigencluster.

    Minimizes sum_k <G_k, U S U'>^2 over the spectraplex by projected
    gradient descent.  At an interior maximizer of f the minimum is zero:
    some convex combination of bottom eigenvectors is orthogonal to every
    variable direction.
    """
    r = basis_u.shape[1]
    b = np.zeros((ops.nvars, r, r))
    np.add.at(b, ops.vidx, basis_u[ops.rows][:, :, None] * basis_u[ops.cols][:, None, :])
    np.add.at(b, ops.vidx, basis_u[ops.cols][:, :, None] * basis_u[ops.rows][:, None, :])
    s = np.eye(r) / r
    lipschitz = 2.0 * float(np.sum(b * b))
    if lipschitz <= 0.0:
        return s
    eta = 1.0 / lipschitz
    for _ in range(500):
        inner = np.einsum("kij,ij->k", b, s)
        if np.abs(inner).max() < 0.01 * tol:
            break
        grad = 2.0 * np.einsum("k,kij->ij", inner, b)
        s = _spectraplex_project(s - eta * grad)
    return s


def _repair(ops: _FamilyOps, z0: np.ndarray, tol: float, max_rounds=2000) -> np.ndarray | None:
    """Alternate PSD projection and exact affine projection, ending affine."""
    z = ops.affine_project(z0)
    for _ in range(max_rounds):
        w, v = np.linalg.eigh(z)
        if w[0] >= -0.5 * tol:
            return z
        z = ops.affine_project((v * np.clip(w, 0.0, None)) @ v.T)
    return z if np.linalg.eigvalsh(z)[0] >= -tol else None


def extract_certificate(
    family: AffineMatrixFamily, trace: AscentTrace, tol: float = 1e-7
) -> DualCertificate | None:
    """Build a dual certificate from solver iterates, or return None.

    Candidates are convex combinations of outer products of minimum
    eigenvectors: mixtures over the bottom eigencluster at the best point
    (several cluster widths are tried) and the step-weighted average over
    the ascent tail.  Each candidate is projected onto the affine set
    {Tr Z = 1, <G_k, Z> = 0} with PSD repair and verified; the verified
    candidate of lowest value wins.  Failure to project or verify yields
    None, never an unchecked certificate.
    """
    ops = _FamilyOps(family)
    v_best = np.asarray(trace.v_best, dtype=float)
    w, vec = np.linalg.eigh(ops.gamma(v_best))
    scale = max(1.0, float(np.abs(w).max()))

    candidates: list[np.ndarray] = []
    seen_sizes: set[int] = set()
    for delta in (1e-9, 1e-7, 1e-5, 1e-3, 1e-2):
        size = int(np.searchsorted(w, w[0] + delta * scale, side="right"))
        size = min(max(size, 1), ops.dim)
        if size in seen_sizes:
            continue
        seen_sizes.add(size)
        cluster = vec[:, :size]
        if size == 1:
            candidates.append(np.outer(cluster[:, 0], cluster[:, 0]))
        else:
            mixing = _cluster_mixing(ops, cluster, tol)
            candidates.append(cluster @ mixing @ cluster.T)
    if trace.tail_vectors is not None and len(trace.tail_vectors):
        weights = np.asarray(trace.tail_weights, dtype=float)
        weights = weights / weights.sum()
        tail = np.asarray(trace.tail_vectors, dtype=float)
        candidates.append(np.einsum("t,ti,tj->ij", weights, tail, tail))

    best: DualCertificate | None = None
    for z0 in candidates:
        z = _repair(ops, z0, tol)
        if z is None:
            continue
        value = float(np.sum(ops.gamma0 * z))
        candidate = DualCertificate(matrix=z, value=value)
        if not verify_certificate(family, candidate, tol):
            continue
        if best is None or value < best.value:
            best = candidate
    return best


def verify_certificate(
    family: AffineMatrixFamily, certificate: DualCertificate, tol: float = 1e-7
) -> bool:
    """Check every certificate invariant against the family.

    Uses only an eigendecomposition and inner products; in particular it
    does not trust the stored value, which is recomputed and compared.
    """
    z = np.asarray(certificate.matrix, dtype=float)
    if z.shape != (family.dim, family.dim):
        return False
    if np.abs(z - z.T).max() > tol:
        return False
    z_sym = 0.5 * (z + z.T)
    if np.linalg.eigvalsh(z_sym)[0] < -tol:
        return False
    if abs(np.trace(z_sym) - 1.0) > tol:
        return False
    for pattern in family.basis:
        if abs(float(np.sum(pattern * z_sym))) > tol:
            return False
    if abs(float(np.sum(family.gamma0 * z_sym)) - certificate.value) > tol:
        return False
    return True
