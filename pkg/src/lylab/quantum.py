"""Dense spin-s quantum models.

Partition functions go through an in-house scaling-and-squaring matrix
exponential (complex fields make the Hamiltonian non-normal, so plain
eigendecomposition is not an option).  The extended precision mode runs the
same Pade scheme in 80-bit arithmetic with a pivoted solver, since LAPACK
does not take long-double input.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .leeyang import GridSpec, ScanReport
from .measures import SingleSpinMeasure
from .model import FieldSpec, Interaction, LatticeSpec, SpinModel
from .polyengine import evaluate_partition
from .precision import resolve_mode

MAX_HILBERT_DIM = 4096
NORM_WARNING = 50.0
_WITNESS_CAP = 512


@dataclass(frozen=True)
class SpinOperators:
    s: float
    s1: np.ndarray
    s2: np.ndarray
    s3: np.ndarray

    @property
    def dim(self):
        return self.s3.shape[0]

    @property
    def matrices(self):
        return (self.s1, self.s2, self.s3)

    def commutation_residual(self):
        """max over (j,k) of ||[s_j, s_k] - i eps_jkl s_l||_max."""
        ops = self.matrices
        worst = 0.0
        for j in range(3):
            k, l = (j + 1) % 3, (j + 2) % 3
            comm = ops[j] @ ops[k] - ops[k] @ ops[j]
            worst = max(worst, float(np.abs(comm - 1j * ops[l]).max()))
        return worst


def spin_operators(s):
    """Spin-s su(2) generators, s3 diagonal with entries s, s-1, ..., -s."""
    twos = round(2 * s)
    if twos < 1 or abs(2 * s - twos) > 1e-12:
        raise ValueError("s must be a positive half-integer")
    s = twos / 2.0
    m = s - np.arange(twos + 1)
    raise_amp = np.sqrt(s * (s + 1) - m[1:] * (m[1:] + 1))
    sp = np.zeros((twos + 1, twos + 1), dtype=complex)
    sp[np.arange(twos), np.arange(1, twos + 1)] = raise_amp
    sm = sp.conj().T
    return SpinOperators(s, (sp + sm) / 2.0, (sp - sm) / 2j,
                         np.diag(m).astype(complex))


@dataclass(frozen=True)
class QuantumModel:
    s: float
    nsites: int
    couplings: tuple  # ((x, y, (J1, J2, J3)), ...)
    fields: tuple  # per-site (h1, h2, h3), complex entries allowed
    beta: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if len(self.fields) != self.nsites:
            raise ValueError("one field vector per site")
        object.__setattr__(self, "fields", tuple(
            tuple(complex(c) for c in f) for f in self.fields))
        for f in self.fields:
            if len(f) != 3:
                raise ValueError("fields are 3-vectors")
        cps = []
        for x, y, J in self.couplings:
            x, y = int(x), int(y)
            if not (0 <= x < self.nsites and 0 <= y < self.nsites and x != y):
                raise ValueError(f"bad coupling sites ({x}, {y})")
            J = tuple(float(c) for c in J)
            if len(J) != 3:
                raise ValueError("couplings are 3-vectors")
            cps.append((x, y, J))
        object.__setattr__(self, "couplings", tuple(cps))

    @staticmethod
    def uniform(s, nsites, coupling, field, beta=1.0):
        """All-to-consecutive chain couplings and one field vector shared."""
        pairs = tuple((x, x + 1, coupling) for x in range(nsites - 1))
        return QuantumModel(s, nsites, pairs, (field,) * nsites, beta)

    @property
    def dim(self):
        return round(2 * self.s + 1) ** self.nsites

    def rescaled(self):
        """Classical-limit normalization: J -> J/s^2, h -> h/s."""
        s = self.s
        return QuantumModel(
            s, self.nsites,
            tuple((x, y, tuple(c / s**2 for c in J)) for x, y, J in self.couplings),
            tuple(tuple(c / s for c in f) for f in self.fields), self.beta)

    def ferromagnetic_conditions(self):
        """J1 >= |J2| and J1 >= |J3| for every pair."""
        return all(J[0] >= abs(J[1]) and J[0] >= abs(J[2])
                   for _, _, J in self.couplings)

    def hamiltonian(self):
        if self.dim > MAX_HILBERT_DIM:
            raise ValueError(f"Hilbert dimension {self.dim} over budget")
        ops = spin_operators(self.s)
        d = ops.dim
        site_ops = []
        for x in range(self.nsites):
            embedded = []
            for sig in ops.matrices:
                m = np.eye(d**x, dtype=complex)
                m = np.kron(m, sig)
                m = np.kron(m, np.eye(d ** (self.nsites - x - 1), dtype=complex))
                embedded.append(m)
            site_ops.append(embedded)
        H = np.zeros((self.dim, self.dim), dtype=complex)
        for x, y, J in self.couplings:
            for i in range(3):
                if J[i]:
                    H -= J[i] * (site_ops[x][i] @ site_ops[y][i])
        for x, f in enumerate(self.fields):
            for i in range(3):
                if f[i]:
                    H -= f[i] * site_ops[x][i]
        return H


# matrix exponential, degree-13 Pade with scaling and squaring

_PADE13 = (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
           1187353796428800.0, 129060195264000.0, 10559470521600.0,
           670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
           960960.0, 16380.0, 182.0, 1.0)
_THETA13 = 5.371920351148152


def _solve_pivoted(a, b):
    """Gaussian elimination with partial pivoting, any numpy float dtype.

    Exists because LAPACK rejects long doubles; row operations are vectorized
    so the Python loop is O(n).
    """
    n = a.shape[0]
    m = np.hstack([a, b])
    for k in range(n):
        p = int(np.argmax(np.abs(m[k:, k]))) + k
        if p != k:
            m[[k, p]] = m[[p, k]]
        piv = m[k, k]
        if piv == 0:
            raise np.linalg.LinAlgError("singular matrix in Pade solve")
        m[k] = m[k] / piv
        m[k + 1:] = m[k + 1:] - np.outer(m[k + 1:, k], m[k])
    for k in range(n - 1, 0, -1):
        m[:k] = m[:k] - np.outer(m[:k, k], m[k])
    return m[:, n:]


def expm(a, mode=None):
    """exp(A) for a dense complex square matrix.

    mode "double" uses complex128 with LAPACK solves; "extended" runs the
    identical Pade-13 scheme in 80-bit precision end to end.
    """
    mode = resolve_mode(mode)
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expm needs a square matrix")
    dtype = np.clongdouble if mode == "extended" else np.complex128
    A = a.astype(dtype)
    n = A.shape[0]
    norm = float(np.abs(A).sum(axis=0).max())
    squarings = max(0, math.ceil(math.log2(norm / _THETA13))) if norm > _THETA13 else 0
    A = A / dtype(2.0**squarings)
    ident = np.eye(n, dtype=dtype)
    b = [dtype(c) for c in _PADE13]
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A2 @ A4
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
             + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) \
        + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    if mode == "extended":
        R = _solve_pivoted(V - U, V + U)
    else:
        R = np.linalg.solve(V - U, V + U)
    for _ in range(squarings):
        R = R @ R
    return R


def quantum_partition(qm, mode=None):
    """Q = (2s+1)^(-|Lambda|) tr exp(-beta H)."""
    H = qm.hamiltonian()
    A = -qm.beta * H
    norm = float(np.abs(A).sum(axis=0).max())
    if norm > NORM_WARNING:
        warnings.warn(f"||beta H|| = {norm:.1f}: exponential conditioning "
                      "degrades", RuntimeWarning, stacklevel=2)
    d = round(2 * qm.s + 1)
    return complex(np.trace(expm(A, mode))) / d**qm.nsites


def rescaled_partition(qm, mode=None):
    return quantum_partition(qm.rescaled(), mode)


def classical_limit_study(s_values, nsites, couplings, h_grid,
                          direction=(0.0, 0.0, 1.0), beta=1.0, mode=None,
                          quadrature_order=None):
    """Sup-grid gap between rescaled quantum partitions and the classical
    sphere model they converge to as s grows.

    The classical side integrates unit three-component spins with the same
    couplings over the real field grid h * direction.  Small non-monotone
    wiggles in s are reported, not failed: the limit theorem has no rate.
    """
    h_grid = [float(h) for h in h_grid]
    direction = tuple(float(c) for c in direction)
    if quadrature_order is None:
        # product rule enumerates (2 order^2)^nsites configurations; the
        # integrand is entire so a modest Gauss-Legendre order is exact to
        # machine precision anyway
        quadrature_order = 48 if nsites == 1 else 16
    classical = []
    for h in h_grid:
        model = SpinModel(
            LatticeSpec((nsites,)), SingleSpinMeasure.sphere(3, order=quadrature_order),
            Interaction.from_pairs([(x, y, J) for x, y, J in couplings]),
            FieldSpec.uniform(tuple(h * c for c in direction)), beta)
        classical.append(evaluate_partition(model).real)
    table = []
    for s in s_values:
        worst = 0.0
        for h, zc in zip(h_grid, classical):
            qm = QuantumModel(
                s, nsites, tuple(couplings),
                (tuple(h * c for c in direction),) * nsites, beta)
            worst = max(worst, abs(rescaled_partition(qm, mode).real - zc))
        table.append((float(s), worst))
    devs = [d for _, d in table]
    return {
        "table": tuple(table), "classical": tuple(classical),
        "h_grid": tuple(h_grid), "decreasing": bool(devs[-1] < devs[0]),
        "monotone": bool(all(b <= a * (1 + 1e-9) for a, b in zip(devs, devs[1:]))),
    }


def quantum_zero_scan(qm, grid=None, transverse=(0.0, 0.0), margin=1e-8,
                      mode=None):
    """min |Q| over a grid of uniform fields (h1, t2, t3) with h1 complex,
    restricted to the axis-dominant region Re h1 > |t2| + |t3|.

    Couplings must satisfy the ferromagnetic dominance conditions; per-column
    normalization by the real-axis value keeps the margin scale-free.
    """
    if not qm.ferromagnetic_conditions():
        raise ValueError("couplings must satisfy J1 >= |J2| and J1 >= |J3|")
    if len(transverse) != 2:
        raise ValueError("transverse takes the fixed (h2, h3) pair")
    grid = grid if grid is not None else GridSpec()
    t2, t3 = complex(transverse[0]), complex(transverse[1])
    threshold = abs(t2) + abs(t3)

    def q_at(h1):
        m = QuantumModel(qm.s, qm.nsites, qm.couplings,
                         ((h1, t2, t3),) * qm.nsites, qm.beta)
        return quantum_partition(m, mode)

    vals = []
    points = []
    for re in grid.reals():
        ref = abs(q_at(complex(re)))
        normalized = ref > 1e-300
        for im in grid.imags():
            h1 = complex(re, im)
            q = abs(q_at(h1))
            vals.append(q / ref if normalized else q)
            points.append(h1)
    in_region = [p.real > threshold for p in points]
    min_abs = math.inf
    argmin = 0j
    inside = 0
    witnesses = []
    for p, v, ok in zip(points, vals, in_region):
        if ok:
            inside += 1
            if v < min_abs:
                min_abs, argmin = v, p
        if v < margin and len(witnesses) < _WITNESS_CAP:
            witnesses.append((p, v, ok))
    note = ""
    if inside == 0:
        min_abs = min(vals)
        argmin = points[int(np.argmin(vals))]
        note = "no grid point inside region"
    return ScanReport(
        min_abs=float(min_abs), argmin=argmin, npoints=len(points),
        in_region_points=inside, margin=margin,
        passed=bool(inside and min_abs > margin), witnesses=tuple(witnesses),
        normalization="|Q(h1)| / |Q(Re h1)| per column", note=note)
