"""Finite-lattice spin models.

A model bundles a lattice, a single-spin measure, an interaction (pair
couplings plus optional quartic terms), a field specification and an inverse
temperature.  Hamiltonian convention:

    H = - sum_b J_b s_i s_j - sum_U J_U prod_{x in U} s_x - sum_x h_x s_x

so positive couplings are ferromagnetic and the Boltzmann weight is
exp(-beta H).  For N-component spins the pair term is - sum_i J^i s^i s^i and
the field couples per component.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .measures import SingleSpinMeasure


@dataclass(frozen=True)
class LatticeSpec:
    extents: tuple
    boundary: str = "free"  # "free" | "periodic"

    def __post_init__(self):
        if self.boundary not in ("free", "periodic"):
            raise ValueError(f"unknown boundary {self.boundary!r}")
        if len(self.extents) == 0 or any(int(e) < 1 for e in self.extents):
            raise ValueError("extents must be positive")
        object.__setattr__(self, "extents", tuple(int(e) for e in self.extents))

    @property
    def ndim(self):
        return len(self.extents)

    @property
    def nsites(self):
        return int(np.prod(self.extents))

    def coords(self):
        """Site coordinates in row-major site order."""
        return list(np.ndindex(*self.extents))

    def site_index(self, coord):
        return int(np.ravel_multi_index(coord, self.extents))


@dataclass(frozen=True)
class Interaction:
    pairs: tuple = ()  # ((i, j, J), ...) explicit couplings, J scalar or N-tuple
    kernel: tuple = ()  # ((offset, J), ...) translation-invariant, one-sided offsets
    quartic: tuple = ()  # ((site4, J), ...) explicit quartic terms

    @staticmethod
    def from_pairs(pairs, quartic=()):
        return Interaction(pairs=tuple((int(i), int(j), J) for i, j, J in pairs),
                           quartic=tuple((tuple(sorted(int(s) for s in ss)), float(J))
                                         for ss, J in quartic))

    @staticmethod
    def nearest_neighbor(coupling, ndim=1):
        """Kernel with the given coupling on each unit offset."""
        offs = []
        for axis in range(ndim):
            v = [0] * ndim
            v[axis] = 1
            offs.append((tuple(v), coupling))
        return Interaction(kernel=tuple(offs))


def _coupling_vector(J, ncomp):
    arr = np.atleast_1d(np.asarray(J, dtype=float))
    if arr.shape == (1,) and ncomp > 1:
        out = np.zeros(ncomp)
        out[0] = arr[0]
        return out
    if arr.shape != (ncomp,):
        raise ValueError(f"coupling {J!r} does not match {ncomp} components")
    return arr


@dataclass(frozen=True)
class FieldSpec:
    mode: str = "uniform"  # "uniform" | "per_site" | "modulated"
    h: complex = 0.0  # uniform value (scalar or N-tuple for vector spins)
    values: tuple = ()  # per-site values
    eps: tuple = ()  # modulated amplitudes
    kvecs: tuple = ()  # modulated wave vectors, one per amplitude

    def __post_init__(self):
        if self.mode not in ("uniform", "per_site", "modulated"):
            raise ValueError(f"unknown field mode {self.mode!r}")
        if self.mode == "modulated" and len(self.eps) != len(self.kvecs):
            raise ValueError("modulated field needs one wave vector per amplitude")

    @staticmethod
    def uniform(h):
        return FieldSpec("uniform", h=h)

    @staticmethod
    def per_site(values):
        return FieldSpec("per_site", values=tuple(values))

    @staticmethod
    def modulated(h, eps, kvecs):
        return FieldSpec("modulated", h=h,
                         eps=tuple(complex(e) for e in eps),
                         kvecs=tuple(tuple(float(c) for c in k) for k in kvecs))


@dataclass(frozen=True)
class SpinModel:
    lattice: LatticeSpec
    measure: SingleSpinMeasure
    interaction: Interaction
    field: FieldSpec = field(default_factory=FieldSpec)
    beta: float = 1.0

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def nsites(self):
        return self.lattice.nsites

    @property
    def ncomp(self):
        return self.measure.ncomp if self.measure.kind == "sphere_uniform" else 1

    # interaction expansion

    def pair_arrays(self):
        """Expanded pair couplings (i, j, J) with i < j.

        Kernel offsets are one-sided representatives; on periodic lattices a
        displacement reachable both ways (L = 2 along an axis) accumulates
        twice, and a wrap onto the same site is dropped.  Duplicate explicit
        pairs accumulate as well.
        """
        ncomp = self.ncomp
        acc = {}

        def add(i, j, J):
            if i == j:
                return
            key = (min(i, j), max(i, j))
            vec = _coupling_vector(J, ncomp)
            if key in acc:
                acc[key] = acc[key] + vec
            else:
                acc[key] = vec

        for i, j, J in self.interaction.pairs:
            add(int(i), int(j), J)
        if self.interaction.kernel:
            ext = self.lattice.extents
            periodic = self.lattice.boundary == "periodic"
            coords = self.lattice.coords()
            for off, J in self.interaction.kernel:
                off = tuple(int(c) for c in off)
                for c in coords:
                    y = tuple(a + b for a, b in zip(c, off))
                    if periodic:
                        y = tuple(v % e for v, e in zip(y, ext))
                    elif any(v < 0 or v >= e for v, e in zip(y, ext)):
                        continue
                    add(self.lattice.site_index(c), self.lattice.site_index(y), J)
        if not acc:
            empty = np.empty(0, dtype=np.int64)
            Jshape = (0,) if ncomp == 1 else (0, ncomp)
            return empty, empty.copy(), np.empty(Jshape)
        keys = sorted(acc)
        pi = np.array([k[0] for k in keys], dtype=np.int64)
        pj = np.array([k[1] for k in keys], dtype=np.int64)
        pJ = np.array([acc[k] for k in keys])
        if ncomp == 1:
            pJ = pJ[:, 0]
        return pi, pj, pJ

    def quad_arrays(self):
        """Quartic terms as (bitmask, J) arrays; duplicates accumulate."""
        acc = {}
        for sites, J in self.interaction.quartic:
            sites = tuple(sorted(int(s) for s in sites))
            if len(set(sites)) != 4:
                raise ValueError(f"quartic term needs 4 distinct sites, got {sites}")
            if max(sites) >= self.nsites:
                raise ValueError("quartic site index out of range")
            acc[sites] = acc.get(sites, 0.0) + float(J)
        keys = sorted(acc)
        masks = np.array([sum(1 << s for s in k) for k in keys], dtype=np.int64)
        J = np.array([acc[k] for k in keys])
        return masks, J

    # fields

    def field_array(self):
        """Per-site field, shape (nsites,) complex (or (nsites, N) for vector spins)."""
        n = self.nsites
        ncomp = self.ncomp
        f = self.field
        if f.mode == "per_site":
            vals = np.asarray(f.values, dtype=complex)
            want = (n,) if ncomp == 1 else (n, ncomp)
            if vals.shape != want:
                raise ValueError(f"per-site field has shape {vals.shape}, expected {want}")
            return vals
        if f.mode == "uniform":
            if ncomp == 1:
                return np.full(n, complex(f.h))
            h = np.asarray(f.h, dtype=complex)
            if h.shape == ():
                out = np.zeros((n, ncomp), dtype=complex)
                out[:, 0] = h
                return out
            if h.shape != (ncomp,):
                raise ValueError(f"uniform field {f.h!r} does not match {ncomp} components")
            return np.tile(h, (n, 1))
        # modulated: h_x = h + sum_a eps_a exp(i k_a . x), scalar spins only
        if ncomp != 1:
            raise ValueError("modulated fields are defined for scalar spins")
        coords = np.array(self.lattice.coords(), dtype=float)
        out = np.full(n, complex(f.h))
        for e, k in zip(f.eps, f.kvecs):
            if len(k) != self.lattice.ndim:
                raise ValueError("wave vector dimension mismatch")
            out = out + e * np.exp(1j * coords @ np.asarray(k, dtype=float))
        return out

    def activities(self):
        """Site activities z_x = exp(-2 beta h_x) (scalar spins)."""
        if self.ncomp != 1:
            raise ValueError("activities are defined for scalar spins")
        return np.exp(-2.0 * self.beta * self.field_array())

    # structural checks

    def is_ferromagnetic(self):
        """All pair couplings (first component) and quartic couplings >= 0."""
        _, _, pJ = self.pair_arrays()
        first = pJ if pJ.ndim == 1 else pJ[:, 0]
        _, qJ = self.quad_arrays()
        return bool(np.all(first >= 0.0) and np.all(qJ >= 0.0))

    def anisotropy_dominant(self):
        """Per bond, J^1 >= sum_{i >= 2} |J^i| (trivially true for scalars)."""
        _, _, pJ = self.pair_arrays()
        if pJ.ndim == 1 or pJ.shape[0] == 0:
            return True
        return bool(np.all(pJ[:, 0] >= np.abs(pJ[:, 1:]).sum(axis=1) - 1e-14))

    def interaction_norm(self):
        """max_x sum_{X owns x} |X|^-1 sup|Phi(X)| with the spin bound s_max.

        For a translation-invariant pair kernel this equals
        sum_offsets |J| s_max^2, plus |J_U| s_max^4 per quartic pattern
        through a site.
        """
        s = self.measure.support_radius
        pi, pj, pJ = self.pair_arrays()
        strength = np.abs(pJ) if pJ.ndim == 1 else np.abs(pJ).sum(axis=1)
        per_site = np.zeros(self.nsites)
        for i, j, v in zip(pi, pj, strength):
            per_site[i] += 0.5 * v * s * s
            per_site[j] += 0.5 * v * s * s
        qm, qJ = self.quad_arrays()
        for mask, v in zip(qm, qJ):
            for b in range(self.nsites):
                if (int(mask) >> b) & 1:
                    per_site[b] += 0.25 * abs(v) * s**4
        return float(per_site.max()) if self.nsites else 0.0

    # serialization

    def to_dict(self):
        d = {
            "lattice": {"extents": list(self.lattice.extents),
                        "boundary": self.lattice.boundary},
            "measure": self.measure.to_dict(),
            "beta": self.beta,
        }
        inter = {}
        if self.interaction.pairs:
            inter["pairs"] = [[i, j, _jsonable(J)] for i, j, J in self.interaction.pairs]
        if self.interaction.kernel:
            inter["kernel"] = [[list(off), _jsonable(J)] for off, J in self.interaction.kernel]
        if self.interaction.quartic:
            inter["quartic"] = [[list(ss), J] for ss, J in self.interaction.quartic]
        d["interaction"] = inter
        f = self.field
        if f.mode == "uniform":
            d["field"] = {"mode": "uniform", "h": _jsonable(f.h)}
        elif f.mode == "per_site":
            d["field"] = {"mode": "per_site", "values": [_jsonable(v) for v in f.values]}
        else:
            d["field"] = {"mode": "modulated", "h": _jsonable(f.h),
                          "eps": [_jsonable(e) for e in f.eps],
                          "kvecs": [list(k) for k in f.kvecs]}
        return d

    @staticmethod
    def from_dict(d):
        known = {"lattice", "measure", "interaction", "field", "beta"}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown model keys: {sorted(extra)}")
        lat = d["lattice"]
        extra = set(lat) - {"extents", "boundary"}
        if extra:
            raise ValueError(f"unknown lattice keys: {sorted(extra)}")
        lattice = LatticeSpec(tuple(lat["extents"]), lat.get("boundary", "free"))
        measure = SingleSpinMeasure.from_dict(d["measure"])
        inter = d.get("interaction", {})
        extra = set(inter) - {"pairs", "kernel", "quartic"}
        if extra:
            raise ValueError(f"unknown interaction keys: {sorted(extra)}")
        interaction = Interaction(
            pairs=tuple((int(i), int(j), _unjsonable(J)) for i, j, J in inter.get("pairs", ())),
            kernel=tuple((tuple(off), _unjsonable(J)) for off, J in inter.get("kernel", ())),
            quartic=tuple((tuple(ss), float(J)) for ss, J in inter.get("quartic", ())),
        )
        f = d.get("field", {"mode": "uniform", "h": 0.0})
        mode = f.get("mode", "uniform")
        if mode == "uniform":
            fieldspec = FieldSpec.uniform(_unjsonable(f["h"]))
        elif mode == "per_site":
            fieldspec = FieldSpec.per_site(tuple(_unjsonable(v) for v in f["values"]))
        elif mode == "modulated":
            fieldspec = FieldSpec.modulated(_unjsonable(f["h"]),
                                            [_unjsonable(e) for e in f["eps"]],
                                            [tuple(k) for k in f["kvecs"]])
        else:
            raise ValueError(f"unknown field mode {mode!r}")
        return SpinModel(lattice, measure, interaction, fieldspec, float(d.get("beta", 1.0)))

    def model_hash(self):
        """sha256 over the canonical JSON form (floats as hex for exactness)."""
        blob = json.dumps(_hexify(self.to_dict()), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _jsonable(v):
    if isinstance(v, complex):
        if v.imag == 0:
            return v.real
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_jsonable(x) for x in v]
    return float(v)


def _unjsonable(v):
    if isinstance(v, dict):
        return complex(v["re"], v.get("im", 0.0))
    if isinstance(v, (list, tuple)):
        return tuple(_unjsonable(x) for x in v)
    return float(v)


def _hexify(obj):
    if isinstance(obj, float):
        return float(obj).hex()
    if isinstance(obj, dict):
        return {k: _hexify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_hexify(v) for v in obj]
    return obj


# convenience builders used across the test-suite and the CLI

def ising_ring(L, J=1.0, beta=1.0, h=0.0, weight=1.0):
    return SpinModel(LatticeSpec((L,), "periodic"), SingleSpinMeasure.ising(weight),
                     Interaction.nearest_neighbor(J), FieldSpec.uniform(h), beta)


def ising_chain(L, J=1.0, beta=1.0, h=0.0, weight=1.0):
    return SpinModel(LatticeSpec((L,), "free"), SingleSpinMeasure.ising(weight),
                     Interaction.nearest_neighbor(J), FieldSpec.uniform(h), beta)


def ising_torus(Lx, Ly, J=1.0, beta=1.0, h=0.0, weight=1.0):
    return SpinModel(LatticeSpec((Lx, Ly), "periodic"), SingleSpinMeasure.ising(weight),
                     Interaction.nearest_neighbor(J, ndim=2), FieldSpec.uniform(h), beta)
