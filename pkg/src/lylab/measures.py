"""Single-spin a-priori measures and their Laplace transforms.

Supported kinds: finite atom lists, densities on an interval (uniform and
exp(-a t^4 - b t^2)), and the uniform measure on the sphere S^{N-1} reduced
to its first-axis marginal c_N (1 - t^2)^{(N-3)/2} dt on [-1, 1].
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

_LY_SAMPLE_TOL = 1e-10


@dataclass(frozen=True)
class SingleSpinMeasure:
    kind: str  # "atoms" | "density" | "sphere_uniform"
    atom_locations: tuple = ()
    atom_weights: tuple = ()
    tag: str = ""  # density tag: "uniform" | "quartic"
    params: tuple = ()  # quartic (a, b)
    support: tuple = ()  # density support interval
    order: int = 64
    ncomp: int = 1  # sphere dimension N

    def __post_init__(self):
        if self.kind not in ("atoms", "density", "sphere_uniform"):
            raise ValueError(f"unknown measure kind {self.kind!r}")
        if self.kind == "atoms":
            if len(self.atom_locations) == 0:
                raise ValueError("atoms measure needs at least one atom")
            if any(w <= 0 for w in self.atom_weights):
                raise ValueError("atom weights must be positive")
        if self.kind == "density" and self.tag not in ("uniform", "quartic"):
            raise ValueError(f"unknown density tag {self.tag!r}")
        if self.kind == "sphere_uniform" and self.ncomp < 2:
            raise ValueError("sphere dimension must be >= 2")
        if self.order < 2:
            raise ValueError("quadrature order must be >= 2")

    # constructors

    @staticmethod
    def ising(weight=1.0):
        """Atoms at +-1 with equal weight (default mass 2)."""
        return SingleSpinMeasure("atoms", (1.0, -1.0), (weight, weight))

    @staticmethod
    def atoms(pairs):
        locs = tuple(float(l) for l, _ in pairs)
        wts = tuple(float(w) for _, w in pairs)
        return SingleSpinMeasure("atoms", locs, wts)

    @staticmethod
    def uniform(lo=-1.0, hi=1.0, order=64):
        """Uniform density 1/(hi-lo) on [lo, hi], total mass 1."""
        return SingleSpinMeasure("density", tag="uniform", support=(float(lo), float(hi)),
                                 order=order)

    @staticmethod
    def quartic(a, b=0.0, order=96):
        """Density exp(-a t^4 - b t^2) dt, a > 0, b of either sign."""
        if a <= 0:
            raise ValueError("quartic coefficient a must be positive")
        return SingleSpinMeasure("density", tag="quartic", params=(float(a), float(b)),
                                 order=order)

    @staticmethod
    def sphere(n, order=48):
        """Uniform probability measure on S^{n-1}, stored via its 1-axis marginal."""
        return SingleSpinMeasure("sphere_uniform", ncomp=int(n), order=order)

    # basic properties

    @property
    def support_radius(self):
        if self.kind == "atoms":
            return max(abs(l) for l in self.atom_locations)
        if self.kind == "sphere_uniform":
            return 1.0
        if self.tag == "uniform":
            return max(abs(self.support[0]), abs(self.support[1]))
        return self._quartic_cutoff()

    @property
    def is_even(self):
        if self.kind == "atoms":
            by_loc = {}
            for l, w in zip(self.atom_locations, self.atom_weights):
                by_loc[l] = by_loc.get(l, 0.0) + w
            return all(abs(by_loc.get(-l, 0.0) - w) <= 1e-15 * abs(w) for l, w in by_loc.items())
        if self.tag == "uniform":
            return abs(self.support[0] + self.support[1]) < 1e-15
        return True  # quartic and sphere marginals are even

    def is_pm1_atoms(self):
        """True for atoms exactly at +1 and -1 with equal weights."""
        if self.kind != "atoms" or len(self.atom_locations) != 2:
            return False
        locs = sorted(self.atom_locations)
        if locs != [-1.0, 1.0]:
            return False
        return self.atom_weights[0] == self.atom_weights[1]

    def _quartic_cutoff(self, h_budget=20.0):
        """Truncation half-width: tail of exp(-a t^4 - b t^2 + h t) below
        1e-20 of the peak for |h| up to h_budget."""
        a, b = self.params
        lo, hi = 0.5, 2.0
        g = lambda t: a * t**4 + b * t * t - h_budget * t - 50.0
        while g(hi) < 0.0:
            hi *= 2.0
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if g(mid) < 0.0:
                lo = mid
            else:
                hi = mid
        return hi

    def nodes_weights(self, order=None):
        """Discretization (locations, weights) integrating the measure.

        For atoms this is exact; for densities and sphere marginals it is a
        Gauss rule of the given order (default: the stored order).
        """
        order = int(order or self.order)
        if self.kind == "atoms":
            return (np.asarray(self.atom_locations, dtype=float),
                    np.asarray(self.atom_weights, dtype=float))
        if self.kind == "sphere_uniform":
            alpha = 0.5 * (self.ncomp - 3)
            x, w = roots_jacobi(order, alpha, alpha)
            return x, w / w.sum()
        if self.tag == "uniform":
            lo, hi = self.support
            x, w = roots_legendre(order)
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            return mid + half * x, w * half / (hi - lo)
        a, b = self.params
        cut = self._quartic_cutoff()
        x, w = roots_legendre(order)
        t = cut * x
        return t, w * cut * np.exp(-a * t**4 - b * t * t)

    def laplace_transform(self, h, order=None):
        """Laplace transform of the measure at complex h.

        Parameters
        ----------
        h : complex or array of complex
            Evaluation points; returns integral of exp(h*t) against the
            measure.
        order : int, optional
            Quadrature order override.  For the quartic tag the result is
            checked by doubling the order; a warning is raised if the two
            disagree beyond 1e-12 relative.
        """
        h = np.asarray(h, dtype=complex)
        x, w = self.nodes_weights(order)
        val = np.exp(np.multiply.outer(h, x)) @ w
        if self.tag == "quartic":
            x2, w2 = self.nodes_weights(2 * (order or self.order))
            val2 = np.exp(np.multiply.outer(h, x2)) @ w2
            scale = np.maximum(np.abs(val2), 1e-300)
            err = np.max(np.abs(val - val2) / scale)
            if err > 1e-12:
                warnings.warn(f"quartic laplace transform doubling check at {err:.2e}, "
                              "increase the order", stacklevel=2)
            val = val2
        return val if val.shape else complex(val)

    def normalization(self):
        """Total mass, i.e. the Laplace transform at 0."""
        _, w = self.nodes_weights()
        return float(np.sum(w))

    def moments(self, nmax, order=None):
        """Moments m_k = int t^k dmu for k = 0..nmax (not normalized)."""
        x, w = self.nodes_weights(order)
        return np.array([np.sum(w * x**k) for k in range(nmax + 1)])

    def vector_nodes_weights(self, order=None):
        """Full product rule on the sphere: unit vectors and weights.

        Supports N = 2 (trapezoid in the angle) and N = 3 (Gauss-Legendre in
        cos(theta) times trapezoid in phi); higher N would need a nested rule
        and is not implemented.
        """
        if self.kind != "sphere_uniform":
            raise ValueError("vector nodes only defined for sphere measures")
        order = int(order or self.order)
        if self.ncomp == 2:
            phi = 2.0 * np.pi * np.arange(order) / order
            pts = np.stack([np.cos(phi), np.sin(phi)], axis=1)
            return pts, np.full(order, 1.0 / order)
        if self.ncomp == 3:
            t, wt = roots_legendre(order)
            nphi = 2 * order
            phi = 2.0 * np.pi * np.arange(nphi) / nphi
            s = np.sqrt(1.0 - t**2)
            pts = np.empty((order * nphi, 3))
            wts = np.empty(order * nphi)
            for i in range(order):
                rows = slice(i * nphi, (i + 1) * nphi)
                pts[rows, 0] = t[i]
                pts[rows, 1] = s[i] * np.cos(phi)
                pts[rows, 2] = s[i] * np.sin(phi)
                wts[rows] = 0.5 * wt[i] / nphi
            return pts, wts
        raise NotImplementedError("sphere product rules implemented for N = 2 and 3 only")

    def verify_ly_condition(self, rect=(0.05, 3.0, -6.0, 6.0), shape=(40, 80), tol=_LY_SAMPLE_TOL):
        """Look for zeros of the Laplace transform in the right half plane.

        Samples |laplace_transform| on a rectangle, then polishes the sampled
        minimum with Newton steps.  If the polished point stays in the open
        half plane with relative modulus below `tol` it is reported as a
        witness and the condition fails; otherwise the report carries the
        sampled minimum as evidence (a proof only in the closed-form cases
        noted in `analytic_note`).
        """
        re0, re1, im0, im1 = rect
        if re0 <= 0:
            raise ValueError("rectangle must lie in the open right half plane")
        re = np.linspace(re0, re1, shape[0])
        im = np.linspace(im0, im1, shape[1])
        h = re[:, None] + 1j * im[None, :]
        vals = np.abs(self.laplace_transform(h.ravel())).reshape(h.shape)
        # local scale: the transform at the same real part, which is positive
        ref = np.abs(self.laplace_transform(re.astype(complex)))
        rel = vals / np.maximum(ref[:, None], 1e-300)
        k = np.argmin(rel)
        x, w = self.nodes_weights()
        z = complex(h.flat[k])
        for _ in range(12):
            f = np.sum(w * np.exp(z * x))
            df = np.sum(w * x * np.exp(z * x))
            if df == 0:
                break
            step = f / df
            if abs(step) > 1.0:
                step /= abs(step)
            z = z - step
        fz = abs(np.sum(w * np.exp(z * x)))
        scale = abs(np.sum(w * np.exp(z.real * x)))
        # zeros on the imaginary axis are allowed; require a real margin
        witness = None
        if z.real > 1e-8 and fz < tol * max(scale, 1e-300):
            witness = z
        note = ""
        if self.is_pm1_atoms():
            note = "cosh: zeros only on the imaginary axis"
        elif self.tag == "uniform" and self.is_even:
            note = "sinh(h)/h type: zeros only on the imaginary axis"
        elif self.kind == "sphere_uniform":
            note = "even marginal with positive even moments"
        return {
            "kind": self.kind or self.tag,
            "rect": rect,
            "shape": shape,
            "min_abs": float(rel.flat[k]),
            "argmin": complex(h.flat[k]),
            "witness": witness,
            "satisfied_on_sample": witness is None,
            "analytic_note": note,
        }

    def to_dict(self):
        if self.kind == "atoms":
            return {"kind": "atoms",
                    "points": [[l, w] for l, w in zip(self.atom_locations, self.atom_weights)]}
        if self.kind == "sphere_uniform":
            return {"kind": "sphere_uniform", "dimension": self.ncomp, "order": self.order}
        d = {"kind": "density", "tag": self.tag, "order": self.order}
        if self.tag == "uniform":
            d["support"] = list(self.support)
        else:
            d["a"], d["b"] = self.params
        return d

    @staticmethod
    def from_dict(d):
        kind = d.get("kind")
        if kind == "atoms":
            return SingleSpinMeasure.atoms([(p[0], p[1]) for p in d["points"]])
        if kind == "sphere_uniform":
            return SingleSpinMeasure.sphere(d["dimension"], d.get("order", 48))
        if kind == "density":
            if d["tag"] == "uniform":
                lo, hi = d.get("support", (-1.0, 1.0))
                return SingleSpinMeasure.uniform(lo, hi, d.get("order", 64))
            if d["tag"] == "quartic":
                return SingleSpinMeasure.quartic(d["a"], d.get("b", 0.0), d.get("order", 64))
        raise ValueError(f"cannot build a measure from {d!r}")
