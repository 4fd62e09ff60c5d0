"""Deterministic model corpora.

All randomized suites draw from SplitMix64 streams seeded explicitly, so a
(seed, index) pair always produces the same model on any platform.
"""

from .measures import SingleSpinMeasure
from .model import FieldSpec, Interaction, LatticeSpec, SpinModel

_MASK = (1 << 64) - 1


class SplitMix64:
    """SplitMix64 stream; uniform() uses the top 53 bits."""

    def __init__(self, seed):
        self.state = int(seed) & _MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self, lo=0.0, hi=1.0):
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u

    def randint(self, n):
        """Integer in [0, n); modulo bias is irrelevant at these sizes."""
        return self.next_u64() % n

    def choice(self, seq):
        return seq[self.randint(len(seq))]

    def shuffle(self, items):
        for i in range(len(items) - 1, 0, -1):
            j = self.randint(i + 1)
            items[i], items[j] = items[j], items[i]


def _stream(seed, index, salt):
    g = SplitMix64((int(seed) << 16) ^ (index * 0x9E3779B9) ^ salt)
    g.next_u64()
    return g


def random_ferromagnet(seed, index, max_sites=12, betas=(0.25, 1.0, 2.0), h=0.0):
    """Seeded ferromagnetic Ising model: ring or chain or small torus
    backbone plus random chords, couplings in (0, 1.5]."""
    g = _stream(seed, index, 0xF3A1)
    shape = g.choice(["ring", "chain", "torus", "strip"])
    if shape in ("ring", "chain"):
        L = 4 + g.randint(max_sites - 3)
        lattice = LatticeSpec((L,), "periodic" if shape == "ring" else "free")
    else:
        w = 2 + g.randint(2)
        l = 2 + g.randint(max(1, max_sites // w - 1))
        lattice = LatticeSpec((w, l), "periodic" if shape == "torus" else "free")
    n = lattice.nsites
    kernel = Interaction.nearest_neighbor(round(g.uniform(0.2, 1.5), 6), ndim=lattice.ndim)
    extra = []
    for _ in range(g.randint(1 + n // 2)):
        i, j = g.randint(n), g.randint(n)
        if i != j:
            extra.append((min(i, j), max(i, j), round(g.uniform(0.0, 1.5), 6)))
    inter = Interaction(pairs=tuple(extra), kernel=kernel.kernel)
    beta = g.choice(list(betas))
    return SpinModel(lattice, SingleSpinMeasure.ising(), inter, FieldSpec.uniform(h), beta)


def random_ly_model(seed, index, max_sites=8):
    """Ferromagnet with a uniform complex field in the right half plane."""
    g = _stream(seed, index, 0x7B42)
    base = random_ferromagnet(seed, index, max_sites=max_sites, betas=(0.5, 1.0))
    h = complex(round(g.uniform(0.1, 1.2), 6), round(g.uniform(-1.0, 1.0), 6))
    return SpinModel(base.lattice, base.measure, base.interaction,
                     FieldSpec.uniform(h), base.beta)


def random_measure_model(seed, index, max_continuous=6):
    """Ferromagnet whose single-spin measure cycles with the index through
    two-atom, uniform-[-1, 1] and quartic(1, 0); continuous-measure lattices
    stay small enough for tensor quadrature."""
    kind = ("ising", "uniform", "quartic")[index % 3]
    if kind == "ising":
        return random_ferromagnet(seed, index, max_sites=10, betas=(0.5, 1.0))
    g = _stream(seed, index, 0x2E55)
    n = 3 + g.randint(max_continuous - 2)
    measure = SingleSpinMeasure.uniform() if kind == "uniform" \
        else SingleSpinMeasure.quartic(1.0, 0.0)
    lattice = LatticeSpec((n,), g.choice(["free", "periodic"]))
    kernel = Interaction.nearest_neighbor(round(g.uniform(0.2, 1.2), 6), ndim=1)
    extra = []
    for _ in range(g.randint(1 + n // 2)):
        i, j = g.randint(n), g.randint(n)
        if i != j:
            extra.append((min(i, j), max(i, j), round(g.uniform(0.0, 1.0), 6)))
    inter = Interaction(pairs=tuple(extra), kernel=kernel.kernel)
    return SpinModel(lattice, measure, inter, FieldSpec.uniform(0.0),
                     g.choice([0.5, 1.0]))


def random_pair_instance(seed, index, max_sites=8):
    """Pure pair ferromagnet on an explicit random graph (for recovery tests)."""
    g = _stream(seed, index, 0x51C3)
    n = 4 + g.randint(max_sites - 3)
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if g.uniform() < 0.55:
                pairs.append((i, j, round(g.uniform(0.05, 1.2), 6)))
    if not pairs:
        pairs.append((0, 1, 0.5))
    return SpinModel(LatticeSpec((n,)), SingleSpinMeasure.ising(),
                     Interaction.from_pairs(pairs), FieldSpec.uniform(0.0),
                     g.choice([0.5, 1.0]))


def random_quartic_instance(seed, index, max_sites=8):
    """Pair + quartic ferromagnet with 8 beta J_U >= ln 2 on every quartic set
    and every pair coupling dominating the quartic couplings above it."""
    g = _stream(seed, index, 0x9D07)
    n = 6 + g.randint(max_sites - 5)
    beta = 1.0
    quads = []
    for _ in range(1 + g.randint(2)):
        sites = list(range(n))
        g.shuffle(sites)
        key = tuple(sorted(sites[:4]))
        if key not in [q[0] for q in quads]:
            quads.append((key, round(g.uniform(0.095, 0.25), 6)))
    over = {}
    for sites, cpl in quads:
        for a in range(4):
            for b in range(a + 1, 4):
                pm = (sites[a], sites[b])
                over[pm] = over.get(pm, 0.0) + cpl
    pair_j = {}
    for i in range(n):
        for j in range(i + 1, n):
            if g.uniform() < 0.5:
                pair_j[(i, j)] = round(g.uniform(0.3, 1.0), 6)
    for pm, need in over.items():
        pair_j[pm] = max(pair_j.get(pm, 0.0), round(need + g.uniform(0.05, 0.5), 6))
    pairs = [(i, j, cpl) for (i, j), cpl in sorted(pair_j.items())]
    return SpinModel(LatticeSpec((n,)), SingleSpinMeasure.ising(),
                     Interaction.from_pairs(pairs, quartic=quads),
                     FieldSpec.uniform(0.0), beta)
