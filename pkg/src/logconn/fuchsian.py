"""Fuchsian systems ``ds/dz = sum_i A_i / (z - d_i) s`` on the punctured sphere.

Loops are keyholes based at ``x0``: out along a straight tail, once
counterclockwise around a small circle at the pole, and back.  They are
ordered by the angle of ``d_i - x0`` measured counterclockwise from the middle
of the widest angular gap, so that ``l_1 l_2 ... l_m`` is a big
counterclockwise loop around all poles.  With transports composing
right-to-left this gives ``M_inf M_m ... M_1 = I``, where ``M_inf`` is the
transport around a large clockwise circle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classification import validate_datum
from .datum import MonodromyDatum
from .errors import CompatibilitySearchFailure, DegenerateGeometry, LogConnError
from .jordan import additive_jc
from .local import DEFAULT_RTOL, Arc, PathSpec, PolyConnection, Segment, functor_L, transport_field
from .matrix_core import NUMERIC_TOL, as_matrix, mat_exp, norm2

TWO_PI_I = 2j * np.pi
RADIUS_FLOOR = 1e-6
LOCAL_DEGREE = 40

# Keyhole paths are long and the monodromies can be large, so global error
# grows well past the per-step tolerance; integrate 100x tighter than asked.
STEP_SAFETY = 1e-2


def _step_rtol(rtol: float) -> float:
    return max(rtol * STEP_SAFETY, 1e-13)


@dataclass(frozen=True)
class FuchsianSystem:
    poles: tuple
    residues: tuple
    basepoint: Optional[complex] = None

    def __post_init__(self):
        poles = tuple(complex(p) for p in self.poles)
        res = tuple(as_matrix(A, f"A_{i + 1}") for i, A in enumerate(self.residues))
        if len(poles) != len(res) or not poles:
            raise ValueError("need one residue per pole and at least one pole")
        if any(A.shape != res[0].shape for A in res):
            raise ValueError("residues must share a shape")
        for i in range(len(poles)):
            for j in range(i):
                if poles[i] == poles[j]:
                    raise ValueError(f"repeated pole {poles[i]}")
        object.__setattr__(self, "poles", poles)
        object.__setattr__(self, "residues", res)
        if self.basepoint is not None:
            x0 = complex(self.basepoint)
            if any(x0 == p for p in poles):
                raise ValueError("the basepoint is a pole")
            object.__setattr__(self, "basepoint", x0)

    @property
    def n(self) -> int:
        return self.residues[0].shape[0]

    def field(self, z: complex) -> np.ndarray:
        out = np.zeros((self.n, self.n), complex)
        for d, A in zip(self.poles, self.residues):
            out += A / (z - d)
        return out


def residue_at_infinity(sys: FuchsianSystem) -> np.ndarray:
    return -sum(sys.residues)


@dataclass(frozen=True)
class LoopGenerators:
    """Keyhole loops in product order; ``order[k]`` is the input index of loop ``k``."""

    x0: complex
    order: tuple
    radii: tuple
    junctions: tuple
    loops: tuple
    tails: tuple
    reference_angle: float

    def circle_points(self, k: int, count: int = 256) -> np.ndarray:
        arc = self.loops[k].pieces[1]
        return np.array([arc.point(t) for t in np.linspace(0, 1, count)])


def _default_basepoint(poles: Sequence[complex]) -> list:
    c = np.mean(poles)
    R = max(abs(p - c) for p in poles)
    # a few generic directions; the first one with non-degenerate tails wins
    golden = np.pi * (3 - np.sqrt(5))
    return [c + (1.5 * R + 1.0) * np.exp(1j * (0.4142 + k * golden)) for k in range(24)]


def _keyholes(poles: Sequence[complex], x0: complex) -> LoopGenerators:
    m = len(poles)
    radii = []
    for i, d in enumerate(poles):
        dists = [abs(d - e) for j, e in enumerate(poles) if j != i] + [abs(d - x0)]
        r = min(dists) / 3.0
        if r < RADIUS_FLOOR:
            raise DegenerateGeometry(f"keyhole radius {r:.2e} at pole {d} is below {RADIUS_FLOOR:g}")
        radii.append(r)
    angles = np.array([np.angle(d - x0) for d in poles])
    srt = np.sort(angles)
    gaps = np.diff(np.concatenate([srt, [srt[0] + 2 * np.pi]]))
    k = int(np.argmax(gaps))
    ref = srt[k] + gaps[k] / 2
    rel = np.mod(angles - ref, 2 * np.pi)
    order = tuple(int(i) for i in np.argsort(rel, kind="stable"))

    loops, tails, junctions = [], [], []
    for i in order:
        d, r = poles[i], radii[i]
        phi = float(np.angle(x0 - d))
        jn = d + r * np.exp(1j * phi)
        tail = Segment(x0, jn)
        # tails may cross other keyhole circles: the straight tails form a
        # tree at x0, and only hitting a pole changes the homotopy class
        for j, e in enumerate(poles):
            if j != i and tail.distance_to(e) <= RADIUS_FLOOR:
                raise DegenerateGeometry(f"tail to pole {d} runs into pole {e}")
        arc = Arc(d, r, phi, phi + 2 * np.pi)
        loops.append(PathSpec((tail, arc, tail.reversed()), "keyhole"))
        tails.append(tail)
        junctions.append(jn)
    return LoopGenerators(x0=x0, order=order, radii=tuple(radii[i] for i in order),
                          junctions=tuple(junctions), loops=tuple(loops), tails=tuple(tails),
                          reference_angle=float(ref))


def _clearance(poles: Sequence[complex], x0: complex) -> float:
    """Smallest distance from a tail to a foreign pole, relative to that pole's spacing."""
    worst = np.inf
    for i, d in enumerate(poles):
        tail = Segment(x0, d)
        for j, e in enumerate(poles):
            if j != i:
                spacing = min(abs(e - f) for k, f in enumerate(poles) if k != j)
                worst = min(worst, tail.distance_to(e) / spacing)
    return worst


def loop_generators(sys: FuchsianSystem) -> LoopGenerators:
    if sys.basepoint is not None:
        return _keyholes(sys.poles, sys.basepoint)
    candidates = _default_basepoint(sys.poles)
    if len(sys.poles) > 1:
        candidates.sort(key=lambda x0: -_clearance(sys.poles, x0))
    return _keyholes(sys.poles, candidates[0])


def with_basepoint(sys: FuchsianSystem) -> FuchsianSystem:
    """The same system with the basepoint made explicit."""
    return FuchsianSystem(sys.poles, sys.residues, loop_generators(sys).x0)


@dataclass(frozen=True)
class GlobalMonodromy:
    loops: LoopGenerators
    monodromies: tuple
    infinity: np.ndarray
    product_residual: float
    relative_residual: float

    def by_input_index(self) -> dict:
        return {i: M for i, M in zip(self.loops.order, self.monodromies)}


def _infinity_loop(sys: FuchsianSystem, gens: LoopGenerators) -> PathSpec:
    x0 = gens.x0
    R = 1.5 * max(abs(d - x0) for d in sys.poles) + 1.0
    th = gens.reference_angle
    out = Segment(x0, x0 + R * np.exp(1j * th))
    return PathSpec((out, Arc(x0, R, th, th - 2 * np.pi), out.reversed()), "keyhole")


def global_monodromy(sys: FuchsianSystem, rtol: float = DEFAULT_RTOL,
                     gens: Optional[LoopGenerators] = None) -> GlobalMonodromy:
    gens = gens or loop_generators(sys)
    step = _step_rtol(rtol)
    Ms = tuple(transport_field(sys.field, loop, step, sys.poles) for loop in gens.loops)
    M_inf = transport_field(sys.field, _infinity_loop(sys, gens), step, sys.poles)
    prod = np.eye(sys.n, dtype=complex)
    for M in Ms:
        prod = M @ prod
    resid = norm2(M_inf @ prod - np.eye(sys.n))
    # the absolute residual is bounded below by roundoff times this product
    cond = max(1.0, norm2(M_inf) * norm2(prod))
    return GlobalMonodromy(gens, Ms, M_inf, float(resid), float(resid / cond))


def local_connection_at(sys: FuchsianSystem, i: int, radius: float, phi: float,
                        degree: int = LOCAL_DEGREE) -> PolyConnection:
    """Taylor model at pole ``i`` in the coordinate ``z = d_i + radius e^{i phi} u``.

    ``u = 1`` is the keyhole junction and the other poles sit at ``|u| >= 3``.
    """
    c = radius * np.exp(1j * phi)
    coeffs = [sys.residues[i].copy()] + [np.zeros((sys.n, sys.n), complex) for _ in range(degree)]
    for j, (e, Aj) in enumerate(zip(sys.poles, sys.residues)):
        if j == i:
            continue
        q = c / (sys.poles[i] - e)
        # w / (w + delta) = sum_k (-1)^(k-1) (w / delta)^k
        for k in range(1, degree + 1):
            coeffs[k] += (-1) ** (k - 1) * q ** k * Aj
    return PolyConnection(tuple(coeffs))


def _charpoly_residual(M: np.ndarray, A: np.ndarray) -> float:
    ref = np.poly(mat_exp(TWO_PI_I * A))
    got = np.poly(M)
    return float(np.max(np.abs(got - ref)) / max(1.0, np.max(np.abs(ref))))


@dataclass
class PoleReport:
    index: int
    pole: complex
    A: np.ndarray
    M: np.ndarray
    S: np.ndarray
    N: np.ndarray
    charpoly_residual: float
    datum: Optional[MonodromyDatum] = None
    validation: dict = field(default_factory=dict)
    failure: str = ""

    @property
    def compatible(self) -> bool:
        return self.datum is not None and not self.failure


@dataclass
class GlobalReport:
    system: FuchsianSystem
    monodromy: GlobalMonodromy
    poles: list
    infinity_residue: np.ndarray
    tol: float

    @property
    def product_residual(self) -> float:
        return self.monodromy.product_residual

    @property
    def data(self) -> tuple:
        """The per-pole tuple ``(M_i, h_i, A_i)``; ``None`` where the search failed."""
        return tuple(p.datum for p in self.poles)


def assemble_global_datum(sys: FuchsianSystem, rtol: float = DEFAULT_RTOL, tol: float = NUMERIC_TOL,
                          degree: int = LOCAL_DEGREE) -> GlobalReport:
    """Per-pole compatibility data and the global product relation.

    ``h_i`` is found through the local model: the strict linearization of the
    Taylor expansion at the pole gives ``h_loc`` at the junction, which is
    carried back to ``x0`` along the tail.
    """
    gm = global_monodromy(sys, rtol)
    gens = gm.loops
    reports = []
    for k, i in enumerate(gens.order):
        A = sys.residues[i]
        M = gm.monodromies[k]
        jc = additive_jc(A)
        rep = PoleReport(index=i, pole=sys.poles[i], A=A, M=M, S=jc.S, N=jc.N,
                         charpoly_residual=_charpoly_residual(M, A))
        try:
            phi = float(np.angle(gens.x0 - sys.poles[i]))
            conn = local_connection_at(sys, i, gens.radii[k], phi, degree)
            loc = functor_L(conn, rtol, min(degree, 40), tol)
            F = transport_field(sys.field, PathSpec((gens.tails[k].reversed(),)), _step_rtol(rtol), sys.poles)
            datum = MonodromyDatum(M=M, h=F @ loc.h, A=A)
            report = validate_datum(datum, tol)
            rep.validation = dict(report.residuals)
            if report:
                rep.datum = datum
            else:
                rep.failure = str(CompatibilitySearchFailure(f"no valid h found; failing {report.failed()}"))
        except LogConnError as err:
            rep.failure = f"{type(err).__name__}: {err}"
        reports.append(rep)
    return GlobalReport(sys, gm, reports, residue_at_infinity(sys), tol)


def loop_samples(sys: FuchsianSystem, count: int = 64, rtol: float = DEFAULT_RTOL) -> list:
    """Fundamental solution sampled along each keyhole circle.

    Returns one ``(theta, matrices)`` pair per loop, ``theta`` measured from
    the junction; solutions are normalized to ``I`` at ``x0``.
    """
    gens = loop_generators(sys)
    out = []
    for loop in gens.loops:
        tail, arc, _ = loop.pieces
        Y = transport_field(sys.field, PathSpec((tail,)), rtol, sys.poles)
        thetas = np.linspace(0.0, 2 * np.pi, count)
        mats = [Y]
        for a, b in zip(thetas[:-1], thetas[1:]):
            piece = Arc(arc.center, arc.radius, arc.theta0 + a, arc.theta0 + b)
            Y = transport_field(sys.field, PathSpec((piece,)), rtol, sys.poles, Y0=Y)
            mats.append(Y)
        out.append((thetas, mats))
    return out


def random_system(rng: np.random.Generator, m: int, n: int, scale: float = 0.3) -> FuchsianSystem:
    """Seeded test system with well-separated poles and moderate residues.

    Residue entries are complex Gaussian times ``scale / sqrt(n)``.  At the
    default scale the monodromies stay below a few hundred in norm; at 0.6
    they reach ``1e4`` and the absolute product residual is roundoff-limited.
    """
    while True:
        poles = rng.uniform(-2, 2, m) + 1j * rng.uniform(-2, 2, m)
        if m == 1 or min(abs(a - b) for k, a in enumerate(poles) for b in poles[:k]) > 0.5:
            break
    res = [scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(n) for _ in range(m)]
    return FuchsianSystem(tuple(poles), tuple(res))
