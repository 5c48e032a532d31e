"""Connections ``z ds/dz = A(z) s`` with polynomial ``A``: transport, monodromy,
semisimplification, linearization and the Levelt datum.

All transports are fundamental-solution matrices: ``s(end) = T s(start)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .datum import MonodromyDatum
from .errors import PathThroughSingularity, ResonantObstruction, StepFailure, TruncationFailure
from .jordan import additive_jc, multiplicative_jc
from .matrix_core import (
    DEFAULT_TOL,
    NUMERIC_TOL,
    ConjugacyResult,
    as_matrix,
    conjugacy_test,
    mat_exp,
    nilpotent_log,
    norm2,
    scale_of,
)

TWO_PI_I = 2j * np.pi
DEFAULT_RTOL = 1e-10
DEFAULT_DEGREE = 25

# paths closer than this to the pole are refused
_MIN_RADIUS = 1e-12


class TruncationWarning(UserWarning):
    """The last recovered Taylor coefficient is not negligible."""


# --------------------------------------------------------------------------
# polynomials with matrix coefficients


def poly_eval(coeffs: Sequence[np.ndarray], z: complex) -> np.ndarray:
    out = np.array(coeffs[-1], dtype=complex)
    for c in reversed(coeffs[:-1]):
        out = out * z + c
    return out


def poly_deriv(coeffs: Sequence[np.ndarray]) -> list:
    if len(coeffs) == 1:
        return [np.zeros_like(coeffs[0])]
    return [k * coeffs[k] for k in range(1, len(coeffs))]


def poly_mul(P: Sequence[np.ndarray], Q: Sequence[np.ndarray]) -> list:
    out = [np.zeros_like(P[0] @ Q[0]) for _ in range(len(P) + len(Q) - 1)]
    for i, p in enumerate(P):
        for j, q in enumerate(Q):
            out[i + j] = out[i + j] + p @ q
    return out


def _trim(coeffs: list, tol: float = 0.0) -> list:
    while len(coeffs) > 1 and norm2(coeffs[-1]) <= tol:
        coeffs = coeffs[:-1]
    return coeffs


@dataclass(frozen=True)
class PolyConnection:
    """``A(z) = sum_k A_k z^k`` for the system ``z ds/dz = A(z) s``."""

    coeffs: tuple

    def __post_init__(self):
        cs = tuple(as_matrix(c, f"A_{k}") for k, c in enumerate(self.coeffs))
        if not cs:
            raise ValueError("a connection needs at least the residue A_0")
        if any(c.shape != cs[0].shape for c in cs):
            raise ValueError("all coefficients must have the same shape")
        object.__setattr__(self, "coeffs", cs)

    @classmethod
    def constant(cls, A0) -> "PolyConnection":
        return cls((A0,))

    @property
    def n(self) -> int:
        return self.coeffs[0].shape[0]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z: complex) -> np.ndarray:
        return poly_eval(self.coeffs, z)

    def scale(self) -> float:
        return scale_of(*self.coeffs)


def gauge_transform(conn: PolyConnection, g: Sequence, g_inv: Sequence) -> PolyConnection:
    """Connection of ``g s`` for solutions ``s``: ``g A g^-1 + z g' g^-1``.

    ``g`` and ``g_inv`` are coefficient lists of mutually inverse polynomial
    gauges (e.g. products of ``I + z^p X`` with ``X`` nilpotent).
    """
    g = [as_matrix(c) for c in g]
    g_inv = [as_matrix(c) for c in g_inv]
    check = _trim(poly_mul(g, g_inv), 1e-12 * scale_of(*g, *g_inv))
    eye = np.eye(conn.n)
    if len(check) != 1 or norm2(check[0] - eye) > 1e-12 * scale_of(*g, *g_inv):
        raise ValueError("g_inv is not the polynomial inverse of g")
    zdg = [k * c for k, c in enumerate(g)]
    first = poly_mul(poly_mul(g, list(conn.coeffs)), g_inv)
    second = poly_mul(zdg, g_inv)
    size = max(len(first), len(second))
    out = [np.zeros((conn.n, conn.n), complex) for _ in range(size)]
    for k, c in enumerate(first):
        out[k] += c
    for k, c in enumerate(second):
        out[k] += c
    return PolyConnection(tuple(_trim(out, 1e-14 * conn.scale())))


def unipotent_gauge(X, power: int = 1):
    """``(g, g^-1)`` coefficient lists for ``g(z) = I + z^power X`` with ``X`` nilpotent."""
    X = as_matrix(X)
    n = X.shape[0]
    if norm2(np.linalg.matrix_power(X, n)) > 1e-12 * scale_of(X) ** n:
        raise ValueError("X must be nilpotent for a polynomial inverse")
    g = [np.eye(n, dtype=complex)] + [np.zeros((n, n), complex)] * (power - 1) + [X]
    inv = [np.zeros((n, n), complex) for _ in range(power * (n - 1) + 1)]
    term = np.eye(n, dtype=complex)
    for k in range(n):
        inv[k * power] = term
        term = -term @ X
    return g, _trim(inv)


# --------------------------------------------------------------------------
# paths


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    def point(self, t: float) -> complex:
        return self.start + t * (self.end - self.start)

    def velocity(self, t: float) -> complex:
        return self.end - self.start

    def reversed(self) -> "Segment":
        return Segment(self.end, self.start)

    def distance_to(self, p: complex) -> float:
        d = self.end - self.start
        if d == 0:
            return abs(self.start - p)
        t = min(1.0, max(0.0, ((p - self.start) * np.conj(d)).real / abs(d) ** 2))
        return abs(self.point(t) - p)


@dataclass(frozen=True)
class Arc:
    """``center + radius e^{i theta}`` for theta from ``theta0`` to ``theta1``."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    def point(self, t: float) -> complex:
        th = self.theta0 + t * (self.theta1 - self.theta0)
        return self.center + self.radius * np.exp(1j * th)

    def velocity(self, t: float) -> complex:
        th = self.theta0 + t * (self.theta1 - self.theta0)
        return 1j * (self.theta1 - self.theta0) * self.radius * np.exp(1j * th)

    def reversed(self) -> "Arc":
        return Arc(self.center, self.radius, self.theta1, self.theta0)

    def distance_to(self, p: complex) -> float:
        # sampled; arcs here are always far from or centred on the poles
        ts = np.linspace(0.0, 1.0, 721)
        return float(np.min(np.abs(np.array([self.point(t) for t in ts]) - p)))


@dataclass(frozen=True)
class PathSpec:
    """A piecewise-smooth path made of segments and arcs."""

    pieces: tuple
    kind: str = "polyline"

    @classmethod
    def circle(cls, center: complex = 0.0, radius: float = 1.0, turns: int = 1, orientation: int = 1,
               start_angle: float = 0.0) -> "PathSpec":
        sweep = 2 * np.pi * turns * (1 if orientation > 0 else -1)
        return cls((Arc(complex(center), float(radius), start_angle, start_angle + sweep),), "circle")

    @classmethod
    def polyline(cls, points: Sequence[complex]) -> "PathSpec":
        pts = [complex(p) for p in points]
        if len(pts) < 2:
            raise ValueError("a polyline needs at least two points")
        return cls(tuple(Segment(a, b) for a, b in zip(pts[:-1], pts[1:])), "polyline")

    @classmethod
    def ray_segment(cls, t0: float, t1: float, direction: complex = 1.0) -> "PathSpec":
        """The ray piece ``t -> t * direction`` for ``t`` in ``[t0, t1]``."""
        d = complex(direction) / abs(direction)
        return cls((Segment(t0 * d, t1 * d),), "ray-segment")

    def then(self, other: "PathSpec") -> "PathSpec":
        return PathSpec(self.pieces + other.pieces, "composite")

    def reversed(self) -> "PathSpec":
        return PathSpec(tuple(p.reversed() for p in reversed(self.pieces)), self.kind)

    @property
    def start(self) -> complex:
        return self.pieces[0].point(0.0)

    @property
    def end(self) -> complex:
        return self.pieces[-1].point(1.0)

    def check_avoids(self, poles: Sequence[complex], min_distance: float = _MIN_RADIUS):
        for piece in self.pieces:
            for p in poles:
                if piece.distance_to(p) < min_distance:
                    raise PathThroughSingularity(f"path passes within {min_distance:g} of the pole {p}")


def radial_angular_path(z0: complex, base: complex = 1.0) -> PathSpec:
    """Radial from ``base`` to ``|z0| base/|base|`` then along the circle to ``z0``."""
    r = abs(z0)
    if r < _MIN_RADIUS:
        raise PathThroughSingularity("the standard path cannot end at the origin")
    b = complex(base)
    th0 = np.angle(b)
    th1 = th0 + np.angle(z0 / b)
    pieces = []
    if abs(abs(b) - r) > 0:
        pieces.append(Segment(b, r * b / abs(b)))
    if th1 != th0:
        pieces.append(Arc(0j, r, th0, th1))
    if not pieces:
        pieces.append(Segment(b, b))
    return PathSpec(tuple(pieces), "standard")


# --------------------------------------------------------------------------
# integration


def integrate_linear(rhs: Callable[[float], np.ndarray], t0: float, t1: float, Y0: np.ndarray,
                     rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Solve ``dY/dt = rhs(t) Y`` from ``t0`` to ``t1``."""
    n = Y0.shape[0]
    if t0 == t1:
        return Y0.copy()

    def f(t, y):
        return (rhs(t) @ y.reshape(n, n)).ravel()

    sol = solve_ivp(f, (t0, t1), Y0.astype(complex).ravel(), method="DOP853",
                    rtol=rtol, atol=rtol * 1e-3)
    if sol.status != 0 or not np.all(np.isfinite(sol.y[:, -1])):
        raise StepFailure(f"integrator failed: {sol.message}")
    return sol.y[:, -1].reshape(n, n)


def transport_field(B: Callable[[complex], np.ndarray], path: PathSpec, rtol: float = DEFAULT_RTOL,
                    poles: Sequence[complex] = (0j,), Y0: Optional[np.ndarray] = None) -> np.ndarray:
    """Transport of ``ds/dz = B(z) s`` along ``path``."""
    path.check_avoids(poles)
    Y = np.eye(B(path.start).shape[0], dtype=complex) if Y0 is None else np.array(Y0, dtype=complex)
    for piece in path.pieces:
        Y = integrate_linear(lambda t, p=piece: B(p.point(t)) * p.velocity(t), 0.0, 1.0, Y, rtol)
    return Y


def residue(conn: PolyConnection) -> np.ndarray:
    return conn.coeffs[0].copy()


def transport(conn: PolyConnection, path: PathSpec, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Fundamental-solution transport of ``z ds/dz = A(z) s`` along ``path``."""
    return transport_field(lambda z: conn(z) / z, path, rtol)


def monodromy(conn: PolyConnection, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Transport around the counterclockwise unit circle based at 1."""
    return transport(conn, PathSpec.circle(), rtol)


def monodromy_at(conn: PolyConnection, z0: complex, rtol: float = DEFAULT_RTOL,
                 M1: Optional[np.ndarray] = None) -> np.ndarray:
    """Monodromy based at ``z0``, as ``F M(1) F^-1`` along the standard path."""
    if M1 is None:
        M1 = monodromy(conn, rtol)
    if complex(z0) == 1:
        return M1.copy()
    F = transport(conn, radial_angular_path(complex(z0)), rtol)
    return F @ np.linalg.solve(F.T, M1.T).T


def arrow(conn: PolyConnection, lam: complex, z: complex, rtol: float = DEFAULT_RTOL) -> np.ndarray:
    """Transport along ``t -> e^{t lam} z``, ``t`` in ``[0, 1]``.

    In the logarithmic coordinate the equation reads ``dS/dt = lam A(e^{t lam} z) S``,
    which stays regular even at ``z = 0``.
    """
    lam = complex(lam)
    if lam == 0:
        return np.eye(conn.n, dtype=complex)
    z = complex(z)
    return integrate_linear(lambda t: lam * conn(np.exp(t * lam) * z), 0.0, 1.0,
                            np.eye(conn.n, dtype=complex), rtol)


# --------------------------------------------------------------------------
# semisimplification


@dataclass(frozen=True)
class Semisimplification:
    conn_s: PolyConnection
    Mu: np.ndarray
    monodromy: np.ndarray
    log_coeffs: tuple
    truncation_warning: bool


def _monodromy_samples(conn: PolyConnection, count: int, radius: float, rtol: float):
    """``(M(1), [M(z_j)])`` for ``z_j = radius e^{2 pi i j / count}``.

    The circle is walked arc by arc, so all samples share one integration.
    """
    n = conn.n
    B = lambda z: conn(z) / z  # noqa: E731
    F = np.eye(n, dtype=complex)
    if radius != 1.0:
        F = transport_field(B, PathSpec.polyline([1.0, radius]), rtol)
    frames = []
    step = 2 * np.pi / count
    for j in range(count):
        frames.append(F)
        F = transport_field(B, PathSpec((Arc(0j, radius, j * step, (j + 1) * step),)), rtol, Y0=F)
    # after the full loop F = M(r) F0, so M(1) = F0^-1 M(r) F0 = F0^-1 F
    M1 = np.linalg.solve(frames[0], F)
    samples = [Fj @ M1 @ np.linalg.inv(Fj) for Fj in frames]
    return M1, samples


def semisimplify(conn: PolyConnection, out_degree: int = DEFAULT_DEGREE, rtol: float = DEFAULT_RTOL,
                 tol: float = NUMERIC_TOL, radius: float = 1.0) -> Semisimplification:
    """Untwist the unipotent monodromy: ``A_s(z) = A(z) - log M_u(z) / 2 pi i``.

    ``log M_u(z)`` is sampled at ``2 (out_degree + 1)`` points on ``|z| = radius``
    and its Taylor coefficients recovered by FFT.  The constant term is set to
    the exact ``2 pi i N`` (``M_u(0) = exp(2 pi i N)``), so the residue of the
    output is exactly the semisimple part of the residue.
    """
    m = int(out_degree)
    count = 2 * (m + 1)
    M1, samples = _monodromy_samples(conn, count, radius, rtol)
    jc0 = additive_jc(conn.coeffs[0], tol)
    # every sample is conjugate to exp(2 pi i A_0); assigning to those values
    # keeps split defective eigenvalues of an ill-conditioned sample together
    anchors = np.exp(TWO_PI_I * np.asarray(jc0.spectral.eigenvalues))
    logs = np.array([nilpotent_log(multiplicative_jc(Mz, tol, anchors).Mu, tol) for Mz in samples])
    dft = np.fft.fft(logs, axis=0) / count
    log_coeffs = [dft[k] / radius ** k for k in range(m + 1)]

    log_coeffs[0] = TWO_PI_I * jc0.N
    coeffs = []
    for k in range(m + 1):
        Ak = conn.coeffs[k] if k < len(conn.coeffs) else np.zeros((conn.n, conn.n), complex)
        coeffs.append(Ak - log_coeffs[k] / TWO_PI_I)
    coeffs[0] = jc0.S
    for k in range(m + 1, len(conn.coeffs)):
        coeffs.append(conn.coeffs[k].copy())

    sizes = [norm2(c) for c in log_coeffs]
    # ignore coefficients at the integration noise floor
    floor = 100 * rtol * max(1.0, norm2(M1))
    flagged = m > 0 and sizes[m] > max(1e-6 * max(sizes), floor)
    if flagged:
        warnings.warn(f"log M_u coefficient of degree {m} is {sizes[m]:.2e}; raise out_degree",
                      TruncationWarning, stacklevel=2)
    Mu = multiplicative_jc(M1, tol, anchors).Mu
    return Semisimplification(conn_s=PolyConnection(tuple(_trim(coeffs, 0.0))), Mu=Mu, monodromy=M1,
                              log_coeffs=tuple(log_coeffs), truncation_warning=bool(flagged))


def _log_unipotent_at(conn: PolyConnection, w: complex, rtol: float, tol: float) -> np.ndarray:
    Mw = arrow(conn, TWO_PI_I, w, rtol)
    anchors = np.exp(TWO_PI_I * np.asarray(additive_jc(conn.coeffs[0], tol).spectral.eigenvalues))
    return nilpotent_log(multiplicative_jc(Mw, tol, anchors).Mu, tol)


def untwisting(conn: PolyConnection, lam: complex, z: complex, rtol: float = DEFAULT_RTOL,
               tol: float = NUMERIC_TOL) -> np.ndarray:
    """``sigma(lam, z) = exp(-(lam / 2 pi i) log M_u(e^lam z))``."""
    lam = complex(lam)
    if lam == 0:
        return np.eye(conn.n, dtype=complex)
    L = _log_unipotent_at(conn, np.exp(lam) * complex(z), rtol, tol)
    return mat_exp(-(lam / TWO_PI_I) * L)


def verify_cocycle(conn: PolyConnection, sample_count: int = 20, seed: int = 0, rtol: float = DEFAULT_RTOL,
                   lam_max: float = 1.0, samples: Optional[Sequence[tuple]] = None) -> float:
    """Largest relative cocycle residual over random groupoid points ``(mu, lam, z)``.

    Checks ``sigma(mu, e^lam z) Phi(mu, e^lam z) sigma(lam, z)
    = sigma(mu + lam, z) Phi(mu, e^lam z)``.
    """
    if samples is None:
        rng = np.random.default_rng(seed)

        def disk():
            return lam_max * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())

        samples = [(disk(), disk(), rng.uniform(0.3, 1.0) * np.exp(2j * np.pi * rng.uniform()))
                   for _ in range(sample_count)]
    worst = 0.0
    for mu, lam, z in samples:
        mu, lam, z = complex(mu), complex(lam), complex(z)
        w = np.exp(lam) * z
        phi = arrow(conn, mu, w, rtol)
        lhs = untwisting(conn, mu, w, rtol) @ phi @ untwisting(conn, lam, z, rtol)
        rhs = untwisting(conn, mu + lam, z, rtol) @ phi
        worst = max(worst, norm2(lhs - rhs) / max(1.0, norm2(rhs)))
    return worst


# --------------------------------------------------------------------------
# linearization


@dataclass(frozen=True)
class Linearizability:
    linearizable: bool
    witness: Optional[np.ndarray]
    monodromy: np.ndarray
    residual: float
    reason: str = ""

    def __bool__(self):
        return self.linearizable


def linearizability(conn: PolyConnection, rtol: float = DEFAULT_RTOL, tol: float = NUMERIC_TOL,
                    seed: int = 0, M: Optional[np.ndarray] = None) -> Linearizability:
    """Is the monodromy conjugate to ``exp(2 pi i Res)``?"""
    M = monodromy(conn, rtol) if M is None else M
    res: ConjugacyResult = conjugacy_test(M, mat_exp(TWO_PI_I * residue(conn)), tol=tol, seed=seed)
    return Linearizability(res.same_class, res.witness, M, res.residual, res.reason)


@dataclass(frozen=True)
class GaugeSeries:
    coeffs: tuple
    resonant_choices: tuple = ()
    residual: float = 0.0
    mode: str = "linearize-to-residue"
    target: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z: complex) -> np.ndarray:
        return poly_eval(self.coeffs, z)


MODES = ("linearize-to-residue", "semisimple-strict")


def _ad_operator(A0: np.ndarray) -> np.ndarray:
    # column-major vec: vec(A0 X - X A0) = (I kron A0 - A0^T kron I) vec X
    n = A0.shape[0]
    eye = np.eye(n)
    return np.kron(eye, A0) - np.kron(A0.T, eye)


def _gauge_recursion(coeffs: Sequence[np.ndarray], order: int, tol: float):
    A0 = coeffs[0]
    n = A0.shape[0]
    ad = _ad_operator(A0)
    g = [np.eye(n, dtype=complex)]
    choices = []
    for k in range(1, order + 1):
        rhs = np.zeros((n, n), complex)
        for j in range(1, min(k, len(coeffs) - 1) + 1):
            rhs += coeffs[j] @ g[k - j]
        L = k * np.eye(n * n) - ad
        U, sv, Vh = np.linalg.svd(L)
        cutoff = tol * max(1.0, sv[0])
        keep = sv > cutoff
        b = rhs.ravel(order="F")
        proj = U.conj().T @ b
        x = Vh[keep].conj().T @ (proj[keep] / sv[keep])
        kernel = int(np.count_nonzero(~keep))
        if kernel:
            obstruction = float(np.linalg.norm(proj[~keep]))
            if obstruction > tol * max(1.0, float(np.linalg.norm(b))):
                raise ResonantObstruction(k, obstruction)
            choices.append((k, kernel))
        g.append(x.reshape((n, n), order="F"))
    return g, choices


def _defining_residual(coeffs: Sequence[np.ndarray], g: Sequence[np.ndarray], points: int = 16,
                       radius: float = 0.5) -> float:
    A0 = coeffs[0]
    dg = [k * c for k, c in enumerate(g)]
    worst = 0.0
    for th in 2 * np.pi * np.arange(points) / points:
        z = radius * np.exp(1j * th)
        Az = poly_eval(coeffs, z)
        gz = poly_eval(g, z)
        R = poly_eval(dg, z) - Az @ gz + gz @ A0
        worst = max(worst, norm2(R) / max(1.0, norm2(Az @ gz)))
    return worst


def poincare_gauge(conn: PolyConnection, order: int = DEFAULT_DEGREE, mode: str = "linearize-to-residue",
                   tol: Optional[float] = None, rtol: float = DEFAULT_RTOL,
                   semisimplification: Optional[Semisimplification] = None) -> GaugeSeries:
    """Formal gauge ``g = I + g_1 z + ...`` with ``z g' = A g - g A_0``.

    Orders where ``k - ad A_0`` is singular are solved by minimal norm and
    reported; a right side with a cokernel component raises
    :class:`ResonantObstruction`.  ``semisimple-strict`` runs the recursion on
    the semisimplified connection, whose residue is semisimple.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if mode == "semisimple-strict":
        tol = NUMERIC_TOL if tol is None else tol
        ss = semisimplification or semisimplify(conn, order, rtol, tol)
        work = ss.conn_s
    else:
        tol = DEFAULT_TOL if tol is None else tol
        work = conn
    g, choices = _gauge_recursion(work.coeffs, order, tol)
    resid = _defining_residual(work.coeffs, g)
    if resid > tol:
        raise TruncationFailure(f"gauge residual {resid:.3e} exceeds {tol:.1e} at order {order}")
    return GaugeSeries(coeffs=tuple(g), resonant_choices=tuple(choices), residual=resid, mode=mode,
                       target=work.coeffs[0])


def functor_L(conn: PolyConnection, rtol: float = DEFAULT_RTOL, degree: int = DEFAULT_DEGREE,
              tol: float = NUMERIC_TOL) -> MonodromyDatum:
    """Monodromy datum ``(M, h, A)`` of a connection.

    ``h = g(1)`` for the strict linearization ``g`` of the semisimplified
    connection.  The series is summed on ``|z| = 1/2`` and carried to 1 by
    transport (``Y = g z^S`` solves the semisimplified system), which is
    better conditioned than summing at the edge of the sampled disk.
    """
    ss = semisimplify(conn, degree, rtol, tol)
    g = poincare_gauge(conn, degree, "semisimple-strict", tol, rtol, semisimplification=ss)
    S = ss.conn_s.coeffs[0]
    half = 0.5
    T = transport(ss.conn_s, PathSpec.polyline([half, 1.0]), rtol)
    h = T @ g(half) @ mat_exp(np.log(half) * S)
    return MonodromyDatum(M=ss.monodromy, h=h, A=residue(conn))
