"""Maslov index of curves of Lagrangian planes.

The index of a *simple arc* (a curve segment contained in the chart of some
plane Delta, with endpoints transversal to the reference plane Pi) is half
the signature difference of the endpoint chart matrices:

    index = (sign S_1 - sign S_0) / 2.

With this sign convention the arc ``S(t) = (t, .)`` in dimension one (chart
matrix moving from -1 to +1 through 0) has index +1.

:func:`maslov_index` sums simple-arc indices over a sampled curve, choosing
chart planes from a fixed catalogue and bisecting the sample range when no
single catalogue plane covers an arc.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ArcError, ChartError, PreconditionError, RefinementError
from .flows import _system, fundamental_solution
from .symplectic import apply_j
from .grassmann import (
    GrassmannCurve,
    canonicalize,
    horizontal_plane,
    intersection_dimension,
    plane_distance,
    random_lagrangian,
    to_chart,
    transversality_margin,
    validate_lagrangian,
    vertical_plane,
)

__all__ = [
    "simple_arc_index",
    "maslov_index",
    "maslov_partial_sums",
    "vertical_intersection_count",
    "reference_catalogue",
]

#: number of pseudo-random catalogue planes and their fixed seed
N_RANDOM_CHARTS = 16
_CATALOGUE_SEED = 20240913
#: minimal principal angle for a chart plane to be considered usable
CHART_MARGIN = 1e-5
MAX_DEPTH = 40

_catalogue_cache: dict[int, list[np.ndarray]] = {}


def reference_catalogue(n: int) -> list[np.ndarray]:
    """Fixed catalogue of candidate chart planes: Sigma, Pi, then 16
    pseudo-random Lagrangian planes drawn with a fixed seed."""
    if n not in _catalogue_cache:
        rng = np.random.default_rng(_CATALOGUE_SEED + n)
        cats = [horizontal_plane(n), vertical_plane(n)]
        cats.extend(random_lagrangian(rng, n) for _ in range(N_RANDOM_CHARTS))
        _catalogue_cache[n] = cats
    return _catalogue_cache[n]


def _signature(s: np.ndarray, tol: float = 1e-9) -> int:
    """Signature of a symmetric matrix; ArcError on (numerically) zero eigenvalues."""
    w = np.linalg.eigvalsh(0.5 * (s + s.T))
    scale = max(1.0, float(np.max(np.abs(w))))
    if np.any(np.abs(w) <= tol * scale):
        raise ArcError("chart matrix is singular: endpoint touches the reference plane")
    return int(np.sum(w > 0) - np.sum(w < 0))


def simple_arc_index(l0: np.ndarray, l1: np.ndarray, pi: np.ndarray, delta: np.ndarray) -> int:
    """Index of a simple arc from l0 to l1 in the chart ``(delta, pi)``.

    Both endpoints must be transversal to ``delta`` (so chart matrices
    exist) and to ``pi`` (so the signatures are defined); the arc is assumed
    to stay inside the chart.
    """
    s0 = to_chart(l0, delta, pi).s
    s1 = to_chart(l1, delta, pi).s
    diff = _signature(s1) - _signature(s0)
    return diff // 2


def _arc_chart(
    planes: Sequence[np.ndarray],
    pi: np.ndarray,
    catalogue: Sequence[np.ndarray],
    gaps: Sequence[float] | None = None,
):
    """First catalogue plane transversal (with margin) to pi and to every plane.

    When ``gaps`` holds the angular distances between consecutive samples,
    the chart plane must additionally clear each pair by more than its gap:
    otherwise the short path between the samples can wrap around the chart
    plane and the signature difference counts a spurious reference crossing.
    """
    for delta in catalogue:
        if transversality_margin(delta, pi) <= CHART_MARGIN:
            continue
        margins = [transversality_margin(delta, p) for p in planes]
        if any(m <= CHART_MARGIN for m in margins):
            continue
        if gaps is not None and any(
            max(margins[i], margins[i + 1]) <= g for i, g in enumerate(gaps)
        ):
            continue
        return delta
    return None


def _sample_gaps(planes: Sequence[np.ndarray]) -> list[float]:
    """Angular upper bound of the distance between consecutive samples."""
    return [
        float(np.arcsin(min(1.0, plane_distance(planes[i], planes[i + 1]))))
        for i in range(len(planes) - 1)
    ]


def maslov_index(curve: GrassmannCurve, pi: np.ndarray, *, max_depth: int = MAX_DEPTH) -> int:
    """Maslov index of a sampled curve with respect to the plane ``pi``.

    The sample range is split adaptively: each piece needs one catalogue
    plane transversal to all its samples, and split points must be
    transversal to ``pi``.  Raises :class:`RefinementError` when the
    recursion exceeds ``max_depth`` or runs out of usable split points, and
    :class:`PreconditionError` when a curve endpoint touches ``pi``.
    """
    pi = validate_lagrangian(np.asarray(pi, dtype=float))
    if len(curve) < 2:
        return 0
    for end in (curve.planes[0], curve.planes[-1]):
        if intersection_dimension(end, pi) > 0:
            raise PreconditionError("curve endpoint is not transversal to the reference plane")
    catalogue = reference_catalogue(curve.n)

    def arc(i: int, j: int, depth: int) -> int:
        if depth > max_depth:
            raise RefinementError(f"chart refinement exceeded depth {max_depth}")
        samples = curve.planes[i : j + 1]
        delta = _arc_chart(samples, pi, catalogue, gaps=_sample_gaps(samples))
        if delta is not None:
            try:
                return simple_arc_index(curve.planes[i], curve.planes[j], pi, delta)
            except ArcError:
                pass  # endpoint touches pi in this chart: fall through to split
        if j == i + 1:
            raise RefinementError(
                f"no catalogue chart covers the arc between samples {i} and {j}"
            )
        mid = _split_point(curve, pi, i, j)
        return arc(i, mid, depth + 1) + arc(mid, j, depth + 1)

    return arc(0, len(curve) - 1, 0)


def _split_point(curve: GrassmannCurve, pi: np.ndarray, i: int, j: int) -> int:
    """Sample index in (i, j) transversal to pi, nearest to the midpoint."""
    mid = (i + j) // 2
    order = sorted(range(i + 1, j), key=lambda k: (abs(k - mid), k))
    for k in order:
        if intersection_dimension(curve.planes[k], pi) == 0:
            return k
    raise RefinementError("no split sample is transversal to the reference plane")


def maslov_partial_sums(curve: GrassmannCurve, pi: np.ndarray) -> list[float]:
    """Cumulative Maslov index along the sampled curve, one value per node.

    Nodes where the increment cannot be computed (endpoint on pi, no usable
    chart) carry ``nan``; subsequent sums resume from the last good value.
    """
    sums: list[float] = [0.0]
    total = 0.0
    for k in range(1, len(curve)):
        sub = GrassmannCurve(times=curve.times[k - 1 : k + 1], planes=curve.planes[k - 1 : k + 1])
        try:
            total += maslov_index(sub, pi)
            sums.append(total)
        except (ArcError, RefinementError, PreconditionError):
            sums.append(float("nan"))
    return sums


def _restricted_form_sign(h, delta_q: np.ndarray, ts: np.ndarray, tol: float = 1e-10) -> int:
    """Uniform sign of the Hamiltonian form restricted to a plane, else raise."""
    sys = _system(h)
    sign = 0
    for t in ts:
        jm = apply_j(sys(t))
        ham = 0.5 * (jm + jm.T)
        w = np.linalg.eigvalsh(delta_q.T @ ham @ delta_q)
        scale = max(1.0, float(np.max(np.abs(w))))
        pos = bool(np.any(w > tol * scale))
        neg = bool(np.any(w < -tol * scale))
        if pos and neg:
            raise PreconditionError(
                "Hamiltonian form restricted to the counting plane is indefinite"
            )
        here = 1 if pos else (-1 if neg else 0)
        if here != 0:
            if sign != 0 and here != sign:
                raise PreconditionError(
                    "restricted Hamiltonian form changes sign along the interval"
                )
            sign = here
    return sign


def vertical_intersection_count(h, l0: np.ndarray, delta: np.ndarray,
                                grid: Sequence[float]) -> int:
    """Total intersection count of the flow of ``l0`` with the plane ``delta``.

    Requires the Hamiltonian form restricted to ``delta`` to be
    sign-semidefinite on the whole interval (so crossings are one-way and
    counting multiplicities is meaningful).  Crossing times are bracketed by
    sign changes of the chart determinant on a refined sample set and their
    multiplicity evaluated with :func:`intersection_dimension`.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < 2:
        raise PreconditionError("grid needs at least two nodes")
    delta = validate_lagrangian(np.asarray(delta, dtype=float))
    n = delta.shape[0] // 2
    qd, _ = np.linalg.qr(delta)

    refine = 6
    ts = np.unique(np.concatenate([np.linspace(a, b, refine + 1)
                                   for a, b in zip(grid[:-1], grid[1:])]))
    _restricted_form_sign(h, qd, ts)

    interp, _ = fundamental_solution(h, grid[0], grid[-1])
    l0 = validate_lagrangian(np.asarray(l0, dtype=float))

    def plane(t: float) -> np.ndarray:
        q, _ = np.linalg.qr(interp(t) @ l0)
        return q

    catalogue = reference_catalogue(n)

    def pick_aux(samples: list[np.ndarray]) -> np.ndarray:
        aux = _arc_chart(samples, delta, catalogue, gaps=_sample_gaps(samples))
        if aux is None:
            raise RefinementError("no catalogue chart covers the counting segment")
        return aux

    def n_neg(p: np.ndarray, aux: np.ndarray) -> int:
        s = to_chart(p, aux, delta).s
        w = np.linalg.eigvalsh(s)
        return int(np.sum(w < 0))

    total = 0
    span = float(ts[-1] - ts[0])

    def count_segment(ta: float, tb: float, pa: np.ndarray, pb: np.ndarray,
                      na: int, nb: int, aux: np.ndarray, depth: int = 0) -> int:
        d = abs(nb - na)
        if d == 0:
            return 0
        if tb - ta < 1e-12 * span or depth > 60:
            tstar = 0.5 * (ta + tb)
            mult = intersection_dimension(plane(tstar), delta)
            return mult if mult > 0 else d
        tm = 0.5 * (ta + tb)
        pm = plane(tm)
        try:
            nm = n_neg(pm, aux)
        except ChartError:
            tm = ta + 0.37 * (tb - ta)
            pm = plane(tm)
            nm = n_neg(pm, aux)
        return (count_segment(ta, tm, pa, pm, na, nm, aux, depth + 1)
                + count_segment(tm, tb, pm, pb, nm, nb, aux, depth + 1))

    k = 0
    while k < ts.size - 1:
        pa, pb = plane(ts[k]), plane(ts[k + 1])
        aux = pick_aux([pa, pb])
        na, nb = n_neg(pa, aux), n_neg(pb, aux)
        total += count_segment(ts[k], ts[k + 1], pa, pb, na, nb, aux)
        k += 1
    return total
