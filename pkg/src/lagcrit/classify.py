"""Second-order classification of critical points.

The Lagrangian Hessian is projected onto an orthonormal basis of the
constraint tangent space and judged by the signs of its eigenvalues. For
the low-dimensional cases (2 variables / 1 constraint, 3/1 and 3/2) the
classical hand tests with explicit perpendicular vectors are evaluated as
well and recorded next to the eigenvalue verdict.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .densela import RankDeficiencyError, determinant, null_space_basis, sym_eigenvalues
from .kkt import CriticalPoint, Problem, constraint_jacobian, lagrangian_hessian

DEFAULT_TOL = 1e-8


class Verdict(str, enum.Enum):
    STRICT_LOCAL_MIN = "StrictLocalMin"
    STRICT_LOCAL_MAX = "StrictLocalMax"
    SADDLE = "Saddle"
    INDETERMINATE = "Indeterminate"
    LICQ_FAILURE = "LicqFailure"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class SpecializedCheck:
    """Hand-style test for n=2,m=1 / n=3,m=1 / n=3,m=2.

    ``vectors`` are the unnormalized perpendicular vectors the test was run
    with; ``witnesses`` holds v^T H v, or a11 and det(A) for n=3, m=1,
    together with their values rescaled to unit-length vectors.
    """

    case: str
    vectors: tuple[np.ndarray, ...]
    witnesses: dict[str, float]
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "vectors": [v.tolist() for v in self.vectors],
            "witnesses": dict(self.witnesses),
            "verdict": self.verdict.value,
        }


@dataclass(frozen=True)
class ClassificationReport:
    point: CriticalPoint
    licq_ok: bool
    verdict: Verdict
    tangent_basis: tuple[np.ndarray, ...] = ()
    lagrangian_hessian: np.ndarray | None = None
    projected_hessian: np.ndarray | None = None
    eigenvalues: np.ndarray = field(default_factory=lambda: np.zeros(0))
    specialized_check: SpecializedCheck | None = None


def projected_hessian(H: np.ndarray, basis: Sequence[np.ndarray]) -> np.ndarray:
    V = np.column_stack(basis)
    A = V.T @ H @ V
    return 0.5 * (A + A.T)


def curvature_scale(A: np.ndarray) -> float:
    """max(1, ||A||_inf), the scale tolerances are measured against."""
    if A.size == 0:
        return 1.0
    return max(1.0, float(np.max(np.sum(np.abs(A), axis=1))))


def verdict_from_eigenvalues(eigs: np.ndarray, scale: float, tol: float = DEFAULT_TOL) -> Verdict:
    eps = tol * scale
    if np.all(eigs > eps):
        return Verdict.STRICT_LOCAL_MIN
    if np.all(eigs < -eps):
        return Verdict.STRICT_LOCAL_MAX
    if eigs[0] < -eps and eigs[-1] > eps:
        return Verdict.SADDLE
    return Verdict.INDETERMINATE


def perpendicular_vectors(grad: np.ndarray) -> list[np.ndarray]:
    """Vectors g_p e_j - g_j e_p (j != p) spanning the complement of ``grad``.

    p is the first coordinate that is not negligible. For grad = (a, b) this
    gives (-b, a); for (a, b, c) with a != 0 it gives (-b, a, 0), (-c, 0, a).
    """
    grad = np.asarray(grad, dtype=float)
    big = np.max(np.abs(grad))
    p = int(np.argmax(np.abs(grad) >= 1e-3 * big))
    out = []
    for j in range(grad.size):
        if j == p:
            continue
        v = np.zeros(grad.size)
        v[j] = grad[p]
        v[p] = -grad[j]
        out.append(v)
    return out


def _sign_verdict(value: float, eps: float) -> Verdict:
    if value > eps:
        return Verdict.STRICT_LOCAL_MIN
    if value < -eps:
        return Verdict.STRICT_LOCAL_MAX
    return Verdict.INDETERMINATE


def single_vector_test(H: np.ndarray, v: np.ndarray, case: str, scale: float, tol: float):
    vHv = float(v @ H @ v)
    unit = vHv / float(v @ v)
    return SpecializedCheck(
        case, (v,), {"vHv": vHv, "vHv_unit": unit}, _sign_verdict(unit, tol * scale)
    )


def two_vector_test(H: np.ndarray, v1: np.ndarray, v2: np.ndarray, scale: float, tol: float):
    """a11 > 0 and det(A) > 0 with A = V^T H V, V = (v1 v2)."""
    V = np.column_stack([v1, v2])
    A = V.T @ H @ V
    A = 0.5 * (A + A.T)
    a11 = float(A[0, 0])
    det = determinant(A)
    a11_unit = a11 / float(v1 @ v1)
    det_unit = det / determinant(V.T @ V)
    eps = tol * scale
    if det_unit > eps * eps and a11_unit > eps:
        verdict = Verdict.STRICT_LOCAL_MIN
    elif det_unit > eps * eps and a11_unit < -eps:
        verdict = Verdict.STRICT_LOCAL_MAX
    elif det_unit < -eps * eps:
        verdict = Verdict.SADDLE
    else:
        verdict = Verdict.INDETERMINATE
    return SpecializedCheck(
        "n3m1",
        (v1, v2),
        {"a11": a11, "det": det, "a11_unit": a11_unit, "det_unit": det_unit},
        verdict,
    )


def specialized_check(
    H: np.ndarray, J: np.ndarray, scale: float, tol: float = DEFAULT_TOL
) -> SpecializedCheck | None:
    m, n = J.shape
    if (n, m) == (2, 1):
        (v,) = perpendicular_vectors(J[0])
        return single_vector_test(H, v, "n2m1", scale, tol)
    if (n, m) == (3, 1):
        v1, v2 = perpendicular_vectors(J[0])
        return two_vector_test(H, v1, v2, scale, tol)
    if (n, m) == (3, 2):
        return single_vector_test(H, np.cross(J[0], J[1]), "n3m2", scale, tol)
    return None


def classify(
    p: Problem,
    cp: CriticalPoint,
    tol: float = DEFAULT_TOL,
    basis: Sequence[np.ndarray] | None = None,
) -> ClassificationReport:
    """Classify ``cp`` by the projected Lagrangian Hessian.

    ``basis`` overrides the computed orthonormal tangent basis; it must be
    orthonormal and span the null space of the constraint Jacobian.
    """
    x = np.asarray(cp.x, dtype=float)
    lam = np.atleast_1d(np.asarray(cp.lam, dtype=float))
    if x.shape != (p.n,) or lam.shape != (p.m,):
        raise ValueError(f"point/multiplier dimensions {x.shape}/{lam.shape} do not match problem")
    J = constraint_jacobian(p, x)
    try:
        tangent = null_space_basis(J)
    except RankDeficiencyError:
        return ClassificationReport(cp, licq_ok=False, verdict=Verdict.LICQ_FAILURE)
    if basis is not None:
        tangent = [np.asarray(v, dtype=float) for v in basis]
        if len(tangent) != p.n - p.m:
            raise ValueError(f"basis needs {p.n - p.m} vectors, got {len(tangent)}")
    H = lagrangian_hessian(p, x, lam)
    A = projected_hessian(H, tangent)
    eigs = sym_eigenvalues(A)
    scale = curvature_scale(A)
    return ClassificationReport(
        cp,
        licq_ok=True,
        verdict=verdict_from_eigenvalues(eigs, scale, tol),
        tangent_basis=tuple(tangent),
        lagrangian_hessian=H,
        projected_hessian=A,
        eigenvalues=eigs,
        specialized_check=specialized_check(H, J, scale, tol),
    )
