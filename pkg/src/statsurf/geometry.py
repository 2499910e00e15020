"""Induced geometry of the graph hypersurface x_{n+1} = F(x).

The metric is g = I + grad F grad F^T, the upward unit normal is
N = (-grad F, 1)/sqrt(det g), the second fundamental form is
Omega = hess F / sqrt(det g), and curvature quantities follow from those.
The Weingarten matrix is computed along two independent routes (literal
per-component sums and the closed matrix product) which must agree; the
same pattern guards the Gauss curvature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InternalCheckError
from .model import Evaluation, StatisticalModel, evaluate


def g_matrix(ev: Evaluation) -> np.ndarray:
    return np.eye(ev.model.n) + np.outer(ev.fbar_i, ev.fbar_i)


def det_g(ev: Evaluation) -> float:
    return 1.0 + float(ev.fbar_i @ ev.fbar_i)


def inverse_g(ev: Evaluation) -> np.ndarray:
    # rank-one downdate; exact inverse of I + u u^T
    u = ev.fbar_i
    return np.eye(ev.model.n) - np.outer(u, u) / det_g(ev)


def hessian_from_evaluation(ev: Evaluation) -> np.ndarray:
    return ev.fbar_ik - np.outer(ev.fbar_i, ev.fbar_i)


def hessian_F(model: StatisticalModel, x) -> np.ndarray:
    """Hessian of the aggregation F at x."""
    return hessian_from_evaluation(evaluate(model, x))


def omega_matrix(ev: Evaluation) -> np.ndarray:
    return hessian_from_evaluation(ev) / np.sqrt(det_g(ev))


def position(ev: Evaluation) -> np.ndarray:
    return np.append(ev.x, ev.F)


def normal(ev: Evaluation) -> np.ndarray:
    return np.append(-ev.fbar_i, 1.0) / np.sqrt(det_g(ev))


def weingarten_literal(ev: Evaluation) -> np.ndarray:
    """Per-component Weingarten sums over the family and coordinates."""
    n, m = ev.model.n, ev.model.m
    w, grad, hess = ev.w, ev.grad, ev.hess
    fb = ev.fbar_i
    dg = 1.0 + float(fb @ fb)
    root = np.sqrt(dg)
    fb_sq = float(fb @ fb)
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            first = 0.0
            for a in range(m):
                first += w[a] * (hess[a, i, j] + grad[a, i] * grad[a, j])
            first = (first - fb[i] * fb[j]) / root
            inner = 0.0
            for k in range(n):
                for a in range(m):
                    inner += w[a] * (
                        fb[k] * hess[a, j, k] + grad[a, j] * fb[k] * grad[a, k]
                    )
            inner -= fb[j] * fb_sq
            W[i, j] = first - fb[i] * inner / dg ** 1.5
    return W


def weingarten_matrix(ev: Evaluation) -> np.ndarray:
    """Closed matrix form (det g)^(-3/2) ((det g) I - grad F grad F^T) hess F."""
    n = ev.model.n
    dg = det_g(ev)
    P = hessian_from_evaluation(ev)
    M = dg * np.eye(n) - np.outer(ev.fbar_i, ev.fbar_i)
    return dg ** -1.5 * (M @ P)


def weingarten(ev: Evaluation) -> np.ndarray:
    W_lit = weingarten_literal(ev)
    W_mat = weingarten_matrix(ev)
    gap = float(np.max(np.abs(W_lit - W_mat)))
    if gap > 1e-10 * max(1.0, float(np.max(np.abs(W_mat)))):
        raise InternalCheckError(f"Weingarten paths disagree by {gap}")
    return W_mat


def principal_curvatures(ev: Evaluation) -> np.ndarray:
    """Eigenvalues of the shape operator, ascending (real by g-symmetry)."""
    vals = scipy.linalg.eigh(omega_matrix(ev), g_matrix(ev), eigvals_only=True)
    return np.asarray(vals)


def gauss_curvature(ev: Evaluation) -> float:
    n = ev.model.n
    P = hessian_from_evaluation(ev)
    return float(np.linalg.det(P) / det_g(ev) ** ((n + 2) / 2.0))


def riemann_tensor(ev: Evaluation) -> np.ndarray:
    """R[i,k,l,j] = Om[i,l] Om[k,j] - Om[k,l] Om[i,j]."""
    Om = omega_matrix(ev)
    return np.einsum("il,kj->iklj", Om, Om) - np.einsum("kl,ij->iklj", Om, Om)


def scalar_curvature(ev: Evaluation) -> float:
    """Double contraction of the curvature tensor with the inverse metric."""
    gi = inverse_g(ev)
    R = riemann_tensor(ev)
    return float(np.einsum("il,kj,iklj->", gi, gi, R))


def scalar_curvature_closed(fbar_i: np.ndarray, Om: np.ndarray, dg: float) -> float:
    """Closed form used by the variation machinery."""
    tr_om = float(np.trace(Om))
    tr_om2 = float(np.trace(Om @ Om))
    a1 = float(fbar_i @ (Om @ Om) @ fbar_i)
    a2 = float(fbar_i @ Om @ fbar_i)
    return tr_om**2 - tr_om2 + 2.0 * (a1 - tr_om * a2) / dg


def entropy_correction(ev: Evaluation) -> float:
    """sum_a w_a (x . grad f_a - f_a); zero when every f_a is linear."""
    return float(np.sum(ev.w * (ev.grad @ ev.x - ev.f)))


@dataclass(frozen=True, eq=False)
class EntropyReport:
    S: float  # -sum w ln w
    S_geom: float  # flux + correction
    flux: float  # sqrt(det g) X . N
    correction: float


def entropy_from_evaluation(ev: Evaluation) -> EntropyReport:
    flux = float(np.sqrt(det_g(ev)) * position(ev) @ normal(ev))
    corr = entropy_correction(ev)
    return EntropyReport(S=ev.S, S_geom=flux + corr, flux=flux, correction=corr)


def entropy_at(model: StatisticalModel, x) -> EntropyReport:
    """Entropy and its geometric decomposition at a point."""
    return entropy_from_evaluation(evaluate(model, x))


@dataclass(frozen=True, eq=False)
class GeometryReport:
    x: np.ndarray
    F: float
    w: np.ndarray
    S: float
    fbar: float
    grad_F: np.ndarray  # (n,)
    g: np.ndarray  # (n, n)
    det_g: float
    inv_g: np.ndarray
    position: np.ndarray  # (n+1,) graph point
    normal: np.ndarray  # (n+1,) upward unit normal
    hess_F: np.ndarray  # (n, n)
    second_fundamental: np.ndarray  # (n, n)
    weingarten: np.ndarray  # (n, n)
    principal_curvatures: np.ndarray  # (n,) ascending
    gauss_curvature: float
    riemann: np.ndarray  # (n, n, n, n)
    scalar_curvature: float
    flux: float
    entropy_correction: float
    S_geom: float

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "F": self.F,
            "w": self.w.tolist(),
            "S": self.S,
            "fbar": self.fbar,
            "grad_F": self.grad_F.tolist(),
            "g": self.g.tolist(),
            "det_g": self.det_g,
            "inv_g": self.inv_g.tolist(),
            "position": self.position.tolist(),
            "normal": self.normal.tolist(),
            "hess_F": self.hess_F.tolist(),
            "second_fundamental": self.second_fundamental.tolist(),
            "weingarten": self.weingarten.tolist(),
            "principal_curvatures": self.principal_curvatures.tolist(),
            "gauss_curvature": self.gauss_curvature,
            "riemann": self.riemann.tolist(),
            "scalar_curvature": self.scalar_curvature,
            "flux": self.flux,
            "entropy_correction": self.entropy_correction,
            "S_geom": self.S_geom,
        }


def geometry_from_evaluation(ev: Evaluation) -> GeometryReport:
    entropy = entropy_from_evaluation(ev)
    return GeometryReport(
        x=ev.x,
        F=ev.F,
        w=ev.w,
        S=ev.S,
        fbar=ev.fbar,
        grad_F=ev.fbar_i,
        g=g_matrix(ev),
        det_g=det_g(ev),
        inv_g=inverse_g(ev),
        position=position(ev),
        normal=normal(ev),
        hess_F=hessian_from_evaluation(ev),
        second_fundamental=omega_matrix(ev),
        weingarten=weingarten(ev),
        principal_curvatures=principal_curvatures(ev),
        gauss_curvature=gauss_curvature(ev),
        riemann=riemann_tensor(ev),
        scalar_curvature=scalar_curvature(ev),
        flux=entropy.flux,
        entropy_correction=entropy.correction,
        S_geom=entropy.S_geom,
    )


def geometry_at(model: StatisticalModel, x) -> GeometryReport:
    """Full geometric snapshot of the hypersurface at x."""
    return geometry_from_evaluation(evaluate(model, x))
