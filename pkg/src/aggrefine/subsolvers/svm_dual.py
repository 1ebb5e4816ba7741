"""Weighted soft-margin SVM solved in the dual by pairwise coordinate ascent.

The dual is max  p.a - 1/2 a'Qa  with Q = (yy') * K, per-entity box
0 <= a_k <= weight_k * M, and (when the offset b is free) the equality
y.a = 0.  Pair updates keep the equality satisfied exactly; single-coordinate
updates are used when the offset is fixed (no equality constraint).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = ["DualSolution", "SvmSolution", "SvmSolverError", "solve_weighted_svm"]

_MAX_ITER = 500_000


class SvmSolverError(RuntimeError):
    def __init__(self, msg, kkt_violation=None):
        super().__init__(msg)
        self.kkt_violation = kkt_violation


@dataclass
class DualSolution:
    alpha: np.ndarray
    b: float
    objective: float  # dual objective value


@dataclass
class SvmSolution:
    """Primal/dual solution of one weighted SVM solve."""

    alpha: np.ndarray
    b: float
    w: np.ndarray | None  # explicit only with feature rows
    xi: np.ndarray
    objective: float  # primal value 1/2||w||^2 + M sum w_k xi_k
    dual_objective: float
    kkt_violation: float

    @property
    def dual(self) -> DualSolution:
        return DualSolution(self.alpha, self.b, self.dual_objective)


class _LinearOps:
    """Kernel operations backed by feature rows (linear kernel)."""

    def __init__(self, X):
        self.X = X
        if sp.issparse(X):
            self.diag = np.asarray(X.multiply(X).sum(axis=1)).ravel()
        else:
            self.X = np.ascontiguousarray(np.asarray(X, dtype=float))
            self.diag = np.einsum("ij,ij->i", self.X, self.X)

    def col(self, i):
        if sp.issparse(self.X):
            xi = np.asarray(self.X[i].todense()).ravel()
        else:
            xi = self.X[i]
        return np.asarray(self.X @ xi).ravel()

    def k_dot(self, v):
        return np.asarray(self.X @ (self.X.T @ v)).ravel()

    def weight_vector(self, coef):
        return np.asarray(self.X.T @ coef).ravel()

    def factor(self):
        """Dense B with K = B B^T (the feature rows themselves)."""
        return np.asarray(self.X.todense()) if sp.issparse(self.X) else self.X

    def submatrix(self, idx):
        Xi = self.factor()[idx]
        return Xi @ Xi.T


class _GramOps:
    """Kernel operations backed by a precomputed Gram matrix."""

    def __init__(self, K):
        self.K = np.asarray(K, dtype=float)
        if self.K.shape[0] != self.K.shape[1]:
            raise ValueError("Gram matrix must be square")
        self.diag = np.diag(self.K).copy()

    def col(self, i):
        return self.K[:, i]

    def k_dot(self, v):
        return self.K @ v

    def weight_vector(self, coef):
        return None

    def factor(self):
        """Low-rank B with K ~= B B^T from the eigendecomposition."""
        vals, vecs = np.linalg.eigh(0.5 * (self.K + self.K.T))
        keep = vals > max(1e-12 * max(vals.max(), 1.0), 0.0)
        return vecs[:, keep] * np.sqrt(vals[keep])

    def submatrix(self, idx):
        return self.K[np.ix_(idx, idx)]


def _pairwise_ascent(ops, y, upper, p, tol, max_iter):
    """Equality-constrained dual (free offset).  Returns (alpha, violation)."""
    k = y.size
    alpha = np.zeros(k)
    G = -p.copy()  # gradient of 1/2 a'Qa - p.a
    verified = False
    stall_check = 2500
    stall_ref = np.inf
    for it in range(max_iter):
        v = -(y * G)  # KKT functional; feasible b lies in [max_low, min_up]
        up_mask = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0))
        low_mask = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < upper))
        if not up_mask.any() or not low_mask.any():
            m_val, M_val = 0.0, 0.0
        else:
            v_up = np.where(up_mask, v, -np.inf)
            i = int(np.argmax(v_up))
            m_val = v_up[i]
            M_val = np.min(np.where(low_mask, v, np.inf))
        if m_val - M_val <= tol:
            if verified:
                return alpha, m_val - M_val
            # refresh the incrementally tracked gradient before accepting
            G = y * ops.k_dot(alpha * y) - p
            verified = True
            continue
        verified = False
        if it > 0 and it % stall_check == 0:
            # flat tail: hand over to the high-precision finisher
            if m_val - M_val > 0.8 * stall_ref:
                break
            stall_ref = m_val - M_val

        Ki = ops.col(i)
        # second-order choice of the partner: largest decrease b^2 / eta
        cand = low_mask & (v < m_val)
        diff = m_val - v
        eta = ops.diag[i] + ops.diag - 2.0 * Ki
        eta = np.where(eta > 1e-12, eta, 1e-12)
        gain = np.where(cand, diff * diff / eta, -np.inf)
        j = int(np.argmax(gain))

        # unconstrained step along (da_i, da_j) = (y_i, -y_j) * delta
        delta = (v[i] - v[j]) / eta[j]
        if y[i] > 0:
            lo_i, hi_i = -alpha[i], upper[i] - alpha[i]
        else:
            lo_i, hi_i = alpha[i] - upper[i], alpha[i]
        if y[j] > 0:
            lo_j, hi_j = alpha[j] - upper[j], alpha[j]
        else:
            lo_j, hi_j = -alpha[j], upper[j] - alpha[j]
        delta = min(max(delta, max(lo_i, lo_j)), min(hi_i, hi_j))
        if delta == 0.0:
            G = y * ops.k_dot(alpha * y) - p
            verified = True
            continue

        Kj = ops.col(j)
        alpha[i] = min(max(alpha[i] + y[i] * delta, 0.0), upper[i])
        alpha[j] = min(max(alpha[j] - y[j] * delta, 0.0), upper[j])
        G = G + (y * delta) * (Ki - Kj)

    G = y * ops.k_dot(alpha * y) - p
    v = -(y * G)
    up_mask = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0))
    low_mask = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < upper))
    m_val = np.max(v[up_mask]) if up_mask.any() else 0.0
    M_val = np.min(v[low_mask]) if low_mask.any() else 0.0
    return alpha, m_val - M_val


def _box_ascent(ops, y, upper, p, tol, max_iter):
    """Box-only dual (fixed offset).  Greedy single-coordinate updates."""
    k = y.size
    alpha = np.zeros(k)
    G = -p.copy()
    diag = ops.diag
    verified = False
    stall_check = 2500
    stall_ref = np.inf
    for it in range(max_iter):
        viol = np.where(
            alpha <= 0.0,
            np.maximum(0.0, -G),
            np.where(alpha >= upper, np.maximum(0.0, G), np.abs(G)),
        )
        i = int(np.argmax(viol))
        if viol[i] <= tol:
            if verified:
                return alpha, viol[i]
            G = y * ops.k_dot(alpha * y) - p
            verified = True
            continue
        verified = False
        if it > 0 and it % stall_check == 0:
            if viol[i] > 0.8 * stall_ref:
                break
            stall_ref = viol[i]
        if diag[i] > 1e-12:
            target = alpha[i] - G[i] / diag[i]
        else:
            target = upper[i] if G[i] < 0 else 0.0
        new = min(max(target, 0.0), upper[i])
        step = new - alpha[i]
        if step == 0.0:
            G = y * ops.k_dot(alpha * y) - p
            verified = True
            continue
        alpha[i] = new
        G = G + (y * y[i] * step) * ops.col(i)

    G = y * ops.k_dot(alpha * y) - p
    viol = np.where(
        alpha <= 0.0,
        np.maximum(0.0, -G),
        np.where(alpha >= upper, np.maximum(0.0, G), np.abs(G)),
    )
    return alpha, float(np.max(viol))


def _exact_violation(ops, y, upper, p, alpha, equality):
    G = y * ops.k_dot(alpha * y) - p
    if equality:
        v = -(y * G)
        up = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < upper))
        m_val = np.max(v[up]) if up.any() else 0.0
        M_val = np.min(v[low]) if low.any() else 0.0
        return float(m_val - M_val)
    viol = np.where(
        alpha <= 0.0,
        np.maximum(0.0, -G),
        np.where(alpha >= upper, np.maximum(0.0, G), np.abs(G)),
    )
    return float(np.max(viol))


def _interior_point(ops, y, upper, p, equality, gap_tol=1e-12, max_iter=120):
    """Mehrotra predictor-corrector on the box (+ optional equality) dual.

    Exploits K = B B^T so each Newton solve costs O(k m^2) via the Woodbury
    identity.  Returns (alpha, certified_gap) with alpha strictly feasible.
    """
    B = y[:, None] * ops.factor()  # Q = (yy') * K = B B'
    k, r = B.shape
    u = upper
    alpha = 0.5 * u  # strictly interior for any positive box
    scale = max(1.0, float(np.max(np.abs(p))))
    z = np.full(k, scale)
    s = np.full(k, scale)
    nu = 0.0

    def q_dot(v):
        return B @ (B.T @ v)

    gap_ref = None
    for _ in range(max_iter):
        Qa = q_dot(alpha)
        r_d = Qa - p - (nu * y if equality else 0.0) - z + s
        r_p = float(y @ alpha) if equality else 0.0
        mu = (alpha @ z + (u - alpha) @ s) / (2 * k)
        obj = float(0.5 * alpha @ Qa - p @ alpha)
        gap_ref = (alpha @ z + (u - alpha) @ s) / (1.0 + abs(obj))
        scale_d = 1.0 + float(np.max(np.abs(Qa))) + float(np.max(np.abs(p)))
        if (
            gap_ref <= gap_tol
            and abs(r_p) <= 1e-11 * (1 + np.abs(alpha).sum())
            and float(np.max(np.abs(r_d))) <= 1e-10 * scale_d
        ):
            break

        d_diag = z / alpha + s / (u - alpha)
        dinv = 1.0 / d_diag
        T = np.eye(r) + B.T @ (dinv[:, None] * B)
        T_chol = np.linalg.cholesky(T)

        def h_solve(v):
            w0 = dinv * v
            tmp = B.T @ w0
            tmp = np.linalg.solve(T_chol.T, np.linalg.solve(T_chol, tmp))
            return w0 - dinv * (B @ tmp)

        def direction(sigma_mu, cross_z, cross_s):
            rhs = -r_d - z + sigma_mu / alpha + s - sigma_mu / (u - alpha)
            rhs = rhs + cross_z / alpha - cross_s / (u - alpha)
            if equality:
                h_rhs = h_solve(rhs)
                h_y = h_solve(y)
                dnu = (-r_p - y @ h_rhs) / (y @ h_y)
                da = h_rhs + dnu * h_y
            else:
                dnu = 0.0
                da = h_solve(rhs)
            dz = -z + sigma_mu / alpha + cross_z / alpha - (z / alpha) * da
            ds = -s + sigma_mu / (u - alpha) + cross_s / (u - alpha) + (s / (u - alpha)) * da
            return da, dnu, dz, ds

        def max_step(da, dz, ds):
            ap = 1.0
            neg = da < 0
            if neg.any():
                ap = min(ap, float(np.min(-alpha[neg] / da[neg])))
            pos = da > 0
            if pos.any():
                ap = min(ap, float(np.min((u - alpha)[pos] / da[pos])))
            ad = 1.0
            for vec, dv in ((z, dz), (s, ds)):
                neg = dv < 0
                if neg.any():
                    ad = min(ad, float(np.min(-vec[neg] / dv[neg])))
            return ap, ad

        zero = np.zeros(k)
        da_a, _dnu_a, dz_a, ds_a = direction(0.0, zero, zero)
        ap, ad = max_step(da_a, dz_a, ds_a)
        mu_aff = (
            (alpha + ap * da_a) @ (z + ad * dz_a)
            + (u - alpha - ap * da_a) @ (s + ad * ds_a)
        ) / (2 * k)
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        da, dnu, dz, ds = direction(sigma * mu, -da_a * dz_a, da_a * ds_a)
        ap, ad = max_step(da, dz, ds)
        tau = 0.99995
        # keep strictly and representably interior (relative margin)
        alpha = np.clip(alpha + tau * ap * da, 1e-14 * u, u * (1.0 - 1e-14))
        nu = nu + tau * ad * dnu
        z = np.maximum(z + tau * ad * dz, 1e-300)
        s = np.maximum(s + tau * ad * ds, 1e-300)

    return alpha, float(gap_ref if gap_ref is not None else np.inf)


def _active_set_polish(ops, y, upper, p, alpha, equality, rel=1e-6):
    """Exact solve of the KKT system restricted to the (near-)free set.

    Entries within ``rel`` of a bound are pinned there; the reduced
    stationarity system is solved by least squares and the equality residual
    is repaired on the slackest free coordinate.  Returns the candidate
    point (the caller verifies and accepts only on improvement).
    """
    thresh = rel * np.maximum(upper, 1.0)
    at0 = alpha <= thresh
    atU = alpha >= upper - thresh
    free = ~(at0 | atU)
    a_new = np.where(atU, upper, 0.0)
    F = np.flatnonzero(free)
    f = F.size
    if f == 0:
        return a_new
    c_bnd = a_new * y
    A = (y[F][:, None] * ops.submatrix(F)) * y[F][None, :]
    rhs1 = p[F] - y[F] * ops.k_dot(c_bnd)[F]
    if equality:
        M_sys = np.zeros((f + 1, f + 1))
        M_sys[:f, :f] = A
        M_sys[:f, f] = -y[F]
        M_sys[f, :f] = y[F]
        rhs = np.concatenate([rhs1, [-float(y @ a_new)]])
        sol, *_ = np.linalg.lstsq(M_sys, rhs, rcond=None)
        a_new[F] = np.clip(sol[:f], 0.0, upper[F])
        resid = float(y @ a_new)
        slack = np.minimum(a_new, upper - a_new).copy()
        slack[~free] = -1.0
        j = int(np.argmax(slack))
        if slack[j] > abs(resid):
            a_new[j] -= resid * y[j]
    else:
        sol, *_ = np.linalg.lstsq(A, rhs1, rcond=None)
        a_new[F] = np.clip(sol, 0.0, upper[F])
    return a_new


def _cleanup(ops, y, upper, p, alpha, equality):
    """Snap near-bound entries onto the bounds and repair the equality."""
    a = alpha.copy()
    snap = 1e-8 * np.maximum(upper, 1.0)
    a[a <= snap] = 0.0
    hi = a >= upper - snap
    a[hi] = upper[hi]
    if equality:
        resid = float(y @ a)
        slack = np.minimum(a, upper - a)
        j = int(np.argmax(slack))
        if slack[j] > abs(resid):
            a[j] -= resid * y[j]
    return a


def _finish_high_precision(ops, y, upper, p, equality, alpha, violation, tol):
    """Interior-point pass plus active-set polish; keeps the best point."""
    best_a, best_v = alpha, violation
    try:
        a_ipm, _gap = _interior_point(ops, y, upper, p, equality)
    except np.linalg.LinAlgError:
        return best_a, best_v
    for cand in (_cleanup(ops, y, upper, p, a_ipm, equality),
                 _active_set_polish(ops, y, upper, p, a_ipm, equality)):
        v = _exact_violation(ops, y, upper, p, cand, equality)
        if v < best_v:
            best_a, best_v = cand, v
        if best_v <= tol:
            break
    return best_a, best_v


def _recover_offset(v, alpha, upper, y):
    """Offset from free support vectors, else midpoint of the KKT interval."""
    free = (alpha > 1e-10 * np.maximum(upper, 1.0)) & (
        alpha < upper - 1e-10 * np.maximum(upper, 1.0)
    )
    if free.any():
        return float(np.mean(v[free]))
    up_mask = ((y > 0) & (alpha < upper)) | ((y < 0) & (alpha > 0))
    low_mask = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < upper))
    hi = np.max(v[up_mask]) if up_mask.any() else None
    lo = np.min(v[low_mask]) if low_mask.any() else None
    if hi is None and lo is None:
        return 0.0
    if hi is None:
        return float(lo)
    if lo is None:
        return float(hi)
    return float((hi + lo) / 2.0)


def solve_weighted_svm(
    X=None,
    gram=None,
    *,
    y,
    weights,
    M,
    tol=1e-10,
    max_iter=_MAX_ITER,
    fixed_offset=None,
):
    """Solve the weighted soft-margin SVM.

    Exactly one of ``X`` (feature rows) or ``gram`` (precomputed kernel
    matrix) must be given.  ``weights`` scales each entity's slack penalty,
    so the dual box is [0, weights_k * M].

    ``fixed_offset=(c, g)`` pins the offset through the affine relation
    b = g - w.c (feature rows only): the offset variable is eliminated by
    shifting the rows by c, which drops the dual equality constraint.

    Raises SvmSolverError when neither the coordinate ascent nor the
    interior-point finisher certifies the KKT tolerance.
    """
    y = np.asarray(y, dtype=float)
    w_pen = np.asarray(weights, dtype=float)
    k = y.size
    if k < 1:
        raise ValueError("need at least one entity")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")
    if np.any(w_pen <= 0) or M <= 0:
        raise ValueError("weights and M must be positive")
    if (X is None) == (gram is None):
        raise ValueError("pass exactly one of X or gram")

    upper = w_pen * M
    if fixed_offset is not None:
        if X is None:
            raise ValueError("fixed offset needs feature rows")
        c, g = fixed_offset
        c = np.asarray(c, dtype=float)
        g = float(g)
        Xd = np.asarray(X.todense()) if sp.issparse(X) else np.asarray(X, dtype=float)
        ops = _LinearOps(Xd - c[None, :])
        p = 1.0 - y * g
        equality = False
        ascent_budget = min(max_iter, 20_000 + 30 * k)
        alpha, violation = _box_ascent(ops, y, upper, p, tol, ascent_budget)
    else:
        if not ((y > 0).any() and (y < 0).any()):
            raise ValueError("both labels must be present")
        ops = _LinearOps(X) if X is not None else _GramOps(gram)
        p = np.ones(k)
        equality = True
        ascent_budget = min(max_iter, 20_000 + 30 * k)
        alpha, violation = _pairwise_ascent(ops, y, upper, p, tol, ascent_budget)

    if violation > tol:
        # degenerate tail (near-duplicate entities): finish with an
        # interior-point pass and an exact active-set polish
        alpha, violation = _finish_high_precision(
            ops, y, upper, p, equality, alpha, violation, tol
        )
    if violation > max(tol * 10.0, 1e-6):
        raise SvmSolverError(
            f"dual ascent did not converge (KKT violation {violation:.3e})",
            kkt_violation=violation,
        )

    coef = alpha * y
    scores0 = ops.k_dot(coef)  # decision values minus the offset
    w = ops.weight_vector(coef)
    if fixed_offset is not None:
        b = g - float(np.dot(w, c))
        f = scores0 + g
    else:
        v = -(y * (y * scores0 - p))
        b = _recover_offset(v, alpha, upper, y)
        f = scores0 + b
    xi = np.maximum(0.0, 1.0 - y * f)

    norm_sq = float(np.dot(coef, scores0))
    primal = 0.5 * norm_sq + float(np.dot(upper, xi))
    dual = float(np.dot(p, alpha)) - 0.5 * norm_sq
    return SvmSolution(
        alpha=alpha,
        b=float(b),
        w=w,
        xi=xi,
        objective=primal,
        dual_objective=dual,
        kkt_violation=float(violation),
    )
