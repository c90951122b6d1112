"""Generic concave-maximization engine for the iterative solvers.

Maximizes  c.z + sum_j w_j * ln(a_j.z + b_j)  subject to hard box bounds,
affine inequalities/equalities, concave log-affine inequalities
(sum w ln(.) + affine >= 0) and second-order cone constraints
(||A z + b|| <= c.z + d).

Algorithm: primal log-barrier path following with damped Newton steps and
backtracking line search. The Newton systems are solved as a sparse
factorization plus a low-rank (Woodbury) correction so that the per-slot
coupling structure of the trajectory and jamming programs stays cheap.
A feasibility phase (auxiliary slack minimization) runs automatically when
the supplied start point is not strictly interior.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

_WIDE_CUTOFF = 24  # rows with more nonzeros than this go to the low-rank part


def _row(idx, val, const=0.0):
    idx = np.asarray(idx, dtype=np.int64).ravel()
    val = np.asarray(val, dtype=float).ravel()
    if idx.size != val.size:
        raise ValueError("row index/value length mismatch")
    return idx, val, float(const)


@dataclass
class Solution:
    z: np.ndarray
    value: float
    status: str  # optimal | max-iter | infeasible | numerical-failure
    kkt_stationarity: float = np.inf
    kkt_feasibility: float = np.inf
    kkt_complementarity: float = np.inf
    newton_steps: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class ConvexProgram:
    """Problem container; build with add_* methods, then call solve()."""

    def __init__(self):
        self.n = 0
        self._names: dict[str, slice] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._c: list[tuple] = []
        self._obj_logs: list[tuple] = []  # (weight, row)
        self._lin: list[tuple] = []  # margin rows a.z + b >= 0
        self._clog: list[tuple] = []  # (logs [(w, row)], lin_row)
        self._soc: list[tuple] = []  # ([rows], cone_row)
        self._eq: list[tuple] = []  # rows a.z + b == 0

    def add_var(self, name: str, size: int, lb=-np.inf, ub=np.inf) -> np.ndarray:
        """Add a named variable block; bounds are enforced as hard constraints."""
        if name in self._names:
            raise ValueError(f"duplicate variable block {name!r}")
        sl = slice(self.n, self.n + size)
        self._names[name] = sl
        self.n += size
        self._lb.extend(np.broadcast_to(lb, (size,)).astype(float))
        self._ub.extend(np.broadcast_to(ub, (size,)).astype(float))
        return np.arange(sl.start, sl.stop)

    def block(self, name: str) -> slice:
        return self._names[name]

    def add_linear_objective(self, idx, val):
        self._c.append(_row(idx, val))

    def add_log_objective(self, weight: float, idx, val, const):
        if weight < 0:
            raise ValueError("log objective weights must be nonnegative")
        if weight > 0:
            self._obj_logs.append((float(weight), _row(idx, val, const)))

    def add_linear_ineq(self, idx, val, const):
        """a.z + b >= 0."""
        self._lin.append(_row(idx, val, const))

    def add_upper_bound_row(self, idx, val, rhs):
        """a.z <= rhs."""
        idx, val, _ = _row(idx, val)
        self._lin.append((idx, -val, float(rhs)))

    def add_log_ineq(self, logs, lin_idx, lin_val, lin_const):
        """sum_j w_j ln(a_j.z + b_j) + c.z + d >= 0 with w_j >= 0."""
        rows = []
        for w, idx, val, const in logs:
            if w < 0:
                raise ValueError("log constraint weights must be nonnegative")
            if w > 0:
                rows.append((float(w), _row(idx, val, const)))
        self._clog.append((rows, _row(lin_idx, lin_val, lin_const)))

    def add_soc(self, rows, cone_idx, cone_val, cone_const):
        """||rows|| <= cone.z + const, each row given as (idx, val, const)."""
        self._soc.append(([_row(*r) for r in rows], _row(cone_idx, cone_val, cone_const)))

    def add_sqnorm_leq(self, rows, bound_idx, bound_val, bound_const):
        """||rows||^2 <= bound.z + const, via the standard cone embedding."""
        # ||[2 rows; 1 - a]|| <= 1 + a  with a the affine bound
        bidx, bval, bconst = _row(bound_idx, bound_val, bound_const)
        soc_rows = [(idx, 2.0 * val, 2.0 * const) for idx, val, const in (_row(*r) for r in rows)]
        soc_rows.append((bidx, -bval, 1.0 - bconst))
        self.add_soc(soc_rows, bidx, bval, 1.0 + bconst)

    def add_hyperbolic(self, x_idx, a_idx, a_val, a_const):
        """x * (a.z + b) >= 1 with x > 0: used for reciprocal-slack coupling."""
        aidx, aval, aconst = _row(a_idx, a_val, a_const)
        rows = [(np.array([], dtype=np.int64), np.array([]), 2.0),
                (np.concatenate(([x_idx], aidx)), np.concatenate(([1.0], -aval)), -aconst)]
        cone_idx = np.concatenate(([x_idx], aidx))
        cone_val = np.concatenate(([1.0], aval))
        self.add_soc(rows, cone_idx, cone_val, aconst)

    def add_linear_eq(self, idx, val, const):
        """a.z + b == 0."""
        self._eq.append(_row(idx, val, const))

    # ------------------------------------------------------------------
    def solve(self, warm=None, tol: float = 1e-8, max_iter: int = 2000) -> Solution:
        return _solve(self, warm, tol, max_iter)


class _Assembled:
    """Static sparse structures reused across Newton iterations."""

    def __init__(self, p: ConvexProgram):
        n = p.n
        self.n = n
        self.lb = np.asarray(p._lb)
        self.ub = np.asarray(p._ub)
        self.has_lb = np.isfinite(self.lb)
        self.has_ub = np.isfinite(self.ub)

        c = np.zeros(n)
        for idx, val, _ in p._c:
            np.add.at(c, idx, val)
        self.c = c

        self.olog = _RowSet([r for _, r in p._obj_logs], n)
        self.olog_w = np.array([w for w, _ in p._obj_logs])
        self.lin = _RowSet(p._lin, n)
        self.clog = []
        for rows, lin_row in p._clog:
            self.clog.append((_RowSet([r for _, r in rows], n),
                              np.array([w for w, _ in rows]),
                              _Dense(lin_row, n)))
        self.soc = [_Soc(rows, cone, n) for rows, cone in p._soc]
        if p._eq:
            eq_mat = np.zeros((len(p._eq), n))
            eq_b = np.zeros(len(p._eq))
            for r, (idx, val, const) in enumerate(p._eq):
                eq_mat[r, idx] = val
                eq_b[r] = const
            self.eq_mat, self.eq_b = eq_mat, eq_b
        else:
            self.eq_mat = None
            self.eq_b = None

    # objective value/gradient (the concave f being maximized)
    def f_value(self, z):
        val = float(self.c @ z)
        if self.olog_w.size:
            g = self.olog.values(z)
            if np.any(g <= 0):
                return -np.inf
            val += float(self.olog_w @ np.log(g))
        return val

    def f_grad(self, z):
        g = self.c.copy()
        if self.olog_w.size:
            vals = self.olog.values(z)
            g += self.olog.mat.T @ (self.olog_w / vals)
        return g

    def margins(self, z):
        """All soft-constraint margins (must stay > 0 inside the barrier)."""
        out = []
        if self.lin.m:
            out.append(self.lin.values(z))
        for rs, w, lin in self.clog:
            g = rs.values(z)
            if np.any(g <= 0):
                out.append(np.array([-1.0]))
            else:
                out.append(np.array([float(w @ np.log(g)) + lin.value(z)]))
        for s in self.soc:
            out.append(np.array(s.margin(z)))
        return np.concatenate(out) if out else np.zeros(0)


class _RowSet:
    """A stack of sparse affine rows split into narrow and wide parts."""

    def __init__(self, rows, n):
        self.m = len(rows)
        self.n = n
        data, ri, ci = [], [], []
        self.b = np.zeros(self.m)
        widths = np.zeros(self.m, dtype=np.int64)
        for r, (idx, val, const) in enumerate(rows):
            data.append(val)
            ci.append(idx)
            ri.append(np.full(idx.size, r, dtype=np.int64))
            self.b[r] = const
            widths[r] = idx.size
        if self.m:
            self.mat = sp.csr_matrix(
                (np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                shape=(self.m, n))
        else:
            self.mat = sp.csr_matrix((0, n))
        self.narrow = np.flatnonzero(widths <= _WIDE_CUTOFF)
        self.wide = np.flatnonzero(widths > _WIDE_CUTOFF)
        # static outer-product pattern for the narrow rows
        ii, jj, vv, seg = [], [], [], []
        for r in self.narrow:
            idx, val, _ = rows[r]
            ii.append(np.repeat(idx, idx.size))
            jj.append(np.tile(idx, idx.size))
            vv.append(np.outer(val, val).ravel())
            seg.append(idx.size * idx.size)
        self.op_i = np.concatenate(ii) if ii else np.zeros(0, dtype=np.int64)
        self.op_j = np.concatenate(jj) if jj else np.zeros(0, dtype=np.int64)
        self.op_v = np.concatenate(vv) if vv else np.zeros(0)
        self.op_seg = np.asarray(seg, dtype=np.int64)
        self.wide_rows = [rows[r] for r in self.wide]

    def values(self, z):
        return self.mat @ z + self.b if self.m else np.zeros(0)


class _Dense:
    def __init__(self, row, n):
        idx, val, const = row
        self.vec = np.zeros(n)
        np.add.at(self.vec, idx, val)
        self.const = const

    def value(self, z):
        return float(self.vec @ z + self.const)


class _Soc:
    def __init__(self, rows, cone, n):
        self.rows = rows
        self.cone = cone
        seen = [cone[0]] + [r[0] for r in rows]
        self.vars = np.unique(np.concatenate(seen)) if seen else np.zeros(0, dtype=np.int64)
        self.n = n

    def parts(self, z):
        u = float(self.cone[1] @ z[self.cone[0]] + self.cone[2])
        r = np.array([v @ z[i] + c for i, v, c in self.rows])
        return u, r

    def margin(self, z):
        u, r = self.parts(z)
        if u <= 0:
            return -1.0
        return u * u - float(r @ r)  # barrier uses the squared-cone gap

    def grad_hess_local(self, z):
        """Exact barrier gradient (global) and Hessian block on self.vars."""
        u, r = self.parts(z)
        d = u * u - float(r @ r)
        pos = {v: k for k, v in enumerate(self.vars)}
        k = self.vars.size
        cvec = np.zeros(k)
        cvec[[pos[v] for v in self.cone[0]]] = self.cone[1]
        amat = np.zeros((len(self.rows), k))
        for j, (idx, val, _) in enumerate(self.rows):
            amat[j, [pos[v] for v in idx]] = val
        grad_d = 2.0 * u * cvec - 2.0 * amat.T @ r
        hess_d = 2.0 * np.outer(cvec, cvec) - 2.0 * amat.T @ amat
        grad = -grad_d / d
        hess = np.outer(grad_d, grad_d) / (d * d) - hess_d / d
        return grad, hess


def _solve(p: ConvexProgram, warm, tol, max_iter) -> Solution:
    a = _Assembled(p)
    n = a.n
    z = np.zeros(n) if warm is None else np.asarray(warm, dtype=float).copy()
    if z.shape != (n,):
        raise ValueError("warm start has the wrong length")

    # clip into the hard box with a strict margin
    span = np.where(a.has_lb & a.has_ub, a.ub - a.lb, 1.0)
    pad = 1e-9 * np.maximum(1.0, np.abs(span))
    z = np.where(a.has_lb, np.maximum(z, a.lb + pad), z)
    z = np.where(a.has_ub, np.minimum(z, a.ub - pad), z)

    if a.eq_mat is not None:
        # project onto the affine subspace
        res = a.eq_mat @ z + a.eq_b
        if np.linalg.norm(res) > 0:
            z = z - a.eq_mat.T @ np.linalg.lstsq(a.eq_mat @ a.eq_mat.T, res, rcond=None)[0]

    steps_used = 0
    if a.margins(z).size and a.margins(z).min() <= 0:
        z, ok, steps_used = _phase1(a, z, tol, max_iter)
        if not ok:
            return Solution(z=z, value=a.f_value(z), status="infeasible",
                            kkt_feasibility=float(max(0.0, -a.margins(z).min(initial=0.0))),
                            newton_steps=steps_used)

    z, status, steps = _barrier(a, z, tol, max_iter - steps_used)
    steps_used += steps

    mu = tol / 10.0
    marg = a.margins(z)
    feas = float(max(0.0, -(marg.min() if marg.size else 0.0)))
    if a.eq_mat is not None:
        feas = max(feas, float(np.abs(a.eq_mat @ z + a.eq_b).max(initial=0.0)))
    grad_m = _grad_merit(a, z, 1.0 / mu)
    stat = float(np.abs(grad_m).max(initial=0.0) * mu)
    return Solution(z=z, value=a.f_value(z), status=status,
                    kkt_stationarity=stat, kkt_feasibility=feas,
                    kkt_complementarity=mu, newton_steps=steps_used)


def _barrier(a: _Assembled, z, tol, max_steps, phase1_ctx=None):
    """Follow the central path; returns (z, status, steps)."""
    mu = 1.0
    mu_min = tol / 10.0
    steps = 0
    status = "optimal"
    while True:
        t = 1.0 / mu
        for _ in range(80):
            if steps >= max_steps:
                return z, "max-iter", steps
            dz, decr, ok = _newton_step(a, z, t)
            steps += 1
            if not ok:
                return z, "numerical-failure", steps
            if decr < 1e-11 * (1.0 + abs(_merit(a, z, t))):
                break
            z_new, moved = _line_search(a, z, dz, t)
            if not moved:
                break
            z = z_new
            if phase1_ctx is not None and phase1_ctx(z):
                return z, "optimal", steps
        if mu < mu_min:
            return z, status, steps
        mu /= 10.0


def _merit(a: _Assembled, z, t):
    f = a.f_value(z)
    if not np.isfinite(f):
        return np.inf
    total = -t * f
    lb_gap = z - a.lb
    ub_gap = a.ub - z
    if np.any(lb_gap[a.has_lb] <= 0) or np.any(ub_gap[a.has_ub] <= 0):
        return np.inf
    total -= np.log(lb_gap[a.has_lb]).sum() + np.log(ub_gap[a.has_ub]).sum()
    marg = a.margins(z)
    if marg.size:
        if marg.min() <= 0:
            return np.inf
        total -= np.log(marg).sum()
    return total


def _grad_merit(a: _Assembled, z, t):
    g = -t * a.f_grad(z)
    gl = np.zeros_like(z)
    gl[a.has_lb] -= 1.0 / (z - a.lb)[a.has_lb]
    gl[a.has_ub] += 1.0 / (a.ub - z)[a.has_ub]
    g += gl
    if a.lin.m:
        s = a.lin.values(z)
        g -= a.lin.mat.T @ (1.0 / s)
    for rs, w, lin in a.clog:
        gvals = rs.values(z)
        fval = float(w @ np.log(gvals)) + lin.value(z)
        grad_f = rs.mat.T @ (w / gvals) + lin.vec
        g -= grad_f / fval
    for s in a.soc:
        gs, _ = s.grad_hess_local(z)
        g[s.vars] += gs
    return g


def _newton_step(a: _Assembled, z, t):
    """Assemble the merit Hessian (sparse + low rank) and solve for the step."""
    n = a.n
    diag = np.zeros(n)
    diag[a.has_lb] += 1.0 / (z - a.lb)[a.has_lb] ** 2
    diag[a.has_ub] += 1.0 / (a.ub - z)[a.has_ub] ** 2

    coo_i, coo_j, coo_v = [], [], []
    u_cols, u_wts = [], []

    def add_rowset(rs: _RowSet, weights):
        if rs.op_seg.size:
            w_narrow = weights[rs.narrow]
            coo_i.append(rs.op_i)
            coo_j.append(rs.op_j)
            coo_v.append(rs.op_v * np.repeat(w_narrow, rs.op_seg))
        for r, (idx, val, _) in zip(rs.wide, rs.wide_rows):
            col = np.zeros(n)
            col[idx] = val
            u_cols.append(col)
            u_wts.append(weights[r])

    if a.olog_w.size:
        gvals = a.olog.values(z)
        add_rowset(a.olog, t * a.olog_w / gvals**2)
    if a.lin.m:
        s = a.lin.values(z)
        add_rowset(a.lin, 1.0 / s**2)
    for rs, w, lin in a.clog:
        gvals = rs.values(z)
        fval = float(w @ np.log(gvals)) + lin.value(z)
        add_rowset(rs, w / (gvals**2 * fval))
        u_cols.append(rs.mat.T @ (w / gvals) + lin.vec)
        u_wts.append(1.0 / fval**2)
    soc_blocks = []
    for s in a.soc:
        _, hb = s.grad_hess_local(z)
        soc_blocks.append((s.vars, hb))
        kk = s.vars.size
        coo_i.append(np.repeat(s.vars, kk))
        coo_j.append(np.tile(s.vars, kk))
        coo_v.append(hb.ravel())

    ridge = 1e-12 * (1.0 + diag.max(initial=0.0))
    diag = diag + ridge
    rows = np.concatenate(coo_i) if coo_i else np.zeros(0, dtype=np.int64)
    cols = np.concatenate(coo_j) if coo_j else np.zeros(0, dtype=np.int64)
    vals = np.concatenate(coo_v) if coo_v else np.zeros(0)
    k_mat = sp.csc_matrix((np.concatenate([vals, diag]),
                           (np.concatenate([rows, np.arange(n)]),
                            np.concatenate([cols, np.arange(n)]))), shape=(n, n))

    grad = _grad_merit(a, z, t)
    try:
        lu = spla.splu(k_mat)
    except RuntimeError:
        return np.zeros(n), 0.0, False

    u_mat = np.array(u_cols).T if u_cols else None  # (n, k)
    w_vec = np.array(u_wts) if u_wts else None

    def hsolve(b):
        x = lu.solve(b)
        if u_mat is None:
            return x
        y = lu.solve(u_mat) if b.ndim == 1 else None
        s_small = np.diag(1.0 / w_vec) + u_mat.T @ lu.solve(u_mat)
        return x - lu.solve(u_mat @ np.linalg.solve(s_small, u_mat.T @ x))

    if a.eq_mat is None:
        dz = hsolve(-grad)
    else:
        e = a.eq_mat
        hi_g = hsolve(-grad)
        hi_et = np.column_stack([hsolve(e[r]) for r in range(e.shape[0])])
        nu = np.linalg.solve(e @ hi_et, e @ hi_g)
        dz = hi_g - hi_et @ nu

    decr = float(-grad @ dz)
    if not np.isfinite(decr) or decr < 0:
        # fall back to a steepest-descent direction if the system went bad
        dz = -grad
        decr = float(grad @ grad)
        if not np.isfinite(decr):
            return np.zeros(n), 0.0, False
    return dz, decr, True


def _line_search(a: _Assembled, z, dz, t):
    m0 = _merit(a, z, t)
    g0 = _grad_merit(a, z, t)
    slope = float(g0 @ dz)
    step = 1.0
    for _ in range(60):
        cand = z + step * dz
        mc = _merit(a, cand, t)
        if np.isfinite(mc) and mc <= m0 + 0.01 * step * slope:
            return cand, True
        step *= 0.5
    return z, False


def _phase1(a: _Assembled, z0, tol, max_steps):
    """Minimize an infeasibility slack, keeping box bounds hard."""
    marg0 = a.margins(z0)
    s0 = float(max(0.0, -marg0.min(initial=0.0))) + 1.0

    p1 = ConvexProgram()
    p1.n = a.n + 1
    p1._lb = list(a.lb) + [-np.inf]
    p1._ub = list(a.ub) + [np.inf]
    s_idx = a.n
    p1._c = [(np.array([s_idx]), np.array([-1.0]), 0.0)]

    # re-emit every soft constraint with + s
    lin_rows = []
    for r in range(a.lin.m):
        row = a.lin.mat.getrow(r)
        lin_rows.append((np.append(row.indices, s_idx), np.append(row.data, 1.0), a.lin.b[r]))
    p1._lin = lin_rows
    clog = []
    for rs, w, lin in a.clog:
        rows = [(w[r], (rs.mat.getrow(r).indices.astype(np.int64), rs.mat.getrow(r).data, rs.b[r]))
                for r in range(rs.m)]
        lin_idx = np.append(np.flatnonzero(lin.vec), s_idx)
        lin_val = np.append(lin.vec[np.flatnonzero(lin.vec)], 1.0)
        clog.append(([(wr, rr) for wr, rr in rows], (lin_idx, lin_val, lin.const)))
    p1._clog = clog
    socs = []
    for s in a.soc:
        cone_idx = np.append(s.cone[0], s_idx)
        cone_val = np.append(s.cone[1], 1.0)
        socs.append((list(s.rows), (cone_idx, cone_val, s.cone[2])))
    p1._soc = socs
    p1._eq = []
    p1._obj_logs = []
    p1._names = {}

    a1 = _Assembled(p1)
    if a.eq_mat is not None:
        a1.eq_mat = np.hstack([a.eq_mat, np.zeros((a.eq_mat.shape[0], 1))])
        a1.eq_b = a.eq_b

    z1 = np.append(z0, s0)
    target = -1e-9

    def done(zz):
        return zz[s_idx] < target

    z1, status, steps = _barrier(a1, z1, max(tol, 1e-7), max_steps, phase1_ctx=done)
    feasible = z1[s_idx] < 0 and a.margins(z1[:a.n]).min(initial=1.0) > 0
    return z1[:a.n], feasible, steps
