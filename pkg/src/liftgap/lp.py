"""Exact rational linear programming.

Two-phase revised simplex with Bland's pivot rule over exact rationals,
so every solve terminates and returns bit-reproducible answers.  LPs with
many more constraints than variables are solved through their explicit
dual, and the primal optimum is recovered exactly from the dual
multipliers; both paths return identical contracts and every returned
solution is re-verified against the input before it leaves this module.

Internally the hot loops run on gmpy2.mpq when available (a pure speed
matter; results are exact either way) and all public values are
fractions.Fraction.

Conventions
-----------
* A constraint is (coeffs, relation, rhs) with relation one of
  "<=", "=", ">=".  Constraint indices are stable identifiers.
* Optimal solutions carry dual multipliers, one per constraint:
  for sense "maximize", multiplier >= 0 on "<=" rows, <= 0 on ">=" rows,
  free on "=" rows, with  sum_i mult_i * coeffs_i == objective  and
  sum_i mult_i * rhs_i == value.  For "minimize" all multiplier signs
  flip.
* Infeasible solutions carry a Farkas certificate with the same sign
  convention as the "maximize" duals and
  sum_i mult_i * coeffs_i == 0,  sum_i mult_i * rhs_i == -1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .caps import caps
from .errors import InputError, InternalError, SizeCapError

log = logging.getLogger(__name__)

try:
    from gmpy2 import mpq as _inner_q
except ImportError:  # pragma: no cover - gmpy2 is a declared dependency
    _inner_q = Fraction

LESS_EQ = "<="
EQUAL = "="
GREATER_EQ = ">="
_RELATIONS = (LESS_EQ, EQUAL, GREATER_EQ)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearConstraint:
    coeffs: tuple[Fraction, ...]
    relation: str
    rhs: Fraction


@dataclass(frozen=True)
class LinearProgram:
    num_vars: int
    constraints: tuple[LinearConstraint, ...]
    objective: tuple[Fraction, ...]
    sense: str = "maximize"


@dataclass(frozen=True)
class LPSolution:
    status: str
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None
    dual_certificate: tuple[Fraction, ...] | None = None


def linear_program(num_vars: int,
                   constraints: Iterable[tuple[Sequence, str, object]],
                   objective: Sequence,
                   sense: str = "maximize") -> LinearProgram:
    """Validating constructor; coefficients are coerced to Fraction."""
    if num_vars < 0:
        raise InputError("num_vars must be nonnegative")
    if sense not in ("maximize", "minimize"):
        raise InputError(f"bad sense {sense!r}")
    obj = tuple(Fraction(v) for v in objective)
    if len(obj) != num_vars:
        raise InputError(f"objective length {len(obj)} != num_vars {num_vars}")
    rows = []
    for idx, (coeffs, relation, rhs) in enumerate(constraints):
        if relation not in _RELATIONS:
            raise InputError(f"constraint {idx}: bad relation {relation!r}")
        row = tuple(Fraction(v) for v in coeffs)
        if len(row) != num_vars:
            raise InputError(
                f"constraint {idx}: {len(row)} coefficients, expected {num_vars}")
        rows.append(LinearConstraint(row, relation, Fraction(rhs)))
    return LinearProgram(num_vars, tuple(rows), obj, sense)


def lp_nonzeros(lp: LinearProgram) -> int:
    return sum(1 for c in lp.constraints for v in c.coeffs if v)


# ---------------------------------------------------------------------------
# Revised simplex core: min costs.x  s.t.  columns.x = b, x >= 0.
# Columns are sparse [(row, value), ...]; all values in the inner type.
# ---------------------------------------------------------------------------


class _CoreResult:
    __slots__ = ("status", "x", "value", "duals", "certificate", "ray")

    def __init__(self, status, x=None, value=None, duals=None,
                 certificate=None, ray=None):
        self.status = status
        self.x = x                    # structural values, len ncols
        self.value = value
        self.duals = duals            # per original row
        self.certificate = certificate  # per original row; cert.A <= 0, cert.b > 0
        self.ray = ray                # structural ray on unbounded


def _solve_standard(columns, b, costs):
    """Two-phase revised simplex with Bland's rule.  Exact; terminating;
    deterministic.  Inputs are in the inner rational type and are not
    modified."""
    zero = _inner_q(0)
    one = _inner_q(1)
    m = len(b)
    ncols = len(columns)

    # normalize right-hand sides to be nonnegative; remember flips
    sign = [1] * m
    b_work = list(b)
    for r in range(m):
        if b_work[r] < 0:
            sign[r] = -1
            b_work[r] = -b_work[r]
    cols = []
    for col in columns:
        cols.append([(r, v if sign[r] > 0 else -v) for r, v in col if v])

    row_of = list(range(m))        # reduced row -> original row
    binv = [[one if i == j else zero for j in range(m)] for i in range(m)]
    basis = [ncols + r for r in range(m)]   # artificial ids
    x_b = list(b_work)
    in_basis = [False] * ncols

    def price_and_enter(cost_vec, y):
        """First (Bland) structural column with negative reduced cost."""
        for j in range(ncols):
            if in_basis[j]:
                continue
            rc = cost_vec[j]
            for r, v in cols[j]:
                rc -= y[r] * v
            if rc < 0:
                return j, rc
        return None, None

    def compute_y(cost_of_basic):
        y = [zero] * m
        for p in range(m):
            cb = cost_of_basic(p)
            if cb:
                row = binv[p]
                y = [a + cb * v for a, v in zip(y, row)]
        return y

    def ftran(j):
        d = [zero] * m
        for r, v in cols[j]:
            for p in range(m):
                br = binv[p][r]
                if br:
                    d[p] += br * v
        return d

    def pivot(leave, enter, d):
        piv = d[leave]
        inv = one / piv
        prow = binv[leave]
        if piv != one:
            prow = [v * inv for v in prow]
            binv[leave] = prow
        theta = x_b[leave] * inv
        x_b[leave] = theta
        for p in range(m):
            if p == leave:
                continue
            f = d[p]
            if f:
                rowp = binv[p]
                binv[p] = [a - f * v for a, v in zip(rowp, prow)]
                x_b[p] -= f * theta
        left = basis[leave]
        if left < ncols:
            in_basis[left] = False
        basis[leave] = enter
        in_basis[enter] = True

    def run_phase(cost_vec, cost_of_basic):
        iters = 0
        while True:
            y = compute_y(cost_of_basic)
            j, _ = price_and_enter(cost_vec, y)
            if j is None:
                return None
            d = ftran(j)
            leave = None
            best = None
            for p in range(m):
                if d[p] > 0:
                    ratio = x_b[p] / d[p]
                    key = (ratio, basis[p])
                    if best is None or key < best:
                        best = key
                        leave = p
            if leave is None:
                return j, d  # unbounded along column j
            pivot(leave, j, d)
            iters += 1
            if log.isEnabledFor(logging.DEBUG):
                log.debug("pivot %d: enter %d leave slot %d", iters, j, leave)

    # ---- phase 1 ----
    art_cost = lambda p: one if basis[p] >= ncols else zero
    phase1_cost = [zero] * ncols
    unb = run_phase(phase1_cost, art_cost)
    if unb is not None:  # cannot happen: phase-1 objective bounded below by 0
        raise InternalError("phase 1 reported unbounded")
    v1 = sum((x_b[p] for p in range(m) if basis[p] >= ncols), zero)
    if v1 > 0:
        y = compute_y(art_cost)
        cert = [zero] * len(b)
        for r in range(m):
            cert[row_of[r]] = y[r] if sign[row_of[r]] > 0 else -y[r]
        return _CoreResult(INFEASIBLE, certificate=cert)

    # drive basic artificials out; rows that cannot pivot are redundant
    redundant = []
    for p in range(m):
        if basis[p] < ncols:
            continue
        entry_col = None
        for j in range(ncols):
            if in_basis[j]:
                continue
            dp = zero
            row = binv[p]
            for r, v in cols[j]:
                br = row[r]
                if br:
                    dp += br * v
            if dp:
                entry_col = (j, dp)
                break
        if entry_col is None:
            redundant.append(p)
            continue
        j, _ = entry_col
        d = ftran(j)
        pivot(p, j, d)

    if redundant:
        # basis slot p holds the artificial of reduced row r = basis[p]-ncols,
        # and binv[:, r] = e_p, so the minor without those slots/rows is the
        # inverse for the reduced system.
        dead_rows = sorted(basis[p] - ncols for p in redundant)
        dead_slots = sorted(redundant)
        keep_rows = [r for r in range(m) if r not in set(dead_rows)]
        keep_slots = [p for p in range(m) if p not in set(dead_slots)]
        remap = {r: i for i, r in enumerate(keep_rows)}
        cols = [[(remap[r], v) for r, v in col if r in remap] for col in cols]
        binv = [[binv[p][r] for r in keep_rows] for p in keep_slots]
        x_b = [x_b[p] for p in keep_slots]
        basis = [basis[p] for p in keep_slots]
        row_of = [row_of[r] for r in keep_rows]
        m = len(keep_rows)

    # ---- phase 2 ----
    cost_of_basic = lambda p: costs[basis[p]]  # no artificial is basic now
    unb = run_phase(costs, cost_of_basic)
    if unb is not None:
        j, d = unb
        ray = [zero] * ncols
        ray[j] = one
        for p in range(m):
            if d[p]:
                ray[basis[p]] = -d[p]
        return _CoreResult(UNBOUNDED, ray=ray)

    x = [zero] * ncols
    for p in range(m):
        x[basis[p]] = x_b[p]
    value = sum((costs[j] * x[j] for j in range(ncols) if x[j]), zero)
    y = compute_y(cost_of_basic)
    duals = [zero] * len(b)
    for r in range(m):
        duals[row_of[r]] = y[r] if sign[row_of[r]] > 0 else -y[r]
    return _CoreResult(OPTIMAL, x=x, value=value, duals=duals)


# ---------------------------------------------------------------------------
# LinearProgram solving
# ---------------------------------------------------------------------------


def _to_inner(x: Fraction):
    return _inner_q(x.numerator, x.denominator)


def _to_fraction(x) -> Fraction:
    return Fraction(x.numerator, x.denominator)


def _solve_max_primal(lp: LinearProgram) -> LPSolution:
    """Direct path: split free variables, one slack/surplus per row."""
    n = lp.num_vars
    m = len(lp.constraints)
    columns = []
    costs = []
    for j in range(n):
        col = [(r, _to_inner(c.coeffs[j]))
               for r, c in enumerate(lp.constraints) if c.coeffs[j]]
        cneg = [(r, -v) for r, v in col]
        columns.append(col)
        costs.append(-_to_inner(lp.objective[j]))
        columns.append(cneg)
        costs.append(_to_inner(lp.objective[j]))
    zero = _inner_q(0)
    one = _inner_q(1)
    for r, c in enumerate(lp.constraints):
        if c.relation == LESS_EQ:
            columns.append([(r, one)])
            costs.append(zero)
        elif c.relation == GREATER_EQ:
            columns.append([(r, -one)])
            costs.append(zero)
    b = [_to_inner(c.rhs) for c in lp.constraints]
    res = _solve_standard(columns, b, costs)

    if res.status == UNBOUNDED:
        return LPSolution(UNBOUNDED)
    if res.status == INFEASIBLE:
        y = res.certificate
        yb = sum((yr * br for yr, br in zip(y, b) if yr), _inner_q(0))
        if yb <= 0:
            raise InternalError("bad infeasibility certificate")
        mult = [_to_fraction(-yr / yb) for yr in y]
        return LPSolution(INFEASIBLE, dual_certificate=tuple(mult))
    point = tuple(_to_fraction(res.x[2 * j] - res.x[2 * j + 1]) for j in range(n))
    value = -_to_fraction(res.value)
    duals = tuple(_to_fraction(-yr) for yr in res.duals)
    return LPSolution(OPTIMAL, value=value, point=point, dual_certificate=duals)


def _solve_max_dual(lp: LinearProgram) -> LPSolution | None:
    """Dual path for wide LPs: one core column per constraint, one core
    row per variable.  Returns None when the dual is infeasible (primal
    unbounded or infeasible); caller falls back to the direct path."""
    n = lp.num_vars
    columns = []
    costs = []
    col_row_sign = []  # (constraint index, +1 / -1) per core column
    for i, c in enumerate(lp.constraints):
        col = [(v, _to_inner(c.coeffs[v])) for v in range(n) if c.coeffs[v]]
        if c.relation in (LESS_EQ, EQUAL):
            columns.append(col)
            costs.append(_to_inner(c.rhs))
            col_row_sign.append((i, 1))
        if c.relation in (GREATER_EQ, EQUAL):
            columns.append([(r, -v) for r, v in col])
            costs.append(-_to_inner(c.rhs))
            col_row_sign.append((i, -1))
    b = [_to_inner(v) for v in lp.objective]
    res = _solve_standard(columns, b, costs)

    if res.status == INFEASIBLE:
        return None
    if res.status == UNBOUNDED:
        mult = [Fraction(0)] * len(lp.constraints)
        for j, rv in enumerate(res.ray):
            if rv:
                i, s = col_row_sign[j]
                mult[i] += s * _to_fraction(rv)
        scale = -sum(m_i * c.rhs for m_i, c in zip(mult, lp.constraints))
        if scale <= 0:
            raise InternalError("bad dual ray")
        mult = [m_i / scale for m_i in mult]
        return LPSolution(INFEASIBLE, dual_certificate=tuple(mult))
    point = tuple(_to_fraction(v) for v in res.duals)
    value = _to_fraction(res.value)
    mult = [Fraction(0)] * len(lp.constraints)
    for j, xv in enumerate(res.x):
        if xv:
            i, s = col_row_sign[j]
            mult[i] += s * _to_fraction(xv)
    return LPSolution(OPTIMAL, value=value, point=point,
                      dual_certificate=tuple(mult))


def _check_optimal(lp: LinearProgram, sol: LPSolution) -> None:
    x = sol.point
    for i, c in enumerate(lp.constraints):
        lhs = sum(a * v for a, v in zip(c.coeffs, x) if a)
        ok = (lhs <= c.rhs if c.relation == LESS_EQ
              else lhs >= c.rhs if c.relation == GREATER_EQ
              else lhs == c.rhs)
        if not ok:
            raise InternalError(f"solution violates constraint {i}")
    if sum(o * v for o, v in zip(lp.objective, x) if o) != sol.value:
        raise InternalError("objective mismatch")
    mult = sol.dual_certificate
    pos, neg = (LESS_EQ, GREATER_EQ) if lp.sense == "maximize" else (GREATER_EQ, LESS_EQ)
    for i, c in enumerate(lp.constraints):
        if c.relation == pos and mult[i] < 0:
            raise InternalError(f"dual sign at row {i}")
        if c.relation == neg and mult[i] > 0:
            raise InternalError(f"dual sign at row {i}")
    for j in range(lp.num_vars):
        if sum(mult[i] * c.coeffs[j] for i, c in enumerate(lp.constraints)
               if c.coeffs[j]) != lp.objective[j]:
            raise InternalError(f"dual combination mismatch at var {j}")
    if sum(mult[i] * c.rhs for i, c in enumerate(lp.constraints)) != sol.value:
        raise InternalError("strong duality mismatch")


def _check_infeasible(lp: LinearProgram, sol: LPSolution) -> None:
    mult = sol.dual_certificate
    for i, c in enumerate(lp.constraints):
        if c.relation == LESS_EQ and mult[i] < 0:
            raise InternalError(f"certificate sign at row {i}")
        if c.relation == GREATER_EQ and mult[i] > 0:
            raise InternalError(f"certificate sign at row {i}")
    for j in range(lp.num_vars):
        if sum(mult[i] * c.coeffs[j] for i, c in enumerate(lp.constraints)
               if c.coeffs[j]) != 0:
            raise InternalError(f"certificate combination nonzero at var {j}")
    if sum(mult[i] * c.rhs for i, c in enumerate(lp.constraints)) != -1:
        raise InternalError("certificate not normalized")


def solve_lp(lp: LinearProgram, *, max_nonzeros: int | None = None) -> LPSolution:
    """Solve exactly.  Optimal points satisfy every constraint with exact
    rational arithmetic; infeasible outcomes carry an exact Farkas
    certificate.  Deterministic: identical inputs give identical outputs.
    """
    if not isinstance(lp, LinearProgram):
        raise InputError("expected a LinearProgram")
    if len(lp.objective) != lp.num_vars:
        raise InputError("objective/num_vars mismatch")
    for i, c in enumerate(lp.constraints):
        if len(c.coeffs) != lp.num_vars:
            raise InputError(f"constraint {i} has wrong width")
        if c.relation not in _RELATIONS:
            raise InputError(f"constraint {i}: bad relation {c.relation!r}")
    limit = max_nonzeros if max_nonzeros is not None else caps().lp_nonzeros
    nnz = lp_nonzeros(lp)
    if nnz > limit:
        raise SizeCapError(f"LP has {nnz} nonzeros, cap is {limit}")

    if lp.sense == "minimize":
        flipped = LinearProgram(lp.num_vars, lp.constraints,
                                tuple(-v for v in lp.objective), "maximize")
        sol = solve_lp(flipped, max_nonzeros=limit)
        if sol.status == OPTIMAL:
            sol = LPSolution(OPTIMAL, value=-sol.value, point=sol.point,
                             dual_certificate=tuple(-m for m in sol.dual_certificate))
            _check_optimal(lp, sol)
        return sol

    wide = len(lp.constraints) >= 3 * max(lp.num_vars, 1)
    sol = _solve_max_dual(lp) if wide else None
    if sol is None:
        sol = _solve_max_primal(lp)
    if sol.status == OPTIMAL:
        _check_optimal(lp, sol)
    elif sol.status == INFEASIBLE:
        _check_infeasible(lp, sol)
    return sol


def farkas_feasibility(equalities: Sequence[tuple[Sequence, object]],
                       nonneg: Iterable[int] | None = None,
                       num_vars: int | None = None) -> LPSolution:
    """Exact feasibility for  A.x = b  with x >= 0 on the flagged
    variables (all of them by default) and free otherwise.

    Optimal: point is an exact solution (value 0).  Infeasible: the
    certificate y (one entry per equality) satisfies, exactly,
    (y.A)_j >= 0 for flagged j, (y.A)_j == 0 for free j, and y.b == -1.
    """
    rows = [(tuple(Fraction(v) for v in coeffs), Fraction(rhs))
            for coeffs, rhs in equalities]
    if not rows and num_vars is None:
        raise InputError("empty system with unknown variable count")
    n = num_vars if num_vars is not None else len(rows[0][0])
    for i, (coeffs, _) in enumerate(rows):
        if len(coeffs) != n:
            raise InputError(f"equality {i} has wrong width")
    flagged = set(range(n)) if nonneg is None else set(nonneg)
    if not flagged <= set(range(n)):
        raise InputError("nonneg set out of range")

    columns = []
    costs = []
    var_cols = []  # (var, +1/-1) per core column
    zero = _inner_q(0)
    for j in range(n):
        col = [(r, _to_inner(coeffs[j])) for r, (coeffs, _) in enumerate(rows)
               if coeffs[j]]
        columns.append(col)
        costs.append(zero)
        var_cols.append((j, 1))
        if j not in flagged:
            columns.append([(r, -v) for r, v in col])
            costs.append(zero)
            var_cols.append((j, -1))
    b = [_to_inner(rhs) for _, rhs in rows]
    res = _solve_standard(columns, b, costs)
    if res.status == INFEASIBLE:
        y = res.certificate
        yb = sum(_to_fraction(yr) * rhs for yr, (_, rhs) in zip(y, rows))
        if yb <= 0:
            raise InternalError("bad Farkas certificate")
        cert = tuple(_to_fraction(yr) / -yb for yr in y)
        for j in range(n):
            dot = sum(cert[r] * rows[r][0][j] for r in range(len(rows))
                      if rows[r][0][j])
            if j in flagged:
                if dot < 0:
                    raise InternalError("certificate sign on flagged variable")
            elif dot != 0:
                raise InternalError("certificate nonzero on free variable")
        return LPSolution(INFEASIBLE, dual_certificate=cert)
    if res.status != OPTIMAL:
        raise InternalError("feasibility core neither optimal nor infeasible")
    point = [Fraction(0)] * n
    for col_idx, xv in enumerate(res.x):
        if xv:
            j, s = var_cols[col_idx]
            point[j] += s * _to_fraction(xv)
    for r, (coeffs, rhs) in enumerate(rows):
        if sum(a * v for a, v in zip(coeffs, point) if a) != rhs:
            raise InternalError(f"solution violates equality {r}")
    for j in flagged:
        if point[j] < 0:
            raise InternalError("negative flagged variable")
    return LPSolution(OPTIMAL, value=Fraction(0), point=tuple(point),
                      dual_certificate=tuple(Fraction(0) for _ in rows))
