"""Mirror map, Birkhoff factorization, Seidel classes, and quantum products.

The pipeline starts from the cohomology-valued hypergeometric series attached
to a smooth semi-projective fan and produces, in exact arithmetic over the
truncated ring of a :class:`~toricmirror.series.Context`:

1. ``build_I``            -- the hypergeometric series I(y, z) on the gauge
   slice where the divisor variables are absorbed into the Novikov variables.
   Each term is indexed by a curve class d and a monomial in the deformation
   variables; its class part is a product over the rays of linear factors
   u_i + c z (or their expansions when the factor sits in the denominator).
2. ``build_dI``           -- the column family of first derivatives of I: the
   honest partial derivative for every deformation variable, the gauge-slice
   divisor derivative (u_i/z) I + (log-Novikov minus variable-weighted Euler)
   for every ray, and an extension column for every remaining basis point.
3. ``birkhoff_factorize`` -- the unique factorization dI = M . P with
   M = Id + (strictly negative z powers) and P a z-polynomial family,
   computed order by order through the order-zero block.
4. ``compute_mirror_data``-- the mirror map tau (the z^{-1} coefficient of
   M(phi_0)), Upsilon = P(phi_0), the Seidel classes S_k obtained from the
   z-free parts of the P columns and the pairing cocycle, and the inverse
   mirror map.
5. ``quantum_product``    -- the big quantum product, transported through the
   Seidel-class frame: expand both factors in the S_k, multiply the frame
   labels with the cocycle Q^{d(k,l)}, and map back.
6. ``primitive_form``     -- the volume-form normalization, solved either as
   a z-polynomial coefficient vector against the P columns (route "a") or as
   a z-dependent reparametrization of the deformation variables that kills
   every positive z power of I except z itself (route "b"); route "both"
   additionally checks that the exponential of the route-b reparametrization
   reproduces the route-a coefficients inside the w-algebra.

Everything is homogeneous for the weight |k| + z-exponent + age: I and tau
have weight 1, the columns indexed by a point k have weight |k|, and Upsilon
has weight 0.  These gradings, the flow identities for the Seidel classes,
and the factorization residual are asserted when ``check=True``.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from math import factorial

from .errors import (
    FactorizationResidue,
    IdentityViolation,
    NegativePowerInP,
    NonPolynomialCoefficient,
    NormalizationFailure,
    PolicyMismatch,
    RouteDisagreement,
)
from .linalg import QQ
from .series import (
    Context,
    HSeries,
    OperatorSeries,
    _key_shift,
    compose,
    g_deg,
    invert_map,
    log_series,
)


# ----------------------------------------------------------- shared helpers


def _cache(ctx: Context) -> dict:
    try:
        return ctx._engine_cache
    except AttributeError:
        ctx._engine_cache = {}
        return ctx._engine_cache


def phi_component(s: HSeries, pidx: int) -> HSeries:
    """The scalar (z-carrying) series multiplying phi_k in s."""
    unit = s.ctx.unit_pidx
    out = {}
    for key, inner in s.terms.items():
        picked = {(unit, z): c for (p, z), c in inner.items() if p == pidx}
        if picked:
            out[key] = picked
    return HSeries(s.ctx, out, s.lossy)


def ray_exponents(ctx: Context, eidx: int, g: tuple, offset_pidx=None) -> tuple:
    """Per-ray exponents of the term at (Q^d, y^g), shifted once by a point.

    The exponent on the ray b_i is d_i minus the psi_i-weighted variable
    degrees; the optional offset subtracts psi_i of one more point (the shape
    of a first-order extension column).
    """
    ell = list(ctx.eff[eidx])
    for v, e in g:
        psi = ctx.points[ctx.gvars[v].pidx].psi
        for i, p in enumerate(psi):
            if p:
                ell[i] -= p * e
    if offset_pidx is not None:
        for i, p in enumerate(ctx.points[offset_pidx].psi):
            if p:
                ell[i] -= p
    return tuple(ell)


def _g_monomials(ctx: Context) -> list[tuple]:
    """All monomials in the ordinary deformation variables with degree <= gcap."""
    cache = _cache(ctx)
    if "gmono" in cache:
        return cache["gmono"]
    vs = [vi for vi, v in enumerate(ctx.gvars) if v.kind == "y"]
    out = []

    def rec(pos, budget, acc):
        out.append(tuple(acc))
        for j in range(pos, len(vs)):
            for e in range(1, budget + 1):
                rec(j + 1, budget - e, acc + [(vs[j], e)])

    rec(0, ctx.policy.gcap, [])
    out.sort()
    cache["gmono"] = out
    return out


def _linear_inverse(ctx: Context, ray: int, c: int) -> HSeries:
    """Expansion of 1/(u_i + c z) in the truncated ring (c a positive integer).

    u_i is nilpotent here, so the geometric series in u_i/(c z) terminates on
    its own once the multiples of the ray leave the working window.
    """
    inner = {}
    lossy = False
    b = ctx.fan.rays[ray]
    t = 0
    while True:
        pidx = ctx.pindex.get(tuple(t * x for x in b))
        if pidx is None:
            break
        zexp = -t - 1
        if zexp < -ctx.zneg:
            lossy = ctx.note_z_clip()
            break
        inner[(pidx, zexp)] = QQ((-1) ** t, c ** (t + 1))
        t += 1
    return HSeries(ctx, {(ctx.zero_eidx, ()): inner}, lossy)


def _hyper_factor(ctx: Context, ray: int, ell: int) -> HSeries:
    """The ray factor of one hypergeometric term.

    For ell >= 0 this is the product over c = 1..ell of 1/(u_i + c z); for
    ell < 0 it is the polynomial product over c = ell+1..0 of (u_i + c z),
    which includes the bare u_i at c = 0.
    """
    cache = _cache(ctx).setdefault("factor", {})
    key = (ray, ell)
    if key in cache:
        return cache[key]
    if ell >= 0:
        acc = HSeries.unit(ctx)
        for c in range(1, ell + 1):
            acc = acc * _linear_inverse(ctx, ray, c)
    else:
        u = HSeries.phi(ctx, ctx.ray_pidx[ray])
        acc = HSeries.unit(ctx)
        for c in range(ell + 1, 1):
            acc = acc * (u + HSeries.phi(ctx, ctx.unit_pidx, 1, c))
    cache[key] = acc
    return acc


def _term_factor(ctx: Context, ell: tuple) -> HSeries:
    """Product of the ray factors for one exponent vector."""
    cache = _cache(ctx).setdefault("term", {})
    if ell in cache:
        return cache[ell]
    acc = HSeries.unit(ctx)
    for i, l in enumerate(ell):
        if l:
            acc = acc * _hyper_factor(ctx, i, l)
            if acc.is_zero():
                break
    cache[ell] = acc
    return acc


@contextmanager
def _wide_z_window(ctx: Context):
    """Temporarily widen the z window while per-ray factors are multiplied.

    A finished term always sits inside the window (its weight is fixed and
    the class part has nonnegative norm), but the partial products spike
    above it by up to the sum of the negative ray exponents.  Building wide
    and re-windowing the finished series keeps the loss counters honest:
    they fire only for terms that are genuinely out of range.
    """
    saved = (ctx.zneg, ctx.zpos)
    big = 4 * (ctx.zneg + ctx.zpos + ctx.kwork + 1)
    ctx.zneg = ctx.zpos = big
    try:
        yield
    finally:
        ctx.zneg, ctx.zpos = saved


def _rewindow(ctx: Context, s: HSeries) -> HSeries:
    """Clip a wide-window series back to the policy window, noting losses."""
    out = {}
    lossy = s.lossy
    for key, inner in s.terms.items():
        kept = {}
        for (p, z), c in inner.items():
            if z < -ctx.zneg or z > ctx.zpos:
                lossy |= ctx.note_z_clip()
                continue
            kept[(p, z)] = c
        if kept:
            out[key] = kept
    return HSeries(ctx, out, lossy)


def _series_sum(ctx: Context, offset_pidx=None) -> HSeries:
    """The hypergeometric sum; offset None gives I, a point gives its column."""
    base_shift = 1 if offset_pidx is None else 0
    with _wide_z_window(ctx):
        total = HSeries.zero(ctx)
        for eidx in range(len(ctx.eff)):
            for g in _g_monomials(ctx):
                ell = ray_exponents(ctx, eidx, g, offset_pidx)
                fac = _term_factor(ctx, ell)
                if fac.is_zero():
                    continue
                coeff = QQ(1)
                for _, e in g:
                    coeff /= factorial(e)
                total = total + _key_shift(
                    fac, eidx, g, base_shift - g_deg(g)
                ).scale(coeff)
    return _rewindow(ctx, total)


# --------------------------------------------------------------- the series


def build_I(ctx: Context) -> HSeries:
    """The hypergeometric series I(y, z) on the gauge slice.

    The order-zero term is z phi_0; every term is homogeneous of weight 1.
    """
    out = _series_sum(ctx)
    if not out.is_homogeneous(1):
        raise IdentityViolation("hypergeometric series is not of pure weight 1")
    return out


def build_dI(ctx: Context, I: HSeries | None = None) -> OperatorSeries:
    """The derivative columns of I, one for every basis point up to kwork."""
    if I is None:
        I = build_I(ctx)
    ray_pos = {rp: i for i, rp in enumerate(ctx.ray_pidx)}
    cols = {}
    for pidx in range(len(ctx.points)):
        if pidx == ctx.unit_pidx:
            col = I.z_shift(-1)
        elif pidx in ray_pos:
            i = ray_pos[pidx]
            col = (HSeries.phi(ctx, pidx) * I).z_shift(-1) + I.ray_gauge(i)
        else:
            # For an active point this is the y-derivative of I, but summed
            # directly so the column is complete at the top y-order (the
            # derivative of the truncated I would lose that order).
            col = _series_sum(ctx, offset_pidx=pidx)
        cols[pidx] = col
    return OperatorSeries(ctx, cols)


# ------------------------------------------------------------- factorization


def _grading_inverse(ctx: Context, P0: OperatorSeries) -> OperatorSeries:
    """Inverse of the unit-triangular order-zero block (finite Neumann sum)."""
    ident = OperatorSeries.identity(ctx)
    N = P0 - ident
    X = ident
    for _ in range(ctx.kwork + 1):
        X = ident - N.compose(X)
    return X


def birkhoff_factorize(ctx: Context, dI: OperatorSeries, check: bool = True):
    """Factor dI = M . P with M = Id + z^{<0} and P a z-polynomial family.

    The columns are solved order by order in the combined (Novikov plus
    variable) degree; at each order the negative part of the residue composed
    with the inverse of the order-zero block is the new slice of M, and what
    remains is the new slice of P.  When ``check`` is set the full residual
    M . P - dI is recomputed and must vanish identically on the window.
    """
    P0 = dI.order_part(0)
    if not P0.z_negative().is_zero():
        raise FactorizationResidue(
            "order-zero block of the column family has negative z powers"
        )
    P0inv = _grading_inverse(ctx, P0)
    nmax = max((c.max_order() for c in dI.cols.values()), default=0)
    ident = OperatorSeries.identity(ctx)
    Mparts = {0: ident}
    Pparts = {0: P0}
    for n in range(1, nmax + 1):
        R = dI.order_part(n)
        for a in range(1, n):
            R = R - Mparts[a].compose(Pparts[n - a])
        Mn = R.compose(P0inv).z_negative()
        Pn = R - Mn.compose(P0)
        if not Pn.z_negative().is_zero():
            raise NegativePowerInP(
                f"order-{n} slice of P acquired negative z powers"
            )
        Mparts[n] = Mn
        Pparts[n] = Pn
    M = ident
    P = P0
    for n in range(1, nmax + 1):
        M = M + Mparts[n]
        P = P + Pparts[n]
    if check:
        resid = M.compose(P) - dI
        if not resid.is_zero():
            raise FactorizationResidue(
                "factorization residual is nonzero; the z window is too small"
            )
    return M, P


# ------------------------------------------------- Seidel classes and frames


def _solve_unit_coordinates(ctx: Context, V: dict) -> dict:
    """Scalar series c0 with sum_l c0_l V_l = 1.

    V_l is phi_l plus higher-order terms, so the system is triangular in the
    combined order and the coefficients can be read off directly.
    """
    target = HSeries.unit(ctx)
    c0 = {ctx.unit_pidx: HSeries.unit(ctx)}
    nmax = ctx.policy.qcap + ctx.policy.gcap
    for r in range(1, nmax + 1):
        resid = target
        for l, cl in c0.items():
            resid = resid - cl * V[l]
        resid_r = resid.order_part(r)
        if resid_r.is_zero():
            continue
        seen = {p for inner in resid_r.terms.values() for (p, _) in inner}
        for p in seen:
            delta = phi_component(resid_r, p)
            c0[p] = c0.get(p, HSeries.zero(ctx)) + delta
    resid = target
    for l, cl in c0.items():
        resid = resid - cl * V[l]
    if not resid.is_zero():
        raise NormalizationFailure("unit class has no coordinates in this frame")
    return {l: cl for l, cl in c0.items() if not cl.is_zero()}


def _seidel_family(ctx: Context, V: dict, c0: dict) -> dict:
    """S_k = sum_l c0_l Q^{d(k,l)} V_{k+l} for every basis point k."""
    pts = ctx.points
    S = {}
    for k in range(len(pts)):
        acc = HSeries.zero(ctx)
        for l, cl in c0.items():
            de = ctx.pairing_eidx(k, l)
            if de is None:
                continue  # pairing class beyond the Novikov window
            tp = ctx.pindex.get(
                tuple(a + b for a, b in zip(pts[k].point, pts[l].point))
            )
            if tp is None:
                continue  # point sum beyond kwork: provably above the window
            acc = acc + _key_shift(cl * V[tp], de, (), 0)
        S[k] = acc
    return S


def _y_degree_part(s: HSeries, cap: int) -> HSeries:
    """Terms of total deformation-variable degree at most cap."""
    out = {
        key: dict(inner)
        for key, inner in s.terms.items()
        if g_deg(key[1]) <= cap
    }
    return HSeries(s.ctx, out, s.lossy)


def _check_flow_identities(ctx: Context, tau: HSeries, S: dict):
    """The Seidel classes are the flows of the mirror map.

    Differentiating the truncated mirror map by an active variable loses the
    top y-order, so active directions are compared one order short; ray
    directions (a gauge flow, no derivative) are compared in full.
    """
    short = max(ctx.policy.gcap - 1, 0)
    for vi, gv in enumerate(ctx.gvars):
        if gv.kind != "y":
            continue
        want = tau.derive_var(vi)
        if _y_degree_part(S[gv.pidx], short) != _y_degree_part(want, short):
            pt = ctx.points[gv.pidx].point
            raise IdentityViolation(
                f"Seidel class at {pt} differs from the mirror-map flow"
            )
    for i, rp in enumerate(ctx.ray_pidx):
        want = HSeries.phi(ctx, rp) + tau.ray_gauge(i)
        if S[rp] != want:
            raise IdentityViolation(
                f"Seidel class of ray {i} differs from u_i + gauge flow"
            )


@dataclass
class MirrorData:
    """Everything the factorization of one context produces."""

    ctx: Context
    I: HSeries
    dI: OperatorSeries
    M: OperatorSeries
    P: OperatorSeries
    P0: OperatorSeries
    tau: HSeries
    upsilon: HSeries
    V: dict
    c0: dict
    S: dict
    inverse_map: dict


def compute_mirror_data(ctx: Context, check: bool = True) -> MirrorData:
    """Run the full pipeline on one context."""
    I = build_I(ctx)
    dI = build_dI(ctx, I)
    M, P = birkhoff_factorize(ctx, dI, check=check)
    P0 = dI.order_part(0)
    tau = M.col(ctx.unit_pidx).z_coefficient(-1)
    upsilon = P.col(ctx.unit_pidx)
    V = {k: P.col(k).z_coefficient(0) for k in P.cols}
    c0 = _solve_unit_coordinates(ctx, V)
    S = _seidel_family(ctx, V, c0)
    if check:
        if not tau.is_homogeneous(1):
            raise IdentityViolation("mirror map is not of pure weight 1")
        if not upsilon.is_homogeneous(0):
            raise IdentityViolation("P(phi_0) is not of pure weight 0")
        for k, col in P.cols.items():
            if not col.is_homogeneous(ctx.norms[k]):
                raise IdentityViolation("P column has mixed weight")
        _check_flow_identities(ctx, tau, S)
    targets = {
        vi: phi_component(tau, gv.pidx)
        for vi, gv in enumerate(ctx.gvars)
        if gv.kind == "y"
    }
    inverse = invert_map(targets)
    return MirrorData(ctx, I, dI, M, P, P0, tau, upsilon, V, c0, S, inverse)


# ------------------------------------------------------------- the w-algebra


def w_multiply(ctx: Context, A: dict, B: dict) -> dict:
    """Product of frame-label vectors with the cocycle Q^{d(k,l)}.

    A and B map basis-point indices to scalar series; the product of the
    labels k and l lands on k+l and picks up the Novikov factor of the
    pairing class.
    """
    out: dict = {}
    pts = ctx.points
    for k, fk in A.items():
        for l, fl in B.items():
            de = ctx.pairing_eidx(k, l)
            if de is None:
                continue
            tp = ctx.pindex.get(
                tuple(a + b for a, b in zip(pts[k].point, pts[l].point))
            )
            if tp is None:
                continue
            term = _key_shift(fk * fl, de, (), 0)
            out[tp] = out.get(tp, HSeries.zero(ctx)) + term
    return {k: v for k, v in out.items() if not v.is_zero()}


def w_exp(ctx: Context, A: dict) -> dict:
    """Exponential in the w-algebra of a vector with no order-zero part."""
    for s in A.values():
        if any(ctx.order(e, g) == 0 for (e, g) in s.terms):
            raise NormalizationFailure("w-exponential needs a positive-order vector")
    acc = {ctx.unit_pidx: HSeries.unit(ctx)}
    power = {ctx.unit_pidx: HSeries.unit(ctx)}
    nmax = ctx.policy.qcap + ctx.policy.gcap
    for n in range(1, nmax + 1):
        power = w_multiply(ctx, power, A)
        if not power:
            break
        for k, s in power.items():
            term = s.scale(QQ(1, factorial(n)))
            acc[k] = acc.get(k, HSeries.zero(ctx)) + term
    return {k: v for k, v in acc.items() if not v.is_zero()}


# --------------------------------------------------------- quantum products


def seidel_coordinates(md: MirrorData, target: HSeries) -> dict:
    """Coordinates x with sum_k x_k S_k = target (triangular in the order)."""
    ctx = md.ctx
    coords: dict = {}
    resid = target
    nmax = ctx.policy.qcap + ctx.policy.gcap
    for r in range(0, nmax + 1):
        resid_r = resid.order_part(r)
        if resid_r.is_zero():
            continue
        seen = {p for inner in resid_r.terms.values() for (p, _) in inner}
        for p in sorted(seen):
            delta = phi_component(resid_r, p)
            if delta.is_zero():
                continue
            coords[p] = coords.get(p, HSeries.zero(ctx)) + delta
            resid = resid - delta * md.S[p]
    if not resid.is_zero():
        raise IdentityViolation(
            "class is not in the span of the Seidel frame at these caps"
        )
    return {k: v for k, v in coords.items() if not v.is_zero()}


def quantum_product(md: MirrorData, a, b) -> HSeries:
    """Big quantum product of two classes at the mirror-map point.

    Both factors are expanded in the Seidel frame, the frame labels are
    multiplied with the pairing cocycle, and the result is mapped back.
    Integer arguments are read as basis-point indices.
    """
    ctx = md.ctx
    if isinstance(a, int):
        a = HSeries.phi(ctx, a)
    if isinstance(b, int):
        b = HSeries.phi(ctx, b)
    ca = seidel_coordinates(md, a)
    cb = seidel_coordinates(md, b)
    prod = w_multiply(ctx, ca, cb)
    out = HSeries.zero(ctx)
    for k, fk in prod.items():
        out = out + fk * md.S[k]
    return out


# ------------------------------------------------------------ primitive form


@dataclass
class PrimitiveForm:
    """Solved volume-form normalizations (either or both routes)."""

    coefficients: dict | None        # route a: point index -> z-polynomial scalar
    reparametrization: dict | None   # route b: (point index, n) -> scalar series
    tau_check: HSeries | None        # route b: z-free part of the new series


def _route_a(md: MirrorData) -> dict:
    """Solve sum_k c_k(z, y) P(phi_k) = 1 with z-polynomial coefficients."""
    ctx = md.ctx
    by_norm = sorted(range(len(ctx.points)), key=lambda p: -ctx.norms[p])
    unit = HSeries.unit(ctx)
    coeffs: dict = {}
    nmax = ctx.policy.qcap + ctx.policy.gcap
    for r in range(0, nmax + 1):
        resid = unit
        for k, ck in coeffs.items():
            resid = resid - ck * md.P.col(k)
        rem = resid.order_part(r)
        for p in by_norm:
            if rem.is_zero():
                break
            delta = phi_component(rem, p)
            if delta.is_zero():
                continue
            if not delta.z_negative().is_zero():
                raise NonPolynomialCoefficient(
                    "volume-form coordinate needs a negative z power"
                )
            coeffs[p] = coeffs.get(p, HSeries.zero(ctx)) + delta
            rem = rem - delta * md.P0.col(p)
        if not rem.is_zero():
            raise NormalizationFailure("triangular solve left a remainder")
    resid = unit
    for k, ck in coeffs.items():
        resid = resid - ck * md.P.col(k)
    if not resid.is_zero():
        raise NormalizationFailure("volume-form coordinates do not close")
    return {k: v for k, v in coeffs.items() if not v.is_zero()}


def _nilpotent_exp(ctx: Context, ray: int, L: HSeries) -> HSeries:
    """exp(u_i L / z) expanded through the nilpotency of the ray class."""
    b = ctx.fan.rays[ray]
    acc = HSeries.unit(ctx)
    Lp = HSeries.unit(ctx)
    t = 1
    while True:
        pidx = ctx.pindex.get(tuple(t * x for x in b))
        if pidx is None:
            break
        Lp = Lp * L
        if Lp.is_zero():
            break
        acc = acc + (Lp * HSeries.phi(ctx, pidx)).z_shift(-t).scale(
            QQ(1, factorial(t))
        )
        t += 1
    return acc


def _substituted_series(md: MirrorData, sol: dict) -> HSeries:
    """I with y_k replaced by y_k + sum_n sol[(k, n)] z^n (rays via dressing).

    The ray corrections move the gauge slice to y_{b_i} = 1 + eps_i, which
    multiplies each term by (1 + eps_i)^{ell_i} and the whole sum by
    exp(u_i log(1 + eps_i)/z).  All corrections are simultaneous: the
    dressing prefactors stay in the original variables, so each term of I is
    composed with the variable corrections first and dressed afterwards
    (the ray exponents belong to the term's original key).
    """
    ctx = md.ctx
    ray_pos = {rp: i for i, rp in enumerate(ctx.ray_pidx)}
    eps: dict = {}
    subs: dict = {}
    for (p, n), s in sol.items():
        if s.is_zero():
            continue
        if p in ray_pos:
            i = ray_pos[p]
            eps[i] = eps.get(i, HSeries.zero(ctx)) + s.z_shift(n)
        else:
            v = ctx.var(ctx.points[p].point)
            if v not in subs:
                subs[v] = HSeries.variable(ctx, v)
            subs[v] = subs[v] + s.z_shift(n)
    if not eps and not subs:
        return md.I

    bases = {i: HSeries.unit(ctx) + e for i, e in eps.items()}
    inverses: dict = {}
    pow_cache: dict = {}

    def int_power(i, m):
        if (i, m) in pow_cache:
            return pow_cache[(i, m)]
        if m >= 0:
            acc = HSeries.unit(ctx)
            for _ in range(m):
                acc = acc * bases[i]
        else:
            if i not in inverses:
                # geometric series 1/(1+e) = sum (-e)^j
                inv = HSeries.unit(ctx)
                power = HSeries.unit(ctx)
                for j in range(1, ctx.policy.qcap + ctx.policy.gcap + 1):
                    power = power * eps[i]
                    if power.is_zero():
                        break
                    inv = inv + power.scale(QQ((-1) ** j))
                inverses[i] = inv
            acc = HSeries.unit(ctx)
            for _ in range(-m):
                acc = acc * inverses[i]
        pow_cache[(i, m)] = acc
        return acc

    total = HSeries.zero(ctx)
    for (eidx, g), inner in md.I.terms.items():
        piece = HSeries(ctx, {(eidx, g): dict(inner)})
        if subs:
            piece = compose(piece, subs)
        if eps:
            ell = ray_exponents(ctx, eidx, g)
            for i in eps:
                if ell[i]:
                    piece = piece * int_power(i, ell[i])
        total = total + piece
    for i in eps:
        total = total * _nilpotent_exp(ctx, i, log_series(bases[i]))
    return total


def _positive_defect(ctx: Context, s: HSeries) -> HSeries:
    """The z^{>=1} part of s minus the normalization term z phi_0."""
    return s._filter_inner(lambda p, z: z >= 1) - HSeries.phi(
        ctx, ctx.unit_pidx, 1
    )


def _route_b(md: MirrorData):
    """Reparametrize the variables in z so that I becomes z + tau + O(1/z)."""
    ctx = md.ctx
    if ctx.policy.active_points is not None:
        raise PolicyMismatch(
            "route b needs every deformation variable up to kvar"
        )
    sol: dict = {}
    nmax = ctx.policy.qcap + ctx.policy.gcap
    for r in range(1, nmax + 1):
        cur = _substituted_series(md, sol)
        bad_r = _positive_defect(ctx, cur).order_part(r)
        for a in range(1, ctx.zpos + 1):
            if bad_r.is_zero():
                break
            level = []
            for (eidx, g), inner in bad_r.terms.items():
                for (p, z), c in inner.items():
                    if z == a:
                        level.append((eidx, g, p, c))
            for eidx, g, p, c in level:
                mono = HSeries(ctx, {(eidx, g): {(ctx.unit_pidx, 0): -c}})
                key = (p, a)
                sol[key] = sol.get(key, HSeries.zero(ctx)) + mono
                bad_r = bad_r - _key_shift(md.P0.col(p), eidx, g, a).scale(c)
        if not bad_r.is_zero():
            raise NormalizationFailure(
                "variable reparametrization cannot kill the positive z part"
            )
    final = _substituted_series(md, sol)
    if not _positive_defect(ctx, final).is_zero():
        raise NormalizationFailure(
            "variable reparametrization left a positive z part"
        )
    tau_b = final.z_coefficient(0)
    if tau_b != md.tau:
        raise RouteDisagreement(
            "z-free part of the reparametrized series is not the mirror map"
        )
    sol = {k: v for k, v in sol.items() if not v.is_zero()}
    return sol, tau_b


def primitive_form(md: MirrorData, route: str = "both") -> PrimitiveForm:
    """Solve the volume-form normalization along the requested route(s)."""
    if route not in ("a", "b", "both"):
        raise ValueError(f"unknown route {route!r}")
    coeffs = None
    sol = None
    tau_b = None
    if route in ("a", "both"):
        coeffs = _route_a(md)
    if route in ("b", "both"):
        sol, tau_b = _route_b(md)
    if route == "both":
        ctx = md.ctx
        A: dict = {}
        for (p, n), s in sol.items():
            A[p] = A.get(p, HSeries.zero(ctx)) + s.z_shift(n - 1)
        expd = w_exp(ctx, A)
        if expd != coeffs:
            raise RouteDisagreement(
                "exponential of the reparametrization differs from the "
                "coefficient route"
            )
    return PrimitiveForm(coeffs, sol, tau_b)


# ------------------------------------------------------ divisor bookkeeping


def restore_divisor_variables(ctx: Context, s: HSeries) -> list[dict]:
    """Records of a slice series with the per-ray exponents made explicit.

    Each record carries the curve class, the variable monomial, and the ray
    exponent vector that the gauge slice absorbed; the curve class is
    recomputed from the exponents as an internal audit.
    """
    recs = []
    for (eidx, g), inner in s.terms.items():
        ell = ray_exponents(ctx, eidx, g)
        back = list(ell)
        for v, e in g:
            psi = ctx.points[ctx.gvars[v].pidx].psi
            for i, p in enumerate(psi):
                if p:
                    back[i] += p * e
        if tuple(back) != ctx.eff[eidx]:
            raise IdentityViolation("ray exponents do not recompose the class")
        gexp = [
            [list(ctx.points[ctx.gvars[v].pidx].point), ctx.gvars[v].order, e]
            for v, e in g
        ]
        for (p, z), c in sorted(inner.items()):
            recs.append(
                {
                    "k": list(ctx.points[p].point),
                    "zexp": z,
                    "d": list(ctx.eff[eidx]),
                    "gexp": gexp,
                    "ray_exponents": list(ell),
                    "num": int(c.numerator),
                    "den": int(c.denominator),
                }
            )
    recs.sort(key=lambda r: (r["d"], r["gexp"], r["k"], r["zexp"]))
    return recs


def from_divisor_records(ctx: Context, records) -> HSeries:
    """Rebuild a slice series from divisor-explicit records (roundtrip)."""
    plain = []
    for r in records:
        ell = list(r["ray_exponents"])
        for pt, order, e in r["gexp"]:
            psi = ctx.points[ctx.pindex[tuple(pt)]].psi
            for i, p in enumerate(psi):
                if p:
                    ell[i] += p * e
        if list(ell) != list(r["d"]):
            raise IdentityViolation("record exponents do not recompose the class")
        plain.append({k: v for k, v in r.items() if k != "ray_exponents"})
    return HSeries.from_records(ctx, plain)


__all__ = [
    "MirrorData",
    "PrimitiveForm",
    "build_I",
    "build_dI",
    "birkhoff_factorize",
    "compute_mirror_data",
    "seidel_coordinates",
    "quantum_product",
    "primitive_form",
    "phi_component",
    "ray_exponents",
    "restore_divisor_variables",
    "from_divisor_records",
    "w_multiply",
    "w_exp",
]
