"""Birkhoff factorization, the mirror map, and its flow equations.

Factorizing the derivative system of the hypergeometric series splits it
into a negative-z gauge M and a polynomial part P.  The z^{-1} slice of
the unit column of M is the big mirror map tau(y); the Seidel classes are
simultaneously its flows and the quantum multipliers of the theory.  This
script prints tau on the line and the plane and verifies one flow equation
by hand.
"""

from toricmirror.cli import BUILTIN_FANS
from toricmirror.engine import compute_mirror_data
from toricmirror.fans import load_fan
from toricmirror.series import Context, TruncationPolicy


def show(name):
    policy = TruncationPolicy(kcoh=3, kvar=2, qcap=3, gcap=2, zneg=10)
    ctx = Context(load_fan(dict(BUILTIN_FANS[name])), policy)
    md = compute_mirror_data(ctx)

    print(f"== {name} ==")
    print(f"  mirror map: {len(md.tau.records())} records, "
          f"weight {md.tau.weights()}")
    for rec in md.tau.records()[:5]:
        print(f"    d={rec['d']} g={rec['gexp']} k={rec['k']} "
              f"{rec['num']}/{rec['den']}")

    # Flow equation in an active direction: differentiating tau by a
    # deformation variable gives the Seidel class of that point (one
    # variable order short, since differentiation consumes a power).
    for vi, gv in enumerate(ctx.gvars):
        if gv.kind != "y" or gv.pidx == ctx.unit_pidx:
            continue
        point = ctx.points[gv.pidx].point
        flow = md.tau.derive_var(vi)
        cap = ctx.policy.gcap - 1
        lhs = {k: v for k, v in flow.terms.items()
               if sum(e for _, e in k[1]) <= cap}
        rhs = {k: v for k, v in md.S[gv.pidx].terms.items()
               if sum(e for _, e in k[1]) <= cap}
        print(f"  flow in direction {point}: matches Seidel class: {lhs == rhs}")
        break
    print()


if __name__ == "__main__":
    for name in ("p1", "p2"):
        show(name)
