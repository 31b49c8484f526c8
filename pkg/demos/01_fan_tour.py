"""A tour of the built-in fans and their combinatorial data.

Every computation in the package starts from a smooth semi-projective fan:
rays, maximal cones, and (for the gradings) a strictly convex support
function.  This script loads the four bundled fans and prints the data the
engine actually consumes -- cone coordinates, norms, and the curve-class
corrections of a few lattice points.
"""

from toricmirror import fans
from toricmirror.cli import BUILTIN_FANS


def describe(name):
    fan = fans.load_fan(dict(BUILTIN_FANS[name]))
    print(f"== {fan.name} ==")
    print(f"  dim {fan.dim}, rays {list(map(list, fan.rays))}")
    print(f"  maximal cones {list(map(list, fan.max_cones))}")
    print(f"  complete: {fan.complete}, polarization: {fan.polarization}")
    print(f"  fingerprint: {fans.fan_fingerprint(fan)}")

    # The cone coordinates Psi(k) of a point k are the coefficients of k on
    # the rays of a cone containing it; their sum is the norm |k|, and the
    # difference of Psi against the splitting cone is the class beta(k).
    shown = 0
    for k in fans.enumerate_points(fan, 2):
        pd = fans.point_data(fan, k)
        if pd.norm != 2 or shown >= 3:
            continue
        shown += 1
        print(f"  point {k}: psi {pd.psi}, norm {pd.norm}, beta {pd.beta}")
    print()


if __name__ == "__main__":
    for name in ("p1", "p2", "c2", "f1"):
        describe(name)

    # Failure is loud and structured: here a non-unimodular cone.
    try:
        fans.load_fan({"name": "bad", "dim": 2,
                       "rays": [[1, 0], [1, 2]], "max_cones": [[0, 1]]})
    except fans.FanError as exc:
        print(f"rejected bad fan: {exc}")
