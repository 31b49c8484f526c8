"""Shared fan fixtures and context factory for the test suite."""

from toricmirror.fans import load_fan
from toricmirror.series import Context, TruncationPolicy

P1 = {
    "name": "p1",
    "dim": 1,
    "rays": [[1], [-1]],
    "max_cones": [[0], [1]],
}

P2 = {
    "name": "p2",
    "dim": 2,
    "rays": [[1, 0], [0, 1], [-1, -1]],
    "max_cones": [[0, 1], [1, 2], [2, 0]],
}

C2 = {
    "name": "c2",
    "dim": 2,
    "rays": [[1, 0], [0, 1]],
    "max_cones": [[0, 1]],
}

F1 = {
    "name": "f1",
    "dim": 2,
    "rays": [[1, 0], [0, 1], [-1, 1], [0, -1]],
    "max_cones": [[0, 1], [1, 2], [2, 3], [3, 0]],
}

FANS = {"p1": P1, "p2": P2, "c2": C2, "f1": F1}


def make_ctx(fan_dict, kcoh=3, kvar=2, qcap=3, gcap=2, zneg=10, **kw):
    fan = load_fan(dict(fan_dict))
    policy = TruncationPolicy(
        kcoh=kcoh, kvar=kvar, qcap=qcap, gcap=gcap, zneg=zneg, **kw
    )
    return Context(fan, policy)
