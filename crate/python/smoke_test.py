"""Smoke test for the pyballspace bindings."""

import json
import math

import pyballspace as bs

GRID = "n=1,L=4,N=256"


def close(a, b, tol):
    return abs(a - b) <= tol * max(abs(b), 1e-300)


def main():
    # ‖1_{[-1/2, 1/2)}‖_{L^2} = 1 on a grid aligned with the jump points.
    values = [1.0 if -0.5 <= -4.0 + (k + 0.5) / 32.0 < 0.5 else 0.0 for k in range(256)]
    assert close(bs.norm_values(values, "lebesgue:p=2", GRID), 1.0, 1e-12)

    g = bs.norm("gaussian:sigma=1", "lebesgue:p=2", GRID)
    assert close(g, (math.pi / 2) ** 0.25, 1e-6), g

    assert close(bs.bbm_constant(2.0, 1), 1.0, 1e-14)
    limit, _, _, reference = bs.bbm_limit("gaussian:sigma=1", "lebesgue:p=2", "n=1,L=8,N=2048", 2.0)
    assert close(limit, reference, 0.03), (limit, reference)

    value, _, reference = bs.bsvy_sup(
        "coordinate", "lebesgue:p=1", "n=1,lo=0,hi=1,N=512", 1.0, 1.0, policy="equivalent-ball:subsample=32,near=0"
    )
    assert close(value, 2.0 * reference, 0.05), (value, reference)

    assert close(bs.ap_constant("unit", "n=1,L=1,N=64", 2.0), 1.0, 1e-12)
    m = bs.maximal(values, GRID)
    assert all(a >= abs(b) - 1e-12 for a, b in zip(m, values))

    table = json.loads(bs.run_experiment("apconst", seed=3))
    assert all(c["passed"] for c in table["checks"])
    assert all(row["seed"] == 3 for row in table["rows"])

    for cid, title, passed, detail in bs.verify([5, 6, 11]):
        print(f"{'PASS' if passed else 'FAIL'} {cid:>2} {title}: {detail}")
        assert passed

    try:
        bs.norm("gaussian", "lebesgue:p=0.5", GRID)
    except ValueError:
        pass
    else:
        raise AssertionError("invalid exponent accepted")
    print("smoke test passed")


if __name__ == "__main__":
    main()
