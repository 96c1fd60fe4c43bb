"""Smoke test for the coalition extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import json

import coalition

PAIRS = {
    "n": 4,
    "type": "expression",
    "ast": {
        "op": "add",
        "args": [
            {"op": "mul", "args": [{"var": 0}, {"var": 1}]},
            {"op": "mul", "args": [{"var": 2}, {"var": 3}]},
        ],
    },
}


def main():
    g = coalition.Game.from_json(json.dumps(PAIRS))
    assert g.n == 4
    assert g.value([0, 1, 2, 3]) == 2.0

    phi = g.shapley()
    assert all(abs(p - 0.5) < 1e-12 for p in phi), phi
    assert abs(g.pairwise_interaction(0, 1) - 1.0) < 1e-12

    comps = g.components([0, 1, 2, 3])
    assert abs(sum(comps.values()) - g.coalition_interaction([0, 1, 2, 3])) < 1e-9

    exact = g.exact_t([0, 1, 2, 3], contiguous=True)
    assert abs(exact["t"] - 2.0) < 1e-9, exact

    est = g.estimate_t([0, 1, 2, 3], epochs=30, subset_samples=64, seed=1)
    assert est["omega_max"] == [[0, 1], [2, 3]], est
    assert est == g.estimate_t([0, 1, 2, 3], epochs=30, subset_samples=64, seed=1)

    lines = coalition.generate("andor", 3, seed=5)
    assert len(lines) == 3 and json.loads(lines[0])["family"] == "andor"

    try:
        g.exact_t([0, 9])
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range player accepted")

    print("smoke ok:", {"t_exact": exact["t"], "t_estimate": round(est["t"], 4)})


if __name__ == "__main__":
    main()
