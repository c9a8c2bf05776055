"""Smoke test for the edgelink extension module.

Build first with `cargo build -p edgelink-py`, then run
`python3 crates/py/python/smoke_test.py`. The script loads the freshly
built shared library from target/ under the module name `edgelink`.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parents[3]


def load():
    for profile in ("debug", "release"):
        for name in ("libedgelink_py.so", "libedgelink_py.dylib", "edgelink_py.dll"):
            path = ROOT / "target" / profile / name
            if path.exists():
                loader = importlib.machinery.ExtensionFileLoader("edgelink", str(path))
                spec = importlib.util.spec_from_file_location("edgelink", path, loader=loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                return module
    sys.exit("edgelink extension not built; run `cargo build -p edgelink-py`")


def main():
    el = load()

    spec = el.SystemSpec.square(7, eps=-1.75, g=0.1)
    assert spec.dim() == 7 * 7 + 2
    assert spec.is_symmetric
    assert el.SystemSpec.from_json(spec.to_json()).to_json() == spec.to_json()

    s = el.diagonalize(spec)
    assert len(s) == 51
    assert all(a <= b for a, b in zip(s.eigenvalues, s.eigenvalues[1:]))
    assert set(s.parities) <= {1, -1}
    w1 = sum(w[0] for w in s.qubit_weights)
    assert abs(w1 - 1.0) < 1e-10

    cal = el.diagonalize(el.SystemSpec.square(21)).calibrate(-1.76)
    assert cal["e_l"] < -1.76 < cal["e_next"]
    assert 0.15 < cal["a_f"] < 0.18

    trace = s.evolve([0.0, 10.0, 20.0, 30.0])
    for a, b, c in zip(trace["p_q1"], trace["p_q2"], trace["p_lat"]):
        assert abs(a + b + c - 1.0) < 1e-10

    roots = el.boundary_roots(7, -1.75, 0.1)
    assert abs(sum(r["qubit_weight"] for r in roots) - 1.0) < 1e-10
    dense = sorted(s.eigenvalues)
    for r in roots:
        assert min(abs(e - r["lambda"]) for e in dense) < 1e-8

    f = el.fidelity(21, -1.76, 0.05)
    assert 0.5 < f <= 1.0

    a = el.asym(21, (-1.76, -1.76), (0.1, 0.1))
    assert a["k_pr"] == 1.0
    assert math.isfinite(a["omega_eff"])

    try:
        el.SystemSpec.square(4).dim()
    except ValueError:
        pass
    else:
        raise AssertionError("even L must be rejected")

    print("edgelink python smoke test: ok")


if __name__ == "__main__":
    main()
