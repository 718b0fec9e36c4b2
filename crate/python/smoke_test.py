"""Smoke test for the `dispersive` extension module.

Build first:
    cargo build --release -p dispersive-python --features extension-module
then run this script; it loads target/release/libdispersive.so directly.
"""

import importlib.machinery
import importlib.util
import json
import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load():
    try:
        import dispersive  # installed copy, if any
        return dispersive
    except ImportError:
        pass
    built = ROOT / "target" / "release" / "libdispersive.so"
    if not built.exists():
        sys.exit(f"extension not built: {built}")
    tmp = pathlib.Path(tempfile.mkdtemp())
    target = tmp / ("dispersive" + importlib.machinery.EXTENSION_SUFFIXES[0])
    shutil.copy(built, target)
    spec = importlib.util.spec_from_file_location("dispersive", target)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def close(a, b, tol):
    return abs(a - b) <= tol * max(abs(b), 1e-300)


def main():
    d = load()
    checks = []

    g = d.Grid([1024], [100.0])
    xs = g.coords(0)
    u0 = [math.exp(-x * x) for x in xs]
    l2 = d.norm(g, u0)
    checks.append(("gaussian L2", close(l2, (math.pi / 2) ** 0.25, 1e-10)))
    checks.append(("Lorentz(p,p) = Lp", close(d.norm(g, u0, "lorentz", 3.0, 3.0), d.norm(g, u0, "lebesgue", 3.0), 1e-9)))

    v = d.propagate(g, u0, 2.0)
    checks.append(("propagator is unitary", close(d.norm(g, v), l2, 1e-12)))

    traj = d.evolve(g, [0.5 * u for u in u0], 4, 2.0, interval=0.5)
    drift = max(abs(m - traj["mass"][0]) / traj["mass"][0] for m in traj["mass"])
    checks.append(("gKdV mass conserved", drift < 1e-10))

    ts = [1.0 + 0.5 * j for j in range(20)]
    fit = d.decay_fit(ts, [3.0 * t ** -0.5 for t in ts], 1.0, 20.0)
    checks.append(("power law recovered", close(fit["exponent"], -0.5, 1e-12)))

    cfg = json.loads(d.preset_config("kato_identity"))
    checks.append(("preset resolves", cfg["scenario"] == "kato_identity"))

    try:
        d.Grid([100], [1.0])
        checks.append(("non power of two rejected", False))
    except ValueError:
        checks.append(("non power of two rejected", True))

    with tempfile.TemporaryDirectory() as out:
        manifest = json.loads(d.run_scenario("linear_decay_kdv", out))
        checks.append(("scenario passes", manifest["pass"]))

    failed = 0
    for name, ok in checks:
        print(("PASS " if ok else "FAIL ") + name)
        failed += not ok
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
