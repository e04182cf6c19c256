"""Smoke test for the harper_le extension module.

Build first:
    cargo build -p harper-py --features extension-module
The script imports harper_le from the path, or else from the cargo target
directory (copying libharper_le.so to harper_le.so in a temp dir).
"""

import importlib
import math
import pathlib
import shutil
import sys
import tempfile


def load():
    try:
        return importlib.import_module("harper_le")
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for profile in ("release", "debug"):
        lib = root / "target" / profile / "libharper_le.so"
        if lib.exists():
            tmp = tempfile.mkdtemp()
            shutil.copy(lib, pathlib.Path(tmp) / "harper_le.so")
            sys.path.insert(0, tmp)
            return importlib.import_module("harper_le")
    sys.exit("harper_le not found; build it with cargo build -p harper-py --features extension-module")


def main():
    h = load()

    amo = h.Coupling(0.0, 0.5, 0.0)
    assert amo.region() == "I"
    assert abs(amo.thouless_le() - math.log(2)) < 1e-12

    golden = h.Frequency("golden")
    assert not golden.is_rational
    assert (233, 377) in golden.convergents()
    assert h.Frequency("6/10").period == 5

    spec = h.spectrum(amo, golden, size=300, thetas=8)
    energies = spec.sample_energies(3)
    assert len(energies) == 3 and spec.measure() > 0
    r = h.le(amo, "golden", energies[1], n=5000)
    assert abs(r["estimate"] - math.log(2)) < 0.03, r

    lam = h.Coupling.parse("0.25,0.25,0.25")
    assert lam.criticality() == "supercritical"
    assert str(lam.duality()) == "1,4,1"

    # strip average of 2 cos(2 pi x): kink at 0, slopes -1 and +1
    prof = h.i_eps_profile([(1, 1.0, 0.0), (-1, 1.0, 0.0)])
    assert [s[2] for s in prof["segments"]] == [-1, 1]
    assert abs(h.i_eps([(1, 1.0, 0.0), (-1, 1.0, 0.0)], 0.3) - 2 * math.pi * 0.3) < 1e-9

    exact = h.le_rational(h.Coupling(0.3, 0.8, 0.1), "2/5", 0.3, quad_points=4000)
    assert exact["error_estimate"] < 1e-8

    sweep = h.epsilon_sweep_harper(lam, golden, energies[1], eps_min=-0.5, eps_max=0.5, steps=11, n=2000)
    assert sweep["convex"] and len(sweep["le"]) == 11

    for bad in (lambda: h.Coupling(-1.0, 1.0, 1.0), lambda: h.Frequency("pi")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")
    try:
        h.le_rational(amo, golden, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("irrational frequency accepted")

    print("harper_le smoke test passed")


if __name__ == "__main__":
    main()
