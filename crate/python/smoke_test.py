"""Smoke test for the `msle` extension module.

Build and install first:

    pip install --no-build-isolation ./crates/python
"""

import cmath
import math
import tempfile

import msle

paths = msle.simulate_dyson(kappa=4.0, init=[1.0, -1.0], seed=7)
assert len(paths) == 2 and len(paths.times) == 1001
assert paths.min_gap() > 0.0
assert all(x > y for x, y in zip(paths.particle(0), paths.particle(1)))

bessel = msle.simulate_bessel(a=1.0, d=msle.bessel_dimension(4.0), seed=3)
assert min(bessel) > 0.0

still = msle.DrivingForces.constant([0.0, 0.0])
times, samples, swallowed = msle.forward_evolve(3j, still)
assert swallowed is None
assert abs(samples[-1] - cmath.sqrt(-9 + 4)) < 1e-6
assert abs(msle.forward_evolve(1j, still)[2] - 0.25) < 1e-2
assert abs(msle.backward_evolve(1j, still) - 1j * math.sqrt(5)) < 1e-6

forces = msle.DrivingForces.from_dyson(paths)
assert msle.roundtrip_check(2j, forces) < 1e-4
times, curves = msle.trace_extract(forces, samples=50)
assert len(curves) == 2 and all(z.imag >= 0 for c in curves for z in c)
assert msle.hausdorff_sets(curves[0], curves[0]) == 0.0
assert msle.constant_ctg(0.5, 1.0, 1.0, 2) == 4.0

with tempfile.TemporaryDirectory() as out:
    ok, claims, artifacts = msle.run_experiment(
        "kind = forward\nforces = constant\na = 0,0\n", {"out": out}
    )
    assert ok and claims == [("forward map matches the slit map", True)]
    assert "forward.json" in artifacts

try:
    msle.run_experiment("kind = perturb-init\nkappa = 5\n")
except ValueError as e:
    assert "kappa must lie in (0,4]" in str(e)
else:
    raise AssertionError("kappa = 5 accepted")

ok, line = msle.verify_criterion(8)
assert ok, line
print(line)
print("smoke test passed")
