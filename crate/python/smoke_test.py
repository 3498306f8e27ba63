"""Smoke test for the pyartinv extension.

Build and install first:
    pip install --no-build-isolation ./crates/python
then run:
    python python/smoke_test.py
"""

import os
import tempfile

import pyartinv


def close(a, b, rel):
    return abs(a - b) <= rel * b


def main():
    for got, want in zip(pyartinv.uniform_tube_formants(17.5), (500.0, 1500.0, 2500.0)):
        assert close(got, want, 0.02), (got, want)

    synth = pyartinv.Synthesizer()
    neutral = [0.0] * 7
    f = synth.formants(neutral)
    assert f[0] < f[1] < f[2]
    assert len(synth.area_function(neutral)) == 32
    assert not synth.is_valid([0, 0, 3, 0, 0, 0, 0])
    overall, components = synth.score(neutral, "a")
    assert 0.0 <= overall <= 1.0 and len(components) == 4

    cb = pyartinv.Codebook.build(synth, max_depth=1)
    points, cubes, vertices, kept, _ = cb.stats()
    assert cubes == len(cb) > 0 and vertices == 128 * cubes and 0.0 <= kept <= 1.0
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "coarse.aacb")
        cb.save(path)
        assert pyartinv.Codebook.load(path).stats() == cb.stats()

    pm = pyartinv.PartitionModel.calibrate(synth, samples=20, seed=1)
    assert pm.classify(pm.prototype("i")) == "i"
    again = pyartinv.PartitionModel.from_csv(pm.to_csv())
    assert again.to_csv() == pm.to_csv()

    center, _ = cb.cube(0)
    target = synth.formants(center)
    track = [(10.0 * i, *target) for i in range(4)]
    traj = pyartinv.invert(cb, pm, track, phon_weight=0.0)
    assert len(traj) == 4
    assert all(row[1] == traj[0][1] for row in traj)
    assert all(row[3] <= 0.3 for row in traj)

    try:
        pyartinv.invert(cb, pm, [(0.0, 150.0, 5000.0, 5900.0)])
    except RuntimeError as e:
        assert "frame 0" in str(e)
    else:
        raise AssertionError("unreachable frame accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
