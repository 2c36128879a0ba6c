"""Smoke test for the ispforge extension module.

Build and install first, for example `maturin develop -m crates/py/Cargo.toml`,
then run `python crates/py/python/smoke_test.py`.
"""

import math
import tempfile

import ispforge


def main():
    cfg = ispforge.PhysicsConfig(grid_n=16)
    assert cfg.grid_n == 16 and cfg.n_tx == 36
    assert math.isclose(cfg.doi_side, 5.6 * cfg.wavelength)
    assert ispforge.PhysicsConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()

    sim = ispforge.Simulator(cfg)
    ds = sim.generate("digit", 8, seed=4, snr_db=10.0)
    assert len(ds) == 8 and ds.ids[0] == "s000000"
    s = ds[0]
    assert s.q_bp > 0 and s.alpha > 0 and s.snr_db == 10.0
    re, im = s.bp
    assert len(re) == 16 and len(im[0]) == 16
    assert all(v >= 0 for row in s.bp_scored for v in row)
    assert math.isclose(ispforge.quality_factor(s.bp_scored, s.truth), s.q_bp, rel_tol=1e-12)

    # Metrics on plain lists.
    zero = [[0.0] * 4 for _ in range(4)]
    two = [[2.0] * 4 for _ in range(4)]
    assert ispforge.rmse(two, zero) == 2.0
    assert abs(ispforge.ssim(two, two) - 1.0) < 1e-12
    assert ispforge.tv(two) < 1e-7
    assert ispforge.quality_factor(two, two) == math.inf

    # A user-supplied disk.
    disk = [[0.5 if (i - 7.5) ** 2 + (j - 7.5) ** 2 < 16 else 0.0 for j in range(16)] for i in range(16)]
    one = sim.simulate(disk, id="disk", eps_r=[1.5])
    assert one.id == "disk" and one.generator == "external"

    curated = ds.curate(4, mode="qbp", seed=1)
    assert sorted(s.category for s in curated.samples) == ["fair", "good", "poor", "poor"]

    with tempfile.TemporaryDirectory() as tmp:
        ds.write(tmp)
        back = ispforge.read_container(tmp)
        assert back.ids == ds.ids
        assert [s.q_bp for s in back.samples] == [s.q_bp for s in ds.samples]

    try:
        ispforge.read_container("/nonexistent/container")
    except ispforge.IspforgeError as e:
        assert e.args[1] == 9
    else:
        raise AssertionError("missing container should raise")

    try:
        ispforge.PhysicsConfig(grid_n=1)
    except ispforge.IspforgeError as e:
        assert e.args[1] == 2
    else:
        raise AssertionError("invalid config should raise")

    print("ispforge smoke test: ok", ispforge.FORMAT_VERSION)


if __name__ == "__main__":
    main()
