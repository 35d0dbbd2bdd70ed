"""Quick check of the cfsim extension module.

Build and install first:  pip install maturin && maturin develop --release -m crates/py/Cargo.toml
"""

import math

import cfsim


def main():
    s = cfsim.Scenario()
    assert s.num_bs == 6 and s.num_users == 20
    s.num_users = 6
    s.num_slots = 20
    s.num_runs = 2
    back = cfsim.Scenario.from_toml(s.to_toml())
    assert back.num_users == 6 and back.num_slots == 20

    mcs = cfsim.McsTable()
    assert len(mcs.entries()) == 15
    assert mcs.select_mcs(-20.0) is None
    assert mcs.select_mcs(40.0) == 15
    assert mcs.transport_outcome(15, 19.7) == 0.0

    one = cfsim.run(s, mode="uc", seed=3)
    assert len(one["user_throughput_bps"]) == 6
    assert one["transmissions"] > 0

    pooled = cfsim.campaign(s, seed=3)
    nc, uc = pooled["network_centric"], pooled["user_centric"]
    assert len(nc) == len(uc) == 12
    report = cfsim.compare(nc, uc)
    print(
        "q10 ratio %.2f, q50 ratio %.2f, q90 ratio %.2f, spread ratio %.2f"
        % (report["q10_ratio"], report["q50_ratio"], report["q90_ratio"], report["spread_ratio"])
    )

    assert cfsim.quantile(list(range(1, 101)), 0.5) == 50.5

    rows = cfsim.coverage(s, spacing=25.0)
    assert rows and all(uc_dbm >= nc_dbm - 1e-9 for _, _, nc_dbm, uc_dbm in rows)
    assert all(math.isfinite(r[3]) for r in rows)

    try:
        s.serving_mode = "sideways"
    except ValueError:
        pass
    else:
        raise AssertionError("bad mode accepted")

    print("smoke test passed: %d coverage points, %d pooled samples per mode" % (len(rows), len(nc)))


if __name__ == "__main__":
    main()
