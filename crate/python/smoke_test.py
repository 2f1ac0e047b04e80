"""Smoke test for the `rgbm` extension module.

Build and run from the repository root:

    cargo build --release -p rgbm-py --features extension-module
    cp target/release/librgbm.so python/rgbm.so
    python3 python/smoke_test.py

(`maturin develop -m crates/py/Cargo.toml` works too where maturin exists.)
"""

import math

import rgbm


def main():
    p2 = rgbm.ModelParams.preset(2)
    call = rgbm.OptionSpec("call", 2.0, 10.0)
    at_b = rgbm.rgbm_price(call, p2.b, p2)
    bs = rgbm.baseline_price(call, p2.b, p2)
    verdict = rgbm.check_bound(call, at_b.value, p2.b, p2)
    print(f"call at b: rgbm {at_b.value:.6f}  bs {bs.value:.6f}  bound {verdict['bound_value']}  violated {verdict['violated']}")
    assert verdict["violated"] and not rgbm.check_bound(call, bs.value, p2.b, p2)["violated"]

    p4 = rgbm.ModelParams.preset(4)
    nneg = rgbm.OptionSpec("nneg", 0.9, 20.0)
    price = rgbm.rgbm_price(nneg, p4.s0, p4).value
    b76 = rgbm.baseline_price(nneg, p4.s0, p4).value
    bound = rgbm.check_bound(nneg, price, p4.s0, p4)["bound_value"]
    print(f"nneg 20y: rgbm {price:.6f}  black76 {b76:.6f}  ratio to bound {price / bound:.4f}")
    crossing = rgbm.nneg_crossing_maturity(p4, p4.s0, 0.9, 1.0, 40.0)
    print(f"nneg crossing maturity {crossing:.4f}")
    assert 10.0 < crossing < 10.2

    p1 = rgbm.ModelParams.preset(1)
    path = rgbm.simulate_path(p1, 10.0, 10_000, 0)
    print(f"path: {len(path)} points, {path.reflection_count()} reflections, L_T {path.terminal_l():.4f}")
    assert min(path.s) >= p1.b

    flat = rgbm.ModelParams(p1.mu, p1.sigma, p1.b, 0.0, p1.s0)
    arb = rgbm.run_reflection_arbitrage(flat, 10.0, 10_000, 0)
    assert arb.is_non_decreasing() and arb.value[-1] == rgbm.simulate_path(flat, 10.0, 10_000, 0).terminal_l()

    spec = rgbm.OptionSpec("call", 2.0, 1.0)
    est = rgbm.mc_price(spec, 1.5, p2, 50_000, 11, scheme="exact")
    exact = rgbm.rgbm_price(spec, 1.5, p2).value
    print(f"mc {est.mean:.6f} +- {est.std_error:.6f} vs formula {exact:.6f}")
    assert abs(est.z_score(exact)) < 4

    assert math.isclose(rgbm.norm_cdf(0.0), 0.5)
    try:
        rgbm.OptionSpec("call", 1.0, 1.0, valuation_time=2.0)
    except rgbm.RgbmError as e:
        assert str(e).startswith("invalid_option")
    else:
        raise AssertionError("t > T accepted")
    print("smoke test ok")


if __name__ == "__main__":
    main()
