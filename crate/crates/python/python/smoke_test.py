"""Smoke test for the emnlms extension module.

Build and install first, e.g. ``maturin build --release`` followed by
``pip install`` of the produced wheel, then run ``python smoke_test.py``.
"""

import math

import emnlms


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    f = emnlms.EmNlms(2)
    e, lam, alpha = f.step([1.0, 1.0], 1.0)
    assert e == 1.0
    assert close(lam, 0.39215686274509803)
    assert close(alpha, 2 * lam)
    assert close(f.c_v, 0.2896578239138793)
    assert close(f.c_w, 0.17535563244905805)

    assert close(emnlms.lambda_em(0.1, 0.1, 0.1, 100.0), 0.2 / 20.11)
    assert emnlms.error_signal([1.0, 2.0], [0.5, 0.25], 2.0) == 1.0
    assert emnlms.system_distance_db([0.0] * 3, [1.0, 0.5, 0.2]) == 0.0

    try:
        emnlms.error_signal([1.0, 2.0, 3.0], [1.0], 0.0)
    except emnlms.EmnlmsError as err:
        assert isinstance(err, ValueError)
    else:
        raise AssertionError("length mismatch was accepted")

    taps = 32
    h = emnlms.synth_rir(taps=taps, t60=0.01, seed=4, pre_delay=5)
    assert all(v == 0.0 for v in h[:5])
    assert close(math.sqrt(sum(v * v for v in h)), 1.0, 1e-12)

    x = [0.2 * v for v in emnlms.gen_white_noise(4000, seed=2)]
    d, _ = emnlms.simulate_microphone(x, h, snr_db=30.0, seed=3)
    filters = {
        "em_nlms": emnlms.EmNlms(taps),
        "adapt_nlms": emnlms.AdaptNlms(taps),
        "conv_nlms": emnlms.ConvNlms(taps),
    }
    window = [0.0] * taps
    for n, (xn, dn) in enumerate(zip(x, d)):
        window = [xn] + window[:-1]
        for name, flt in filters.items():
            if name == "adapt_nlms" and n < 64:
                flt.warm_start_step(window, dn, 0.5)
            else:
                flt.step(window, dn)
    for name, flt in filters.items():
        db = emnlms.system_distance_db(flt.coefficients, h)
        print(f"{name:<11} {db:8.2f} dB")
        assert db < -10.0, name

    config = (
        "[scenario]\nexcitation_gain = 0.2\nduration_s = 0.25\n"
        "[rir]\ntaps = 64\nt60 = 0.02\n[em_nlms]\n[conv_nlms]\n"
    )
    result = emnlms.run_scenario(config, from_text=True)
    assert sorted(result) == ["conv_nlms", "em_nlms"]
    assert len(result["em_nlms"]["alpha"]) == 4000
    print("smoke test passed")


if __name__ == "__main__":
    main()
