"""Payload transforms and their closed-loop effects.

Read-side payloads steer the disciplined clock opposite to the injected
value (the servo chases the shifted reading), so closed-loop assertions
use induced = -injected for read hooks. Actuator-side biases are absorbed
by the servo integral after a transient; the sustained-drift behavior
lives in the read-ramp variant.
"""

import math
import statistics

import pytest

from ptpsim import rng
from ptpsim.attacks import (
    ConstantOffsetPayload,
    ConstantVariant,
    JitterDistribution,
    ProgressiveSkewPayload,
    RandomJitterPayload,
    SkewVariant,
)
from ptpsim.clocks import (
    TimexMode,
    TimexRequest,
    decode_step,
    encode_step,
    ppb_to_scaled_ppm,
    scaled_ppm_to_ppb,
)
from ptpsim.runner import simulate
from ptpsim.scenarios import (
    ClockSpec,
    ConstantOffsetSpec,
    ProgressiveSkewSpec,
    RandomJitterSpec,
    ScenarioConfig,
    get_builtin,
)
from ptpsim.telemetry import drift_slope, jitter_std, residual_offset

NS = 1_000_000_000


class TestConstantOffsetTransforms:
    def test_zero_delta_is_identity(self):
        payload = ConstantOffsetPayload(delta_ns=0)
        assert payload.on_read(NS, 0) == NS

    def test_read_shift_adds_delta(self):
        payload = ConstantOffsetPayload(delta_ns=3000)
        assert payload.on_read(NS, 0) == 1_000_003_000

    def test_read_shift_leaves_adjustments_alone(self):
        payload = ConstantOffsetPayload(delta_ns=3000)
        req = encode_step(-50_000)
        assert payload.on_adj(req, 0) == req

    def test_step_tamper_shifts_step_total(self):
        payload = ConstantOffsetPayload(delta_ns=3000, variant=ConstantVariant.STEP_TAMPER)
        out = payload.on_adj(encode_step(-50_000), 0)
        assert decode_step(out) == -47_000
        assert out.is_normalized()

    def test_step_tamper_ignores_frequency_requests(self):
        payload = ConstantOffsetPayload(delta_ns=3000, variant=ConstantVariant.STEP_TAMPER)
        req = TimexRequest(mode=TimexMode.ADJ_FREQUENCY, freq_scaled_ppm=5)
        assert payload.on_adj(req, 0) == req


class TestConstantOffsetClosedLoop:
    @pytest.mark.parametrize("delta", [-3000, 3000, -12_000])
    def test_steady_state_holds_negated_delta(self, delta):
        config = get_builtin("constant-3us").model_copy(
            update={
                "payloads": [
                    ConstantOffsetSpec(kind="constant_offset", hook="read_sys", delta_ns=delta)
                ]
            }
        )
        world = simulate(config)
        residual = residual_offset(world.trace, 60)
        assert abs(residual - (-delta)) <= 0.1 * abs(delta)
        # the servo is fooled: its measured offset stays near zero
        measured = [r.measured_offset_ns for r in world.trace.records if r.t_true_s > 60]
        assert statistics.mean(abs(m) for m in measured) < 100

    def test_step_tamper_injects_then_daemon_recorrects(self):
        # tampered INIT step leaves exactly +delta; subsequent exchanges
        # measure the error and slew it away, so the error is transient
        config = ScenarioConfig(
            name="step-tamper",
            duration_s=60,
            seed=5,
            phc=ClockSpec(),
            system=ClockSpec(initial_offset_ns=-50_000),
            payloads=[
                ConstantOffsetSpec(
                    kind="constant_offset",
                    hook="set_offset_sys",
                    delta_ns=3000,
                    variant="step_tamper",
                    activation="immediate",
                )
            ],
        )
        world = simulate(config)
        series = dict(world.trace.actual_series())
        assert series[1] == 3000  # post-step true offset is the injected bias
        assert abs(series[60]) <= 2  # but the loop re-measures and removes it


class TestProgressiveSkewTransforms:
    def test_zero_rate_is_identity(self):
        payload = ProgressiveSkewPayload(rate_ppb=0)
        assert payload.on_read(NS, 0) == NS
        req = TimexRequest(mode=TimexMode.ADJ_FREQUENCY, freq_scaled_ppm=3)
        assert ProgressiveSkewPayload(
            rate_ppb=0, variant=SkewVariant.FREQ_BIAS_ADD
        ).on_adj(req, 0) == TimexRequest(mode=TimexMode.ADJ_FREQUENCY, freq_scaled_ppm=3)

    def test_read_ramp_grows_linearly_from_first_call(self):
        payload = ProgressiveSkewPayload(rate_ppb=50, variant=SkewVariant.READ_RAMP)
        assert payload.on_read(10 * NS, 0) == 10 * NS  # origin call
        assert payload.on_read(11 * NS, 1) == 11 * NS + 50
        assert payload.on_read(110 * NS, 2) == 110 * NS + 5000

    def test_freq_bias_add_shifts_by_rate(self):
        payload = ProgressiveSkewPayload(rate_ppb=50, variant=SkewVariant.FREQ_BIAS_ADD)
        req = TimexRequest(mode=TimexMode.ADJ_FREQUENCY, freq_scaled_ppm=0)
        out = payload.on_adj(req, 0)
        assert scaled_ppm_to_ppb(out.freq_scaled_ppm) == 50

    def test_freq_bias_mult_scales_request(self):
        from fractions import Fraction

        payload = ProgressiveSkewPayload(
            variant=SkewVariant.FREQ_BIAS_MULT, factor=Fraction(11, 10)
        )
        req = TimexRequest(mode=TimexMode.ADJ_FREQUENCY, freq_scaled_ppm=1000)
        assert payload.on_adj(req, 0).freq_scaled_ppm == 1100

    def test_freq_variants_ignore_step_requests(self):
        payload = ProgressiveSkewPayload(rate_ppb=50, variant=SkewVariant.FREQ_BIAS_ADD)
        req = encode_step(-500)
        assert payload.on_adj(req, 0) == req


class TestProgressiveSkewClosedLoop:
    def test_read_ramp_drift_scales_with_rate(self):
        slopes = {}
        for kappa in (10, 100):
            config = get_builtin(f"skew-{kappa}ppb")
            world = simulate(config)
            slopes[kappa] = drift_slope(world.trace, 20)
        assert abs(slopes[10] - 10) <= 1.0
        assert abs(slopes[100] - 100) <= 10.0
        assert abs(slopes[100] / slopes[10] - 10) < 0.1

    def test_freq_bias_add_is_absorbed_by_the_integral(self):
        # actuator-side bias: the servo measures the true clock, so its
        # integral cancels the bias after a bounded transient instead of
        # letting the offset grow
        config = get_builtin("baseline").model_copy(
            update={
                "name": "freq-add",
                "duration_s": 120,
                "payloads": [
                    ProgressiveSkewSpec(
                        kind="progressive_skew",
                        hook="adj_freq_sys",
                        rate_ppb=50,
                        variant="freq_bias_add",
                    )
                ],
            }
        )
        world = simulate(config)
        tail = [x for t, x in world.trace.actual_series() if t > 40]
        assert max(abs(x) for x in tail) <= 5
        # the applied frequency still cancels the intrinsic drift, so the
        # servo must be commanding 50 ppb less than what reaches the clock
        assert abs(world.system.servo_freq_ppb + world.system.intrinsic_freq_error_ppb) <= 2
        commanded = round(world.servo_sys.last_correction_ppb)
        assert abs(commanded - (world.system.servo_freq_ppb - 50)) <= 1


class TestRandomJitterTransforms:
    def test_zero_sigma_is_identity(self):
        payload = RandomJitterPayload(sigma_ns=0, period_n=1)
        assert payload.on_read(NS, 0) == NS

    def test_reproducible_sequence_for_fixed_seed(self):
        def sequence():
            payload = RandomJitterPayload(
                sigma_ns=500, period_n=1, rng=rng.stream(42, "j")
            )
            return [payload.on_read(0, i) for i in range(50)]

        assert sequence() == sequence()

    def test_period_validation(self):
        with pytest.raises(ValueError):
            RandomJitterPayload(sigma_ns=1, period_n=0)

    @pytest.mark.parametrize(
        "distribution", [JitterDistribution.GAUSSIAN, JitterDistribution.UNIFORM]
    )
    def test_empirical_std_within_five_percent(self, distribution):
        payload = RandomJitterPayload(
            sigma_ns=500, period_n=1, distribution=distribution, rng=rng.stream(7, "std")
        )
        samples = [payload.on_read(0, i) for i in range(10_000)]
        assert abs(statistics.mean(samples)) < 20
        assert abs(statistics.pstdev(samples) - 500) <= 25  # 5 % of sigma

    def test_adj_freq_gating_every_nth_call(self):
        payload = RandomJitterPayload(
            sigma_ns=500, period_n=5, rng=rng.stream(9, "gate")
        )
        req = TimexRequest(mode=TimexMode.ADJ_FREQUENCY, freq_scaled_ppm=0)
        perturbed = [
            payload.on_adj(req, i).freq_scaled_ppm != 0 for i in range(25)
        ]
        assert perturbed == [i % 5 == 0 for i in range(25)]
        assert sum(perturbed) == 5


class TestRandomJitterClosedLoop:
    def test_read_noise_disrupts_stability_but_not_accuracy(self):
        jittered = simulate(get_builtin("jitter-500ns"))
        baseline = simulate(get_builtin("baseline"))
        j_std = jitter_std(jittered.trace, 50)
        b_std = jitter_std(baseline.trace, 50)
        assert j_std >= 5 * b_std
        window = [x for t, x in jittered.trace.actual_series() if t > 50]
        bound = 3 * 500 / math.sqrt(len(window))
        assert abs(statistics.mean(window)) <= bound

    def test_servo_overcorrects_then_counter_corrects(self):
        # noise lands on every other read; correction changes keep
        # flipping sign as the servo hunts
        world = simulate(get_builtin("jitter-500ns"))
        corrections = [
            r.correction_freq_ppb for r in world.trace.records if r.t_true_s > 50
        ]
        diffs = [b - a for a, b in zip(corrections, corrections[1:])]
        flips = sum(1 for a, b in zip(diffs, diffs[1:]) if a * b < 0)
        assert flips / (len(diffs) - 1) > 0.5
        assert any(d > 0 for d in diffs) and any(d < 0 for d in diffs)

    def test_adj_freq_noise_raises_jitter_floor(self):
        config = get_builtin("baseline").model_copy(
            update={
                "name": "jitter-adj",
                "payloads": [
                    RandomJitterSpec(
                        kind="random_jitter",
                        hook="adj_freq_sys",
                        sigma_ns=500,
                        period_n=5,
                    )
                ],
            }
        )
        perturbed = simulate(config)
        baseline = simulate(get_builtin("baseline"))
        assert jitter_std(perturbed.trace, 50) > jitter_std(baseline.trace, 50)
