import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realmask.masker import masker_matrix
from realmask.qcore import StateVector, random_unitary
from realmask.walk import (
    COIN_C2,
    COIN_X,
    TRANSLATE,
    CoinLayer,
    ExtractionError,
    WalkSchedule,
    WalkState,
    apply_coin_layer,
    encode_input,
    extract_two_qubit,
    load_schedule,
    masking_schedule,
    run_masking_walk,
    run_schedule,
    save_schedule,
    schedule_from_dict,
    schedule_to_dict,
    translate,
)

SQRT2 = np.sqrt(2)


def amp(state: WalkState, x: int, c: int) -> complex:
    return state.amplitude(x, c)


class TestTranslate:
    def test_coin_zero_moves_left(self):
        out = translate(WalkState({(0, 0): 1.0}))
        assert amp(out, -1, 0) == 1.0

    def test_coin_one_moves_right(self):
        out = translate(WalkState({(0, 1): 1.0}))
        assert amp(out, 1, 1) == 1.0

    def test_superposition_termwise(self):
        out = translate(WalkState({(2, 0): 1 / SQRT2, (2, 1): 1 / SQRT2}))
        assert amp(out, 1, 0) == pytest.approx(1 / SQRT2)
        assert amp(out, 3, 1) == pytest.approx(1 / SQRT2)

    @settings(max_examples=50, deadline=None)
    @given(st.dictionaries(
        st.tuples(st.integers(-4, 4), st.integers(0, 1)),
        st.complex_numbers(min_magnitude=0.01, max_magnitude=1.0, allow_infinity=False, allow_nan=False),
        min_size=1, max_size=6,
    ))
    def test_norm_and_position_shift(self, raw):
        norm = np.sqrt(sum(abs(a) ** 2 for a in raw.values()))
        state = WalkState({k: v / norm for k, v in raw.items()})
        out = translate(state)
        assert out.norm() == pytest.approx(1.0, abs=1e-12)
        for (x, c), a in state.amplitudes.items():
            assert amp(out, x - 1 if c == 0 else x + 1, c) == a


class TestCoinLayer:
    def test_x_at_position(self):
        layer = CoinLayer({3: COIN_X})
        out = apply_coin_layer(WalkState({(3, 1): 1.0}), layer)
        assert amp(out, 3, 0) == 1.0

    def test_c2_column(self):
        layer = CoinLayer({-2: COIN_C2})
        out = apply_coin_layer(WalkState({(-2, 1): 1.0}), layer)
        assert amp(out, -2, 0) == pytest.approx(1j / SQRT2)
        assert amp(out, -2, 1) == pytest.approx(1j / SQRT2)

    def test_identity_layer_is_noop(self):
        state = WalkState({(0, 0): 1 / SQRT2, (2, 1): 1j / SQRT2})
        out = apply_coin_layer(state, CoinLayer({}))
        assert out.amplitudes == state.amplitudes

    def test_rejects_non_unitary_coin(self):
        with pytest.raises(ValueError):
            CoinLayer({0: np.array([[1, 1], [0, 1]], dtype=complex)})


class TestEncodeExtract:
    def test_basis_encodings(self):
        assert amp(encode_input([1, 0, 0, 0]), -3, 1) == 1.0
        assert amp(encode_input([0, 0, 1, 0]), 1, 1) == 1.0

    def test_uniform_encoding(self):
        state = encode_input(np.ones(4) / 2)
        for x in (-3, -1, 1, 3):
            assert amp(state, x, 1) == pytest.approx(0.5)
            assert amp(state, x, 0) == 0

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            encode_input([1, 1, 0, 0])

    def test_extract_identification(self):
        assert np.allclose(extract_two_qubit(WalkState({(1, 0): 1.0})).amplitudes, [1, 0, 0, 0])
        assert np.allclose(extract_two_qubit(WalkState({(-1, 1): 1.0})).amplitudes, [0, 0, 0, 1])

    def test_extract_bell(self):
        out = extract_two_qubit(WalkState({(1, 0): 1 / SQRT2, (-1, 1): 1 / SQRT2}))
        assert np.allclose(out.amplitudes, np.array([1, 0, 0, 1]) / SQRT2)

    def test_extract_rejects_stray_support(self):
        with pytest.raises(ExtractionError):
            extract_two_qubit(WalkState({(1, 0): np.sqrt(0.5), (3, 0): np.sqrt(0.5)}))


class TestMaskingSchedule:
    def test_intermediate_after_two_steps(self):
        # First four layers are the two coined steps.
        partial = WalkSchedule("half", masking_schedule().layers[:4])
        out = run_schedule(encode_input([1, 0, 0, 0]), partial)
        assert amp(out, -3, 0) == pytest.approx(1j / SQRT2, abs=1e-15)
        assert amp(out, -1, 1) == pytest.approx(1j / SQRT2, abs=1e-15)

    def test_intermediate_coefficients_random_real(self, rng):
        partial = WalkSchedule("half", masking_schedule().layers[:4])
        for _ in range(100):
            a = rng.normal(size=4)
            a /= np.linalg.norm(a)
            out = run_schedule(encode_input(a), partial)
            assert amp(out, -3, 0) == pytest.approx((1j * a[0] + a[1]) / SQRT2, abs=1e-12)
            assert amp(out, -1, 1) == pytest.approx((1j * a[0] - a[1]) / SQRT2, abs=1e-12)
            assert amp(out, 1, 0) == pytest.approx((a[2] + 1j * a[3]) / SQRT2, abs=1e-12)
            assert amp(out, 3, 1) == pytest.approx((a[2] - 1j * a[3]) / SQRT2, abs=1e-12)

    def test_final_state_for_basis_input(self):
        out = run_schedule(encode_input([1, 0, 0, 0]), masking_schedule())
        assert amp(out, 1, 0) == pytest.approx(-1j / SQRT2, abs=1e-15)
        assert amp(out, -1, 1) == pytest.approx(-1j / SQRT2, abs=1e-15)

    def test_final_amplitudes_uniform_input(self):
        out = run_schedule(encode_input(np.ones(4) / 2), masking_schedule())
        r8 = 2 * SQRT2
        assert amp(out, 1, 0) == pytest.approx((1 - 1j) / r8, abs=1e-15)
        assert amp(out, -1, 1) == pytest.approx(-(1 + 1j) / r8, abs=1e-15)
        assert amp(out, 1, 1) == pytest.approx((1 - 1j) / r8, abs=1e-15)
        assert amp(out, -1, 0) == pytest.approx((1 + 1j) / r8, abs=1e-15)

    def test_positions_stay_in_artifact_window(self, rng):
        schedule = masking_schedule()
        for _ in range(20):
            a = rng.normal(size=4)
            a /= np.linalg.norm(a)
            state = encode_input(a)
            for layer in schedule.layers:
                state = translate(state) if layer is TRANSLATE else apply_coin_layer(state, layer)
                assert all(-5 <= x <= 5 for x in state.positions())

    def test_exact_masker_equality_including_phase(self, rng):
        m = masker_matrix().matrix
        for _ in range(100):
            a = rng.normal(size=4)
            a /= np.linalg.norm(a)
            got = run_masking_walk(a)
            assert np.abs(got.amplitudes - m @ a).max() < 1e-12

    def test_equivalence_for_complex_inputs(self, rng):
        m = masker_matrix().matrix
        for _ in range(100):
            a = rng.normal(size=4) + 1j * rng.normal(size=4)
            a /= np.linalg.norm(a)
            got = run_masking_walk(a)
            assert StateVector(m @ a).fidelity(got) > 1 - 1e-12


class TestRunSchedule:
    def test_empty_schedule(self):
        state = encode_input([0, 1, 0, 0])
        out = run_schedule(state, WalkSchedule("empty", ()))
        assert out.amplitudes == state.amplitudes

    def test_single_translate(self):
        out = run_schedule(WalkState({(0, 1): 1.0}), WalkSchedule("t", (TRANSLATE,)))
        assert amp(out, 1, 1) == 1.0

    def test_norm_preserved_on_random_schedules(self, rng):
        for _ in range(1000):
            layers = []
            for _ in range(rng.integers(1, 9)):
                if rng.random() < 0.5:
                    layers.append(TRANSLATE)
                else:
                    positions = rng.choice(np.arange(-4, 5), size=rng.integers(1, 4), replace=False)
                    layers.append(CoinLayer({int(x): random_unitary(2, rng) for x in positions}))
            schedule = WalkSchedule("rand", tuple(layers))
            start = WalkState({(int(rng.integers(-4, 5)), int(rng.integers(0, 2))): 1.0})
            out = run_schedule(start, schedule)
            assert out.norm() == pytest.approx(1.0, abs=1e-12)


class TestScheduleFile:
    def test_round_trip_is_bit_exact(self, rng, tmp_path):
        layers = (
            CoinLayer({-2: random_unitary(2, rng), 3: random_unitary(2, rng)}),
            TRANSLATE,
            CoinLayer({0: random_unitary(2, rng)}),
        )
        schedule = WalkSchedule("round-trip", layers)
        path = tmp_path / "schedule.json"
        save_schedule(schedule, path)
        loaded = load_schedule(path)
        assert loaded.name == schedule.name
        assert len(loaded.layers) == len(schedule.layers)
        for got, want in zip(loaded.layers, schedule.layers):
            if want is TRANSLATE:
                assert got == TRANSLATE
            else:
                assert got.coins.keys() == want.coins.keys()
                for x in want.coins:
                    assert np.array_equal(got.coins[x], want.coins[x])

    def test_default_schedule_round_trip(self, tmp_path):
        path = tmp_path / "mask.json"
        save_schedule(masking_schedule(), path)
        loaded = load_schedule(path)
        a = np.array([0.3, -0.5, 0.4, 0.7])
        a /= np.linalg.norm(a)
        out = run_schedule(encode_input(a), loaded)
        want = run_schedule(encode_input(a), masking_schedule())
        assert out.amplitudes == want.amplitudes

    def test_steps_counts_translations(self):
        assert masking_schedule().steps == 4

    def test_rejects_malformed_documents(self):
        with pytest.raises(ValueError):
            schedule_from_dict({"name": "x", "layers": [{"type": "spin"}]})
        with pytest.raises(ValueError):
            schedule_from_dict({"no_layers": True})
        bad_matrix = {"name": "x", "layers": [{"type": "coins", "coins": [{"position": 0, "matrix": [1, 0]}]}]}
        with pytest.raises(ValueError):
            schedule_from_dict(bad_matrix)

    def test_document_matches_schema_shape(self):
        doc = schedule_to_dict(masking_schedule())
        text = json.dumps(doc)
        again = json.loads(text)
        assert again["name"] == "mask-real-ququart"
        kinds = [layer["type"] for layer in again["layers"]]
        assert kinds == ["coins", "translate", "coins", "translate", "coins", "translate", "translate", "coins"]
        for layer in again["layers"]:
            if layer["type"] == "coins":
                for coin in layer["coins"]:
                    assert set(coin) == {"position", "matrix"}
                    assert len(coin["matrix"]) == 8
