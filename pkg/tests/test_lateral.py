import numpy as np
import pytest

from parkloc.errors import DegenerateParameterError, ValidationError
from parkloc.lateral import (LateralModelKind, LateralModelParams,
                             beta_delta_model, k_from_x, select_parameter,
                             vy_omega_model, x_from_k)


class TestVyOmegaModel:
    def test_reverse_parking_point(self):
        # zero-slip point 21 cm behind the rear axle
        assert vy_omega_model(0.3, -0.21) == pytest.approx(0.063, abs=1e-15)

    def test_zero_offset_degenerates_to_zero_slip(self):
        assert vy_omega_model(0.4, 0.0) == 0.0

    def test_odd_in_yaw_rate(self):
        assert vy_omega_model(-0.3, -0.21) == pytest.approx(-0.063, abs=1e-15)


class TestBetaDeltaModel:
    def test_linear_gain(self):
        assert beta_delta_model(0.4, 0.054) == pytest.approx(-0.0216, abs=1e-15)

    def test_straight_driving(self):
        assert beta_delta_model(0.0, 0.3) == 0.0

    def test_odd(self):
        assert beta_delta_model(-0.4, 0.054) == pytest.approx(0.0216, abs=1e-15)


class TestParameterConversions:
    def test_rear_axle_zero_point(self):
        assert k_from_x(0.0, 2.9) == 0.0

    def test_known_pairing(self):
        # 21 cm offset and k = 0.054 pair up at a 4.099 m wheelbase
        assert k_from_x(0.21, 4.099) == pytest.approx(0.0540, abs=5e-5)

    def test_round_trip(self):
        assert x_from_k(k_from_x(0.15, 3.0), 3.0) == pytest.approx(0.15, abs=1e-12)

    def test_random_round_trips(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            wheelbase = float(rng.uniform(2.0, 4.0))
            x = float(rng.uniform(-0.9, 0.9))
            assert x_from_k(k_from_x(x, wheelbase), wheelbase) == pytest.approx(x, abs=1e-12)

    def test_pole_at_wheelbase(self):
        with pytest.raises(DegenerateParameterError):
            k_from_x(2.9, 2.9)

    def test_pole_at_minus_one(self):
        with pytest.raises(DegenerateParameterError):
            x_from_k(-1.0, 2.9)

    def test_bad_wheelbase(self):
        with pytest.raises(ValidationError):
            k_from_x(0.1, 0.0)


class TestSelectParameter:
    params = LateralModelParams(x_rho_forward=0.0, x_rho_reverse=-0.21, wheelbase=2.9)

    def test_forward(self):
        assert select_parameter(self.params, 1) == 0.0

    def test_reverse(self):
        assert select_parameter(self.params, -1) == -0.21

    def test_symmetric_vehicle(self):
        sym = LateralModelParams(x_rho_forward=0.05, x_rho_reverse=0.05, wheelbase=2.9)
        assert select_parameter(sym, 1) == select_parameter(sym, -1) == 0.05

    def test_neutral_rejected(self):
        with pytest.raises(ValidationError):
            select_parameter(self.params, 0)


class TestLateralModelParams:
    def test_bound_enforced(self):
        with pytest.raises(ValidationError):
            LateralModelParams(x_rho_forward=3.0, x_rho_reverse=0.0, wheelbase=2.9)

    def test_k_conversion_consistency(self):
        params = LateralModelParams(x_rho_forward=0.1, x_rho_reverse=-0.21, wheelbase=2.9)
        assert x_from_k(params.k_rho(1), 2.9) == pytest.approx(0.1, abs=1e-12)
        assert x_from_k(params.k_rho(-1), 2.9) == pytest.approx(-0.21, abs=1e-12)

    def test_from_k(self):
        params = LateralModelParams.from_k(0.054, -0.03, wheelbase=2.9)
        assert params.k_rho(1) == pytest.approx(0.054, abs=1e-12)
        assert params.k_rho(-1) == pytest.approx(-0.03, abs=1e-12)


class TestModelProperties:
    def test_linearity_and_oddness(self):
        rng = np.random.default_rng(5)
        for _ in range(500):
            omega, x_rho, scale = rng.normal(size=3)
            assert vy_omega_model(-omega, x_rho) == -vy_omega_model(omega, x_rho)
            assert vy_omega_model(scale * omega, x_rho) == pytest.approx(
                scale * vy_omega_model(omega, x_rho), rel=1e-12, abs=1e-15)
            tan_d, k = rng.normal(size=2)
            assert beta_delta_model(-tan_d, k) == -beta_delta_model(tan_d, k)

    def test_zero_slip_is_bitwise_special_case(self):
        rng = np.random.default_rng(6)
        for omega in rng.normal(size=200):
            assert vy_omega_model(omega, 0.0) == 0.0

    def test_models_agree_through_conversion(self):
        # on a steady state with tan(delta) = (L - x) * omega / v_x the two
        # models predict the same rear lateral velocity
        rng = np.random.default_rng(8)
        for _ in range(300):
            wheelbase = float(rng.uniform(2.2, 3.6))
            x = float(rng.uniform(-0.5, 0.5))
            omega = float(rng.uniform(-0.6, 0.6))
            v_x = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.3, 2.0))
            tan_d = (wheelbase - x) * omega / v_x
            lhs = beta_delta_model(tan_d, k_from_x(x, wheelbase)) * v_x
            rhs = vy_omega_model(omega, x)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-15)


def test_kind_enum_round_trip():
    for kind in LateralModelKind:
        assert LateralModelKind(kind.value) is kind
