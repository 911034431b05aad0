import math

import numpy as np
import pytest

from thermolyap import (
    ConfigError,
    Grid1D,
    SimulationAbortedError,
    HomogeneousReference,
    InitSpec,
    SimConfig,
    StateFields,
    advance,
    calibrate,
    entropy_production,
    ideal_gas_eos,
    init_perturbed,
    matched_rest_state,
    net_quantities,
    run_simulation,
    v_meq,
)
from thermolyap.fields import integrate
from thermolyap.simulator import diffusive_time_scale, stable_dt, \
    write_timeseries


def make_config(n=64, mu=1e-2, kappa=1e-2, t_end=0.5, output_every=4,
                a_rho=0.01, a_v=0.01, a_theta=0.01, k=1, cfl=0.9):
    eos = ideal_gas_eos(cv_ref=1.0, gamma=1.4, theta_ref=1.0, rho_ref=1.0)
    return SimConfig(
        grid=Grid1D(1.0, n), eos=eos,
        ref=HomogeneousReference(1.0, 1.0),
        mu=mu, kappa=kappa, cfl=cfl, t_end=t_end, output_every=output_every,
        init=InitSpec(k=k, a_rho=a_rho, a_v=a_v, a_theta=a_theta))


class TestConfig:
    def test_requires_dissipation(self):
        with pytest.raises(ConfigError):
            make_config(mu=0.0, kappa=0.0)

    def test_rejects_bad_cfl(self):
        with pytest.raises(ConfigError):
            make_config(cfl=1.5)

    def test_diffusive_time_scale_hand_value(self):
        # max(rho cv/kappa, rho/nu_eff) = 100 -> 5*100/pi^2
        config = make_config()
        scale = diffusive_time_scale(config, config.ref)
        assert scale == pytest.approx(500.0 / math.pi ** 2, rel=1e-12)


class TestInitPerturbed:
    def test_zero_amplitudes_give_rest_state(self):
        config = make_config(a_rho=0.0, a_v=0.0, a_theta=0.0)
        w = init_perturbed(config)
        np.testing.assert_array_equal(w.rho, np.ones(64))
        np.testing.assert_array_equal(w.v, np.zeros(64))
        np.testing.assert_array_equal(w.theta, np.ones(64))

    def test_mass_neutral(self):
        config = make_config(n=200, a_rho=0.01, a_v=0.0, a_theta=0.0)
        w = init_perturbed(config)
        mass = integrate(config.grid, w.rho)
        assert abs(mass - 1.0) <= 1e-14

    def test_large_theta_amplitude_accepted(self):
        # min over cell centers approaches 1 - a_theta = 0.5 from above
        config = make_config(a_theta=0.5)
        w = init_perturbed(config)
        assert 0.5 < np.min(w.theta) < 0.51

    def test_non_positive_rejected(self):
        with pytest.raises(ConfigError):
            init_perturbed(make_config(a_rho=1.5))


class TestEntropyProduction:
    def test_uniform_state_zero(self):
        config = make_config()
        w = StateFields.uniform(64, 1.0, 0.3, 2.0)
        np.testing.assert_array_equal(
            entropy_production(w, config.grid, config), np.zeros(64))

    def test_linear_velocity_hand_value(self):
        # nu_eff = 4*0.75/3 = 1, theta = 1, dv/dx = 1 -> xi = 1 everywhere
        config = make_config(mu=0.75, kappa=0.0)
        grid = config.grid
        w = StateFields(np.ones(64), grid.centers().copy(), np.ones(64))
        xi = entropy_production(w, grid, config)
        np.testing.assert_allclose(xi, np.ones(64), rtol=1e-12)

    def test_nonnegative(self, rng):
        config = make_config()
        w = StateFields(np.exp(rng.uniform(-1, 1, 64)),
                        rng.uniform(-1, 1, 64),
                        np.exp(rng.uniform(-1, 1, 64)))
        assert np.min(entropy_production(w, config.grid, config)) >= 0.0


class TestAdvance:
    def test_rest_state_fixed_point(self):
        config = make_config()
        rest = config.ref.fields(64)
        dt = stable_dt(config, rest)
        out = advance(rest, config.grid, config, dt)
        np.testing.assert_array_equal(out.rho, rest.rho)
        np.testing.assert_array_equal(out.v, rest.v)
        np.testing.assert_array_equal(out.theta, rest.theta)

    def test_conservation_over_1000_steps(self):
        config = make_config(n=50)
        w = init_perturbed(config)
        dt = stable_dt(config, w)
        net0 = net_quantities(config.grid, w, config.eos)
        for _ in range(1000):
            w = advance(w, config.grid, config, dt)
        net1 = net_quantities(config.grid, w, config.eos)
        assert abs(net1.mass - net0.mass) <= 1e-12 * abs(net0.mass)
        assert abs(net1.total_energy - net0.total_energy) <= \
            1e-8 * max(abs(net0.total_energy), 1e-3)


class TestRunSimulation:
    def test_zero_perturbation_keeps_functional_zero(self):
        config = make_config(a_rho=0.0, a_v=0.0, a_theta=0.0, t_end=0.05)
        result = run_simulation(config)
        assert all(r.v_meq == 0.0 for r in result.records)
        assert all(r.decay_residual == 0.0 for r in result.records)

    def test_matched_rest_state_conserves_targets(self):
        config = make_config()
        w = init_perturbed(config)
        rest = matched_rest_state(config.eos, config.grid, w)
        net = net_quantities(config.grid, w, config.eos)
        assert rest.rho_hat == pytest.approx(net.mass / config.grid.length,
                                             rel=1e-14)
        e_rest = config.eos.internal_energy(rest.theta_hat, rest.rho_hat)
        assert rest.rho_hat * e_rest * config.grid.length == pytest.approx(
            net.total_energy, rel=1e-12, abs=1e-15)

    def test_decay_run_properties(self):
        config = make_config(n=100, t_end=2.0, output_every=8)
        result = run_simulation(config)
        records = result.records
        assert len(records) > 10
        v0 = records[0].v_meq
        mass0 = records[0].mass
        e0 = records[0].total_energy
        for r in records:
            assert abs(r.mass - mass0) <= 1e-12 * abs(mass0)
            assert abs(r.total_energy - e0) <= 1e-8 * max(abs(e0), 1e-3)
        values = [r.v_meq for r in records]
        assert all(values[i + 1] <= values[i] + 1e-10 * v0
                   for i in range(len(values) - 1))
        entropies = [r.net_entropy for r in records]
        slack = 1e-13 * max(1.0, abs(entropies[0]))
        assert all(entropies[i + 1] >= entropies[i] - slack
                   for i in range(len(entropies) - 1))
        lo, hi = len(records) // 10, len(records) - len(records) // 10
        assert max(r.decay_residual for r in records[lo:hi]) <= 0.05

    def test_functional_plus_entropy_is_conserved(self):
        # V = (energy and mass terms) - theta_hat * S with energy and mass
        # conserved, so V + theta_hat * S must stay constant along records
        config = make_config(n=100, t_end=2.0, output_every=8)
        result = run_simulation(config)
        theta_hat = result.rest.theta_hat
        records = result.records
        c0 = records[0].v_meq + theta_hat * records[0].net_entropy
        drift = max(abs(r.v_meq + theta_hat * r.net_entropy - c0)
                    for r in records)
        assert drift <= 1e-13

    def test_grid_refinement_halves_residual(self):
        def max_mid_residual(n):
            config = make_config(n=n, t_end=1.0, output_every=8)
            records = run_simulation(config).records
            lo, hi = len(records) // 10, len(records) - len(records) // 10
            return max(r.decay_residual for r in records[lo:hi])

        coarse = max_mid_residual(50)
        fine = max_mid_residual(100)
        assert coarse >= 2.0 * fine

    def test_final_functional_matches_public_evaluator(self):
        config = make_config(n=64, t_end=0.5)
        result = run_simulation(config)
        cal = calibrate(config.eos, result.rest.state())
        direct = v_meq(cal, result.rest, config.grid, result.final_state).total
        assert result.records[-1].v_meq == pytest.approx(direct, rel=1e-10)

    def test_explicit_initial_state(self, rng):
        config = make_config(n=50, t_end=0.2)
        w0 = StateFields(1.0 + 0.01 * rng.uniform(-1, 1, 50),
                         0.01 * rng.uniform(-1, 1, 50),
                         1.0 + 0.01 * rng.uniform(-1, 1, 50))
        result = run_simulation(config, w0=w0)
        assert result.records[0].mass == pytest.approx(
            integrate(config.grid, w0.rho), rel=1e-14)
        values = [r.v_meq for r in result.records]
        assert values[-1] < values[0]

    def test_step_halving_keeps_time_bookkeeping(self, monkeypatch):
        # inject a single failure mid-run and check the halved-step segment
        # continues with consistent record times up to exactly t_end
        import thermolyap.simulator as sim
        from thermolyap.errors import TimeStepError

        original = sim._rk4
        calls = {"n": 0}

        def flaky(u, grid, config, dt, k1, th1):
            calls["n"] += 1
            if calls["n"] == 5:
                raise TimeStepError("injected failure")
            return original(u, grid, config, dt, k1, th1)

        monkeypatch.setattr(sim, "_rk4", flaky)
        config = make_config(n=50, t_end=0.1, output_every=2)
        result = run_simulation(config)
        times = [r.t for r in result.records]
        assert times[-1] == pytest.approx(0.1, rel=1e-12)
        gaps = np.diff(times)
        assert np.all(gaps > 0)
        # the later segment runs at half the step, so late gaps are smaller
        assert gaps[-1] < gaps[0]
        v0 = result.records[0].v_meq
        values = [r.v_meq for r in result.records]
        assert all(values[i + 1] <= values[i] + 1e-10 * v0
                   for i in range(len(values) - 1))

    def test_repeated_failure_aborts_with_last_state(self):
        # supersonic compression with essentially no dissipation blows up;
        # the halving retries run out and the last valid state is reported
        config = make_config(n=32, mu=1e-10, kappa=0.0, t_end=2.0,
                             a_rho=0.3, a_v=3.0, a_theta=0.3, cfl=1.0)
        with pytest.raises(SimulationAbortedError) as info:
            run_simulation(config, max_dt_retries=3)
        assert info.value.last_state.admissible()
        assert info.value.t is not None

    def test_timeseries_round_trip_text(self, tmp_path):
        config = make_config(n=50, t_end=0.1)
        result = run_simulation(config)
        path = tmp_path / "series.csv"
        write_timeseries(path, result.records)
        again = tmp_path / "series2.csv"
        write_timeseries(again, result.records)
        assert path.read_bytes() == again.read_bytes()
        header = path.read_text().splitlines()[0]
        assert header == "t,mass,energy,entropy,v_meq,xi_integral,decay_residual"
