use lietdm_core::dubins::{
    body_matrix, cardinal_controller, dubins1_bracket, dubins1_dynamics, dubins2_rhs, pose_controller_1,
    pose_controller_2, velocity_loop, DubinsState1, DubinsState2, GainSet, Pose,
};
use lietdm_core::{simulate, Actuation, BracketCommand, Method, MuxState, Result, SimConfig, Trajectory};
use nalgebra::{dvector, DVector, Vector2, Vector3};

fn run_command(x0: DVector<f64>, cmd: BracketCommand, delta: f64, substeps: usize, cycles: usize) -> Trajectory {
    let dt = delta / substeps as f64;
    let config = SimConfig::new(dt, 4.0 * delta * cycles as f64);
    simulate(
        dubins1_dynamics,
        |_, _, mux: &MuxState| {
            let tick = mux.drive(cmd, dt)?;
            Ok(Actuation::new(vec![tick.output.0, tick.output.1], tick.next).with_command(tick.held))
        },
        MuxState::new(cmd, delta).unwrap(),
        x0,
        &config,
    )
    .unwrap()
}

/// Closed form of one unit cycle `{(1,0),(0,1),(−1,0),(0,−1)}` from heading
/// `θ`: drive δ, turn δ, reverse δ at heading θ+δ, turn back.
fn unit_cycle_closed_form(theta: f64, delta: f64) -> Vector3<f64> {
    let dx = delta * theta.cos() - delta * (theta + delta).cos();
    let dy = delta * theta.sin() - delta * (theta + delta).sin();
    Vector3::new(dx, dy, 0.0)
}

fn unit_cmd(delta: f64) -> BracketCommand {
    BracketCommand::new(0.0, 0.0, delta / 4.0).unwrap()
}

fn net(traj: &Trajectory) -> DVector<f64> {
    traj.last_state().unwrap() - traj.first_state().unwrap()
}

#[test]
fn simulated_cycle_matches_closed_form() {
    for theta in [0.0, 1.0, -2.3] {
        for delta in [0.2, 0.05] {
            let traj = run_command(dvector![0.5, -0.2, theta], unit_cmd(delta), delta, 50, 1);
            let got = net(&traj);
            let expected = unit_cycle_closed_form(theta, delta);
            assert!((got.fixed_rows::<3>(0) - expected).norm() < 1e-13);
        }
    }
}

#[test]
fn displacement_law_normalized_error_vanishes() {
    let deltas = [0.2, 0.1, 0.05, 0.025, 0.0125];
    for theta in [0.0, 0.7, 2.0] {
        let bracket = dubins1_bracket(theta);
        let errors: Vec<f64> = deltas
            .iter()
            .map(|&d| {
                let dx = unit_cycle_closed_form(theta, d);
                (dx - bracket * d * d).norm() / (d * d)
            })
            .collect();
        for w in errors.windows(2) {
            let slope = (w[0] / w[1]).ln() / 2f64.ln();
            // Asymptotically 1; the coarsest pair sits slightly below.
            assert!(slope >= 0.99, "theta {theta}: slope {slope}");
        }
    }
}

#[test]
fn orientation_flip_reverses_displacement() {
    for delta in [0.1, 0.05, 0.025] {
        let x0 = dvector![0.0, 0.0, 0.4];
        let up = net(&run_command(x0.clone(), BracketCommand::new(0.0, 0.0, 0.2).unwrap(), delta, 20, 1));
        let down = net(&run_command(x0, BracketCommand::new(0.0, 0.0, -0.2).unwrap(), delta, 20, 1));
        // Per-cycle displacement is |a3|·4δ; the mismatch is o(δ²)·α² = o(δ).
        let scale = 0.2 * 4.0 * delta;
        assert!((&up + &down).norm() / scale < 0.6 * delta.sqrt(), "delta {delta}");
        assert!(up.dot(&down) < 0.0);
    }
}

#[test]
fn mean_field_approaches_commanded_velocity() {
    let theta0: f64 = 1.0;
    let cmd = BracketCommand::new(0.1, 0.0, 0.1).unwrap();
    let target = body_matrix(theta0) * Vector3::from(cmd.as_array());
    let mut last = f64::INFINITY;
    for delta in [0.2, 0.1, 0.05, 0.025] {
        let cycles = (10.0_f64 / (4.0 * delta)).round() as usize;
        let traj = run_command(dvector![0.0, 0.0, theta0], cmd, delta, 10, cycles);
        let t = traj.times.last().unwrap();
        let v = net(&traj) / *t;
        let err = (v.fixed_rows::<3>(0) - target).norm();
        // Leading error term is O(αδ·|a3|) = O(√δ): halving δ divides it by ≈ √2.
        assert!(err * 1.3 < last, "delta {delta}: {err} vs {last}");
        last = err;
    }
    assert!(last < 0.1 * target.norm());
}

#[test]
fn cycle_average_of_inputs_is_linear_command() {
    let cmd = BracketCommand::new(0.3, -0.2, 0.7).unwrap();
    let traj = run_command(dvector![0.0, 0.0, 0.0], cmd, 0.1, 10, 3);
    let n = 40;
    let mean: Vector2<f64> = traj.inputs[..n]
        .iter()
        .map(|u| Vector2::new(u[0], u[1]))
        .sum::<Vector2<f64>>()
        / n as f64;
    assert!((mean - Vector2::new(0.3, -0.2)).norm() < 1e-12);
}

#[test]
fn rotation_only_command_does_not_translate() {
    let dt = 0.01;
    let rate = Vector3::new(0.0, 0.0, 0.3);
    let traj = simulate(
        dubins1_dynamics,
        |_, x: &DVector<f64>, mux: &MuxState| {
            let cmd = cardinal_controller(&DubinsState1::from_slice(x.as_slice())?, &rate);
            let tick = mux.drive(cmd, dt)?;
            Ok(Actuation::new(vec![tick.output.0, tick.output.1], tick.next))
        },
        MuxState::new(BracketCommand::ZERO, 0.1).unwrap(),
        dvector![1.0, 2.0, 0.5],
        &SimConfig::new(dt, 5.0),
    )
    .unwrap();
    let d = net(&traj);
    assert!(d[0].hypot(d[1]) < 1e-12);
    assert!((d[2] - 1.5).abs() < 1e-9);
}

#[test]
fn pose1_equilibrium_is_a_fixed_point() {
    let dt = 0.01;
    let p = Pose::new(0.4, -0.3, 2.0);
    let gains = GainSet::default();
    let traj = simulate(
        dubins1_dynamics,
        |_, x: &DVector<f64>, mux: &MuxState| {
            let cmd = pose_controller_1(&DubinsState1::from_slice(x.as_slice())?, &p, &Vector3::zeros(), &gains);
            let tick = mux.drive(cmd, dt)?;
            Ok(Actuation::new(vec![tick.output.0, tick.output.1], tick.next))
        },
        MuxState::new(BracketCommand::ZERO, 0.1).unwrap(),
        dvector![0.4, -0.3, 2.0],
        &SimConfig::new(dt, 5.0),
    )
    .unwrap();
    assert!(traj.states.iter().all(|s| *s == dvector![0.4, -0.3, 2.0]));
}

#[test]
fn pose1_converges_from_lateral_offset() {
    let dt = 0.01;
    let p = Pose::new(0.0, 0.0, 0.0);
    let gains = GainSet::default();
    let traj = simulate(
        dubins1_dynamics,
        |_, x: &DVector<f64>, mux: &MuxState| {
            let cmd = pose_controller_1(&DubinsState1::from_slice(x.as_slice())?, &p, &Vector3::zeros(), &gains);
            let tick = mux.drive(cmd, dt)?;
            Ok(Actuation::new(vec![tick.output.0, tick.output.1], tick.next))
        },
        MuxState::new(BracketCommand::ZERO, 0.1).unwrap(),
        dvector![0.0, 0.3, 0.0],
        &SimConfig::new(dt, 10.0),
    )
    .unwrap();
    let end = traj.last_state().unwrap();
    assert!(end.norm() < 0.01, "{end}");
}

#[test]
fn velocity_loop_has_time_constant_one_over_gain() {
    let gains = GainSet {
        k_vel: 5.0,
        ..GainSet::default()
    };
    let dt = 1e-3;
    let traj = simulate(
        dubins2_rhs,
        |_, x: &DVector<f64>, _: &()| {
            let s = DubinsState2::from_slice(x.as_slice())?;
            Ok(Actuation::new(velocity_loop(&s, [1.0, 0.0], &gains).to_vec(), ()))
        },
        (),
        DVector::zeros(5),
        &SimConfig::new(dt, 1.0),
    )
    .unwrap();
    // First-order response 1 − e^{−k t}: at t = 1/k it reaches 1 − 1/e. The
    // input is held per step, which shifts the exponent by O(k·dt).
    let idx = traj.nearest_index(0.2).unwrap();
    assert!((traj.states[idx][3] - (1.0 - (-1.0f64).exp())).abs() < 2e-3);
}

fn pose_run(second_order: bool, k_vel: f64, delta: f64, dt: f64) -> Result<Trajectory> {
    let gains = GainSet {
        k_vel,
        k_pose1: 0.3,
        k_pose2: 0.3,
    };
    let p = Pose::new(1.0, 0.5, 0.0);
    let mux0 = MuxState::new(BracketCommand::ZERO, delta)?;
    let config = SimConfig::new(dt, 20.0);
    if second_order {
        simulate(
            dubins2_rhs,
            |_, x: &DVector<f64>, mux: &MuxState| {
                let s = DubinsState2::from_slice(x.as_slice())?;
                let step = pose_controller_2(&s, &p, &Vector3::zeros(), &gains, mux, dt)?;
                Ok(Actuation::new(step.u.to_vec(), step.mux))
            },
            mux0,
            DVector::zeros(5),
            &config,
        )
    } else {
        simulate(
            dubins1_dynamics,
            |_, x: &DVector<f64>, mux: &MuxState| {
                let s = DubinsState1::from_slice(x.as_slice())?;
                let tick = mux.drive(pose_controller_1(&s, &p, &Vector3::zeros(), &gains), dt)?;
                Ok(Actuation::new(vec![tick.output.0, tick.output.1], tick.next))
            },
            mux0,
            DVector::zeros(3),
            &config,
        )
    }
}

#[test]
fn cascade_approaches_first_order_loop() {
    let dt = 0.002;
    let mut last = f64::INFINITY;
    for (k_vel, delta) in [(20.0, 0.2), (40.0, 0.1), (80.0, 0.05), (160.0, 0.02)] {
        let second = pose_run(true, k_vel, delta, dt).unwrap();
        let first = pose_run(false, k_vel, delta, dt).unwrap();
        let gap = second
            .states
            .iter()
            .zip(&first.states)
            .map(|(a, b)| (a[0] - b[0]).hypot(a[1] - b[1]))
            .fold(0.0, f64::max);
        assert!(gap < last, "k_vel {k_vel}, delta {delta}: gap {gap} !< {last}");
        last = gap;
    }
}

#[test]
fn integrator_orders() {
    // ẏ = cos τ, τ̇ = 1; exact y(2) = sin 2.
    let error = |method: Method, dt: f64| {
        let config = SimConfig {
            method,
            ..SimConfig::new(dt, 2.0)
        };
        let traj = simulate(
            |x: &DVector<f64>, _: &[f64]| dvector![x[1].cos(), 1.0],
            |_, _, _: &()| Ok(Actuation::new(vec![], ())),
            (),
            dvector![0.0, 0.0],
            &config,
        )
        .unwrap();
        (traj.last_state().unwrap()[0] - 2f64.sin()).abs()
    };
    let euler = error(Method::Euler, 0.02) / error(Method::Euler, 0.01);
    let rk4 = error(Method::Rk4, 0.1) / error(Method::Rk4, 0.05);
    assert!((euler - 2.0).abs() < 0.1, "euler ratio {euler}");
    assert!((rk4 - 16.0).abs() < 1.0, "rk4 ratio {rk4}");
}

#[test]
fn euler_and_rk4_agree_on_input_driven_linear_system() {
    let run = |method| {
        let config = SimConfig {
            method,
            ..SimConfig::new(0.01, 1.0)
        };
        run_with(config)
    };
    fn run_with(config: SimConfig) -> Trajectory {
        let dt = config.dt;
        simulate(
            |_: &DVector<f64>, u: &[f64]| dvector![u[0], u[1]],
            |_, _, mux: &MuxState| {
                let tick = mux.drive(BracketCommand::new(0.2, -0.1, 0.3).unwrap(), dt)?;
                Ok(Actuation::new(vec![tick.output.0, tick.output.1], tick.next))
            },
            MuxState::new(BracketCommand::ZERO, 0.05).unwrap(),
            dvector![0.0, 0.0],
            &config,
        )
        .unwrap()
    }
    let (a, b) = (run(Method::Euler), run(Method::Rk4));
    for (x, y) in a.states.iter().zip(&b.states) {
        assert!((x - y).norm() < 1e-14);
    }
}

#[test]
fn simulation_is_deterministic() {
    let a = run_command(dvector![0.0, 0.0, 1.0], BracketCommand::new(0.1, 0.05, -0.1).unwrap(), 0.1, 10, 5);
    let b = run_command(dvector![0.0, 0.0, 1.0], BracketCommand::new(0.1, 0.05, -0.1).unwrap(), 0.1, 10, 5);
    assert_eq!(a, b);
}
