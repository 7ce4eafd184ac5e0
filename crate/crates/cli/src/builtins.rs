//! Built-in scenarios for the reference experiments.
//!
//! Single runs are addressed by name; `cross`, `cardinal` and `all` expand
//! to groups.

use crate::scenario::{ControllerSpec, GainSpec, Model, ReferenceSpec, Scenario, SimSpec};

const SIDEWAYS_X0: [f64; 3] = [0.0, 0.0, 1.0];

fn first_order(name: &str, controller: ControllerSpec) -> Scenario {
    Scenario {
        name: name.into(),
        model: Model::Dubins1,
        controller,
        x0: SIDEWAYS_X0.to_vec(),
        sim: SimSpec::default(),
        delta: None,
        gains: GainSpec::default(),
        feedforward: true,
        tail_start: None,
    }
}

fn open_loop(name: &str, command: [f64; 3]) -> Scenario {
    first_order(name, ControllerSpec::OpenLoopCommand { command })
}

fn cardinal(name: &str, xdot_d: [f64; 3]) -> Scenario {
    first_order(name, ControllerSpec::Cardinal { xdot_d })
}

fn lissajous() -> Scenario {
    Scenario {
        name: "lissajous".into(),
        model: Model::Dubins2,
        controller: ControllerSpec::Pose2 {
            reference: ReferenceSpec::Lissajous,
        },
        x0: vec![0.0; 5],
        sim: SimSpec {
            t_end: 400.0,
            record_stride: 10,
            ..SimSpec::default()
        },
        delta: None,
        gains: GainSpec::default(),
        feedforward: true,
        tail_start: Some(100.0),
    }
}

fn lissajous_first_order() -> Scenario {
    Scenario {
        name: "lissajous-first-order".into(),
        controller: ControllerSpec::Pose1 {
            reference: ReferenceSpec::Lissajous,
        },
        x0: vec![0.0; 3],
        sim: SimSpec {
            t_end: 400.0,
            record_stride: 10,
            ..SimSpec::default()
        },
        tail_start: Some(100.0),
        ..first_order("", ControllerSpec::Cardinal { xdot_d: [0.0; 3] })
    }
}

pub const SINGLE: &[(&str, &str)] = &[
    ("cross-forward", "first-order car, a = (0.1, 0, 0) from (0, 0, 1)"),
    ("cross-lateral", "first-order car, a = (0, 0, 0.1)"),
    ("cross-backward", "first-order car, a = (-0.1, 0, 0)"),
    ("cross-lateral-neg", "first-order car, a = (0, 0, -0.1)"),
    ("spin", "first-order car, a = (0, 0.1, 0): turns on itself"),
    ("cardinal-east", "cardinal controller, xdot_d = (1, 0, 0)"),
    ("cardinal-west", "cardinal controller, xdot_d = (-1, 0, 0)"),
    ("cardinal-south", "cardinal controller, xdot_d = (0, -1, 0)"),
    ("cardinal-north", "cardinal controller, xdot_d = (0, 1, 0)"),
    ("lissajous", "second-order backstepping stack tracking the Lissajous pose, heading East"),
    ("lissajous-first-order", "first-order pose controller on the same reference"),
];

pub const GROUPS: &[(&str, &str)] = &[
    ("cross", "the four sideways/forward runs"),
    ("cardinal", "the four cardinal-direction runs"),
    ("all", "every single built-in"),
];

fn single(name: &str) -> Option<Scenario> {
    Some(match name {
        "cross-forward" => open_loop(name, [0.1, 0.0, 0.0]),
        "cross-lateral" => open_loop(name, [0.0, 0.0, 0.1]),
        "cross-backward" => open_loop(name, [-0.1, 0.0, 0.0]),
        "cross-lateral-neg" => open_loop(name, [0.0, 0.0, -0.1]),
        "spin" => open_loop(name, [0.0, 0.1, 0.0]),
        "cardinal-east" => cardinal(name, [1.0, 0.0, 0.0]),
        "cardinal-west" => cardinal(name, [-1.0, 0.0, 0.0]),
        "cardinal-south" => cardinal(name, [0.0, -1.0, 0.0]),
        "cardinal-north" => cardinal(name, [0.0, 1.0, 0.0]),
        "lissajous" => lissajous(),
        "lissajous-first-order" => lissajous_first_order(),
        _ => return None,
    })
}

/// Resolves a built-in name or group to its scenarios.
pub fn builtin(name: &str) -> Option<Vec<Scenario>> {
    let names: Vec<&str> = match name {
        "cross" => vec!["cross-forward", "cross-lateral", "cross-backward", "cross-lateral-neg"],
        "cardinal" => vec!["cardinal-east", "cardinal-west", "cardinal-south", "cardinal-north"],
        "all" => SINGLE.iter().map(|(n, _)| *n).collect(),
        other => return single(other).map(|s| vec![s]),
    };
    names.into_iter().map(single).collect()
}
