use std::collections::BTreeMap;

use opaque_planner::model::{LabelSet, Model, ObsSymbol};
use opaque_planner::scenarios::{
    gridworld, running_example, GridworldConfig, DISABLED, GRID_ACTIONS,
};
use opaque_planner::Error;

fn p(m: &Model, s: &str, a: &str, t: &str) -> f64 {
    m.prob(
        m.state_id(s).unwrap(),
        m.action_id(a).unwrap(),
        m.state_id(t).unwrap(),
    )
}

fn label(props: &[&str]) -> LabelSet {
    props.iter().map(|s| s.to_string()).collect()
}

#[test]
fn running_example_transitions() {
    let m = running_example();
    assert!(m.validate().is_empty());
    assert_eq!(m.num_states(), 9);
    assert_eq!(p(&m, "s3", "a", "s5"), 0.4);
    assert_eq!(p(&m, "s3", "a", "s7"), 0.4);
    assert_eq!(p(&m, "s3", "a", "s3"), 0.2);
    assert_eq!(p(&m, "s2", "a", "s2"), 0.2);
    assert_eq!(p(&m, "s2", "a", "s3"), 0.8);
    assert_eq!(p(&m, "s3", "b", "s4"), 0.3);
    assert_eq!(p(&m, "s5", "a", "s7"), 0.5);
    assert_eq!(p(&m, "s7", "a", "s6"), 0.5);
    assert_eq!(m.initial(), &[(m.state_id("s1").unwrap(), 1.0)]);
    let a = m.action_id("a").unwrap();
    let s1 = m.state_id("s1").unwrap();
    let o2 = m.observation(s1, a, m.state_id("s2").unwrap()).unwrap();
    let o3 = m.observation(s1, a, m.state_id("s3").unwrap()).unwrap();
    assert_eq!(o2, o3);
    assert_eq!(m.obs_symbol(o2), &ObsSymbol::states(["s2", "s3"]).unwrap());
    for i in 1..=7 {
        let s = format!("s{i}");
        assert_eq!(m.label(m.state_id(&s).unwrap()), &label(&[&s]));
    }
}

#[test]
fn observation_classes_cover_each_state_once() {
    for m in [
        running_example(),
        gridworld(&GridworldConfig::default()).unwrap(),
    ] {
        let mut class: BTreeMap<String, &ObsSymbol> = BTreeMap::new();
        for sym in m.obs_alphabet() {
            if let ObsSymbol::States(members) = sym {
                for s in members {
                    assert!(class.insert(s.clone(), sym).is_none(), "{s} in two classes");
                }
            }
        }
        // States entered only by the initiating action are observed as ⋊.
        for s in (0..m.num_states()).filter(|&s| m.is_interior(s)) {
            for row in m.rows(s) {
                for t in row.successors.iter().filter(|t| m.is_interior(t.target)) {
                    let sym = m.obs_symbol(m.observation(s, row.action, t.target).unwrap());
                    assert_eq!(Some(&sym), class.get(m.state_name(t.target)));
                }
            }
        }
    }
}

#[test]
fn gridworld_default_is_valid() {
    let cfg = GridworldConfig::default();
    cfg.validate().unwrap();
    let m = gridworld(&cfg).unwrap();
    assert!(m.validate().is_empty(), "{:?}", m.validate());
    assert_eq!(m.label(m.state_id("c8_d0f").unwrap()), &label(&["C"]));
    assert_eq!(m.label(m.state_id("c34_d1b").unwrap()), &label(&["A"]));
    assert_eq!(m.label(m.state_id("c16_d2f").unwrap()), &label(&["B"]));
    assert_eq!(m.label(m.state_id("c25_d0f").unwrap()), &label(&["B"]));
    assert_eq!(m.label(m.state_id(DISABLED).unwrap()), &label(&[DISABLED]));
}

#[test]
fn robot_moves_slip_sideways() {
    let cfg = GridworldConfig::default();
    let moves = cfg.robot_moves(30, "N");
    assert_eq!(moves.len(), 3);
    assert!((moves[&24] - 0.6).abs() < 1e-12);
    assert!((moves[&30] - 0.2).abs() < 1e-12);
    assert!((moves[&31] - 0.2).abs() < 1e-12);
    for cell in 0..cfg.cells() {
        for dir in GRID_ACTIONS {
            let total: f64 = cfg.robot_moves(cell, dir).values().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }
    // Cell 16 has the wall 17 to its east.
    let east = cfg.robot_moves(16, "E");
    assert!((east[&16] - 0.6).abs() < 1e-12);
    assert!(!east.contains_key(&17));
}

#[test]
fn drone_and_robot_move_jointly() {
    let m = gridworld(&GridworldConfig::default()).unwrap();
    assert!((p(&m, "c30_d0f", "N", "c24_d1f") - 0.6 * 0.65).abs() < 1e-12);
    assert!((p(&m, "c30_d0f", "N", "c24_d0f") - 0.6 * 0.35).abs() < 1e-12);
    assert!((p(&m, "c30_d0f", "N", "c31_d1f") - 0.2 * 0.65).abs() < 1e-12);
    // The drone turns around at the far end of its path.
    assert!((p(&m, "c30_d2f", "N", "c24_d3b") - 0.6 * 0.65).abs() < 1e-12);
    assert!((p(&m, "c30_d1b", "N", "c24_d0f") - 0.6 * 0.65).abs() < 1e-12);
}

#[test]
fn alarms_disable_the_robot() {
    let m = gridworld(&GridworldConfig::default()).unwrap();
    // North of 7 is alarm cell 1.
    assert!((p(&m, "c7_d0f", "N", DISABLED) - 0.6).abs() < 1e-12);
    let d = m.state_id(DISABLED).unwrap();
    let actions: Vec<usize> = m.rows(d).iter().map(|r| r.action).collect();
    assert_eq!(actions, vec![m.a_bot()]);
    assert!(m.state_id("c1_d0f").is_err());
}

#[test]
fn unobserved_cells_look_alike() {
    let m = gridworld(&GridworldConfig::default()).unwrap();
    let sym = |s: &str| {
        let t = m.state_id(s).unwrap();
        (0..m.num_states())
            .flat_map(|f| m.rows(f).iter().map(move |r| (f, r.action)))
            .find_map(|(f, a)| m.observation(f, a, t))
            .map(|o| m.obs_symbol(o).clone())
            .unwrap()
    };
    // Cells 25 and 29 are covered by no sensor and not seen by the drone at 34.
    assert_eq!(sym("c25_d0f"), sym("c29_d0f"));
    assert_ne!(sym("c25_d0f"), sym("c25_d1f"));
    assert_ne!(sym("c4_d0f"), sym("c5_d0f"));
}

#[test]
fn config_round_trips_and_rejects_bad_values() {
    let cfg = GridworldConfig::default();
    let text = serde_json::to_string(&cfg).unwrap();
    assert_eq!(serde_json::from_str::<GridworldConfig>(&text).unwrap(), cfg);
    let partial: GridworldConfig = serde_json::from_str(r#"{"move_success_p": 0.8}"#).unwrap();
    assert_eq!(partial.move_success_p, 0.8);
    assert_eq!(partial.width, 6);

    let mut bad = cfg.clone();
    bad.drone.path = vec![34, 22];
    assert!(matches!(gridworld(&bad), Err(Error::InvalidConfig(_))));
    let mut bad = cfg.clone();
    bad.move_success_p = 0.0;
    assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))));
    let mut bad = cfg.clone();
    bad.drone.move_p = 1.5;
    assert!(bad.validate().is_err());
    let mut bad = cfg;
    bad.alarm_cells.push(36);
    assert!(bad.validate().is_err());
}
