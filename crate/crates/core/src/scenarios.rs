//! Built-in models: the seven-state running example and the power-plant
//! gridworld.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelBuilder, ObsSymbol};

/// Seven-state example with actions `a`, `b`; every state is labelled with
/// its own name and observed up to the partition
/// `{s1} {s2,s3} {s4} {s5,s6} {s7}`.
pub fn running_example() -> Model {
    const EDGES: &[(&str, &str, &[(&str, f64)])] = &[
        ("s1", "a", &[("s2", 0.5), ("s3", 0.5)]),
        ("s1", "b", &[("s2", 0.5), ("s3", 0.5)]),
        ("s2", "a", &[("s2", 0.2), ("s3", 0.8)]),
        ("s2", "b", &[("s4", 0.4), ("s5", 0.6)]),
        ("s3", "a", &[("s3", 0.2), ("s5", 0.4), ("s7", 0.4)]),
        ("s3", "b", &[("s4", 0.3), ("s5", 0.2), ("s6", 0.5)]),
        ("s4", "a", &[("s4", 1.0)]),
        ("s4", "b", &[("s4", 1.0)]),
        ("s5", "a", &[("s5", 0.3), ("s4", 0.2), ("s7", 0.5)]),
        ("s5", "b", &[("s5", 1.0)]),
        ("s6", "a", &[("s6", 0.5), ("s5", 0.5)]),
        ("s6", "b", &[("s6", 1.0)]),
        ("s7", "a", &[("s6", 0.5), ("s7", 0.5)]),
        ("s7", "b", &[("s6", 0.5), ("s7", 0.5)]),
    ];
    let partition: [&[&str]; 5] = [&["s1"], &["s2", "s3"], &["s4"], &["s5", "s6"], &["s7"]];
    let class_of = |s: &str| {
        let members = partition.iter().find(|c| c.contains(&s)).unwrap();
        ObsSymbol::states(members.iter().copied()).unwrap()
    };

    let mut b = ModelBuilder::new();
    for i in 1..=7 {
        let s = format!("s{i}");
        b.state(s.clone()).label(s.clone(), [s]);
    }
    b.action("a")
        .action("b")
        .initial("s1", 1.0)
        .auto_frame(true);
    for &(from, action, succ) in EDGES {
        for &(to, p) in succ {
            b.transition(from, action, to, p);
            b.observe(from, action, to, class_of(to));
        }
    }
    b.build().expect("running example is well formed")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sensor {
    pub name: String,
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DroneConfig {
    pub path: Vec<usize>,
    pub move_p: f64,
}

impl Default for DroneConfig {
    fn default() -> Self {
        DroneConfig {
            path: vec![34, 28, 22, 16],
            move_p: 0.65,
        }
    }
}

/// Power-plant gridworld. Cells are numbered row-major from the top-left.
///
/// The default sensor placement is a best-effort guess and not
/// authoritative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridworldConfig {
    pub width: usize,
    pub height: usize,
    pub start_cell: usize,
    pub plant_cell: usize,
    pub control_cells: Vec<usize>,
    pub data_cells: Vec<usize>,
    pub alarm_cells: Vec<usize>,
    pub wall_cells: Vec<usize>,
    pub move_success_p: f64,
    pub binary_sensors: Vec<Sensor>,
    pub precision_sensors: Vec<Sensor>,
    pub drone: DroneConfig,
}

impl Default for GridworldConfig {
    fn default() -> Self {
        let sensor = |name: &str, cells: &[usize]| Sensor {
            name: name.into(),
            cells: cells.to_vec(),
        };
        GridworldConfig {
            width: 6,
            height: 6,
            start_cell: 30,
            plant_cell: 8,
            control_cells: vec![34],
            data_cells: vec![16, 25],
            alarm_cells: vec![1, 11, 13, 15, 27, 35],
            wall_cells: vec![17, 23],
            move_success_p: 0.6,
            binary_sensors: vec![
                sensor("sensor1", &[0, 2, 3, 6, 7, 8, 9, 14]),
                sensor("sensor2", &[12, 18, 19, 24, 30, 31]),
                sensor("sensor3", &[10, 16]),
                sensor("sensor4", &[20, 21, 26, 32, 33]),
            ],
            precision_sensors: vec![sensor("sensor5", &[4, 5])],
            drone: DroneConfig::default(),
        }
    }
}

pub const DISABLED: &str = "disabled";
pub const GRID_ACTIONS: [&str; 4] = ["N", "S", "E", "W"];

/// Drone position on its path plus heading (`true` = towards the path end).
type Drone = (usize, bool);

impl GridworldConfig {
    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.cells();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.width == 0 || self.height == 0 {
            return bad("grid must have at least one cell".into());
        }
        let named: [(&str, &[usize]); 5] = [
            ("control_cells", &self.control_cells),
            ("data_cells", &self.data_cells),
            ("alarm_cells", &self.alarm_cells),
            ("wall_cells", &self.wall_cells),
            ("drone.path", &self.drone.path),
        ];
        for (what, cells) in named {
            if let Some(c) = cells.iter().find(|&&c| c >= n) {
                return bad(format!("{what}: cell {c} outside the {n}-cell grid"));
            }
        }
        for s in self.binary_sensors.iter().chain(&self.precision_sensors) {
            if let Some(c) = s.cells.iter().find(|&&c| c >= n) {
                return bad(format!("sensor {}: cell {c} outside the grid", s.name));
            }
        }
        for (what, c) in [
            ("start_cell", self.start_cell),
            ("plant_cell", self.plant_cell),
        ] {
            if c >= n {
                return bad(format!("{what} {c} outside the grid"));
            }
        }
        if self.wall_cells.contains(&self.start_cell) || self.alarm_cells.contains(&self.start_cell)
        {
            return bad(format!("start cell {} is a wall or alarm", self.start_cell));
        }
        if !(self.move_success_p > 0.0 && self.move_success_p <= 1.0) {
            return bad(format!(
                "move_success_p {} not in (0,1]",
                self.move_success_p
            ));
        }
        if !(self.drone.move_p > 0.0 && self.drone.move_p <= 1.0) {
            return bad(format!("drone.move_p {} not in (0,1]", self.drone.move_p));
        }
        if self.drone.path.is_empty() {
            return bad("drone path is empty".into());
        }
        for w in self.drone.path.windows(2) {
            if !self.adjacent(w[0], w[1]) {
                return bad(format!(
                    "drone path cells {} and {} are not adjacent",
                    w[0], w[1]
                ));
            }
        }
        Ok(())
    }

    fn adjacent(&self, a: usize, b: usize) -> bool {
        let (ra, ca) = (a / self.width, a % self.width);
        let (rb, cb) = (b / self.width, b % self.width);
        ra.abs_diff(rb) + ca.abs_diff(cb) == 1
    }

    /// Neighbor of `cell` in direction `dir`, or `None` at the boundary or a wall.
    fn neighbor(&self, cell: usize, dir: &str) -> Option<usize> {
        let (r, c) = (cell / self.width, cell % self.width);
        let next = match dir {
            "N" if r > 0 => cell - self.width,
            "S" if r + 1 < self.height => cell + self.width,
            "E" if c + 1 < self.width => cell + 1,
            "W" if c > 0 => cell - 1,
            _ => return None,
        };
        (!self.wall_cells.contains(&next)).then_some(next)
    }

    /// Successor cells of a move with their probabilities; blocked mass stays.
    pub fn robot_moves(&self, cell: usize, dir: &str) -> BTreeMap<usize, f64> {
        let lateral: [&str; 2] = match dir {
            "N" | "S" => ["W", "E"],
            _ => ["N", "S"],
        };
        let p = self.move_success_p;
        let mut out = BTreeMap::new();
        let mut add = |d: &str, mass: f64| {
            if mass > 0.0 {
                *out.entry(self.neighbor(cell, d).unwrap_or(cell))
                    .or_insert(0.0) += mass;
            }
        };
        add(dir, p);
        for d in lateral {
            add(d, (1.0 - p) / 2.0);
        }
        out
    }

    fn drone_states(&self) -> Vec<Drone> {
        let n = self.drone.path.len();
        if n == 1 {
            return vec![(0, true)];
        }
        let mut v = Vec::new();
        for i in 0..n {
            if i + 1 < n {
                v.push((i, true));
            }
            if i > 0 {
                v.push((i, false));
            }
        }
        v
    }

    fn drone_moves(&self, (i, fwd): Drone) -> Vec<(Drone, f64)> {
        let n = self.drone.path.len();
        if n == 1 {
            return vec![((0, true), 1.0)];
        }
        let j = if fwd { i + 1 } else { i - 1 };
        let heading = if j == 0 {
            true
        } else if j + 1 == n {
            false
        } else {
            fwd
        };
        let p = self.drone.move_p;
        let mut out = vec![((j, heading), p)];
        if p < 1.0 {
            out.push(((i, fwd), 1.0 - p));
        }
        out
    }

    fn state_name(&self, cell: usize, (i, fwd): Drone) -> String {
        format!("c{cell}_d{i}{}", if fwd { 'f' } else { 'b' })
    }

    /// Joint sensor reading of a robot cell with the drone in a given state.
    fn reading(&self, cell: usize, drone: Drone) -> Vec<Option<usize>> {
        let mut r: Vec<Option<usize>> = self
            .binary_sensors
            .iter()
            .map(|s| s.cells.contains(&cell).then_some(1))
            .collect();
        r.extend(
            self.precision_sensors
                .iter()
                .map(|s| s.cells.contains(&cell).then_some(cell)),
        );
        let dc = self.drone.path[drone.0];
        let seen = cell == dc || (dc >= self.width && cell == dc - self.width);
        r.push(seen.then_some(cell));
        r.push(Some(drone.0));
        r.push(Some(drone.1 as usize));
        r
    }
}

/// Builds the gridworld model. Entering an alarm cell leads to the absorbing
/// `disabled` state, from which only termination is possible.
pub fn gridworld(cfg: &GridworldConfig) -> Result<Model> {
    cfg.validate()?;
    let drones = cfg.drone_states();
    let free: Vec<usize> = (0..cfg.cells())
        .filter(|c| !cfg.wall_cells.contains(c) && !cfg.alarm_cells.contains(c))
        .collect();

    let mut b = ModelBuilder::new();
    b.prop("A").prop("B").prop("C").prop(DISABLED);
    for a in GRID_ACTIONS {
        b.action(a);
    }
    let mut classes: BTreeMap<Vec<Option<usize>>, BTreeSet<String>> = BTreeMap::new();
    for &c in &free {
        for &d in &drones {
            let name = cfg.state_name(c, d);
            b.state(name.clone());
            let mut label = Vec::new();
            if c == cfg.plant_cell {
                label.push("C");
            }
            if cfg.control_cells.contains(&c) {
                label.push("A");
            }
            if cfg.data_cells.contains(&c) {
                label.push("B");
            }
            b.label(name.clone(), label);
            classes.entry(cfg.reading(c, d)).or_default().insert(name);
        }
    }
    b.state(DISABLED).label(DISABLED, [DISABLED]);
    let class_of: BTreeMap<String, ObsSymbol> = classes
        .into_values()
        .flat_map(|members| {
            let sym = ObsSymbol::states(members.iter().cloned()).unwrap();
            members.into_iter().map(move |m| (m, sym.clone()))
        })
        .collect();
    let disabled_obs = ObsSymbol::states([DISABLED]).unwrap();

    b.initial(cfg.state_name(cfg.start_cell, drones[0]), 1.0);
    for &c in &free {
        for &d in &drones {
            let from = cfg.state_name(c, d);
            for a in GRID_ACTIONS {
                for (cell, pr) in cfg.robot_moves(c, a) {
                    if cfg.alarm_cells.contains(&cell) {
                        b.transition(from.clone(), a, DISABLED, pr);
                        b.observe(from.clone(), a, DISABLED, disabled_obs.clone());
                        continue;
                    }
                    for (d2, pd) in cfg.drone_moves(d) {
                        let to = cfg.state_name(cell, d2);
                        b.transition(from.clone(), a, to.clone(), pr * pd);
                        b.observe(from.clone(), a, to.clone(), class_of[&to].clone());
                    }
                }
            }
        }
    }
    b.auto_frame(true);
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_example_is_valid() {
        let m = running_example();
        assert!(m.validate().is_empty(), "{:?}", m.validate());
        assert_eq!(m.num_states(), 9);
        let id = |s: &str| m.state_id(s).unwrap();
        let a = m.action_id("a").unwrap();
        assert_eq!(m.prob(id("s3"), a, id("s5")), 0.4);
        assert_eq!(m.prob(id("s3"), a, id("s7")), 0.4);
        assert_eq!(m.prob(id("s3"), a, id("s3")), 0.2);
        let o2 = m.observation(id("s1"), a, id("s2")).unwrap();
        let o3 = m.observation(id("s1"), a, id("s3")).unwrap();
        assert_eq!(o2, o3);
        assert_eq!(m.obs_symbol(o2).to_string(), "[s2,s3]");
    }

    #[test]
    fn north_move_from_cell_30() {
        let cfg = GridworldConfig::default();
        let moves = cfg.robot_moves(30, "N");
        assert_eq!(moves.len(), 3);
        assert!((moves[&24] - 0.6).abs() < 1e-12);
        assert!((moves[&30] - 0.2).abs() < 1e-12);
        assert!((moves[&31] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn walls_bounce() {
        let cfg = GridworldConfig::default();
        let moves = cfg.robot_moves(16, "E");
        assert!((moves[&16] - 0.6).abs() < 1e-12);
    }

    #[test]
    fn drone_dynamics() {
        let cfg = GridworldConfig::default();
        let moves = cfg.drone_moves((0, true));
        assert_eq!(moves, vec![((1, true), 0.65), ((0, true), 0.35)]);
        let top = cfg.drone_moves((2, true));
        assert_eq!(top[0], ((3, false), 0.65));
        assert_eq!(cfg.drone_states().len(), 6);
    }

    #[test]
    fn gridworld_is_valid() {
        let m = gridworld(&GridworldConfig::default()).unwrap();
        assert!(m.validate().is_empty(), "{:?}", m.validate().first());
        let d = m.state_id(DISABLED).unwrap();
        assert_eq!(m.rows(d).len(), 1);
        assert_eq!(m.rows(d)[0].action, m.a_bot());
    }

    #[test]
    fn uncovered_cells_share_an_observation() {
        let m = gridworld(&GridworldConfig::default()).unwrap();
        let step = |from: &str, a: &str, to: &str| {
            m.observation(
                m.state_id(from).unwrap(),
                m.action_id(a).unwrap(),
                m.state_id(to).unwrap(),
            )
        };
        let o1 = step("c31_d0f", "N", "c25_d1f");
        let o2 = step("c28_d0f", "E", "c29_d1f");
        assert!(o1.is_some());
        assert_eq!(o1, o2);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = GridworldConfig {
            move_success_p: 0.0,
            ..Default::default()
        };
        assert!(gridworld(&cfg).is_err());
        let cfg = GridworldConfig {
            drone: DroneConfig {
                path: vec![34, 22],
                move_p: 0.5,
            },
            ..Default::default()
        };
        assert!(matches!(gridworld(&cfg), Err(Error::InvalidConfig(_))));
    }
}
