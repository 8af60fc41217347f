//! Synthetic intersection worlds.
//!
//! A scenario is a static snapshot of one perception period: an RSU on the
//! corner of two crossing roads, `n_cavs` connected vehicles on the lanes,
//! and `n_objects` rectangular road users whose footprints form the
//! ground-truth occupancy grid. Every agent (index 0 is the RSU, 1..=M are
//! CAVs) gets a visibility grid from integer ray casting and a sensing-quality
//! grid that decays with distance; together with a per-agent clutter grid
//! these stand in for what a LiDAR backbone would produce.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, Grid};

pub const RSU: usize = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid_h: usize,
    pub grid_w: usize,
    /// Edge length of one grid cell in meters.
    pub cell_size: f64,
    pub n_cavs: usize,
    pub n_objects: usize,
    /// Object footprint along the driving direction, in cells.
    pub object_length: usize,
    /// Object footprint across the driving direction, in cells.
    pub object_width: usize,
    /// Width of each road in cells; every road carries four lanes.
    pub road_width: usize,
    pub rsu_x: f64,
    pub rsu_y: f64,
    pub rsu_height: f64,
    pub comm_range: f64,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    pub sensing_base_quality: f64,
    /// Distance scale of the exponential sensing-quality decay, meters.
    pub sensing_decay: f64,
    pub clutter_max: f64,
    pub max_placement_attempts: usize,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            grid_h: 64,
            grid_w: 64,
            cell_size: 1.0,
            n_cavs: 4,
            n_objects: 12,
            object_length: 4,
            object_width: 2,
            road_width: 16,
            rsu_x: 22.5,
            rsu_y: 22.5,
            rsu_height: 25.0,
            comm_range: 300.0,
            speed_min_kmh: 0.0,
            speed_max_kmh: 25.0,
            sensing_base_quality: 0.95,
            sensing_decay: 40.0,
            clutter_max: 0.1,
            max_placement_attempts: 10_000,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.grid_h == 0 || self.grid_w == 0 {
            return bad("grid dimensions must be at least 1");
        }
        if !(self.cell_size > 0.0) {
            return bad("cell_size must be positive");
        }
        if !(self.sensing_base_quality > 0.0 && self.sensing_base_quality <= 1.0) {
            return bad("sensing_base_quality must lie in (0, 1]");
        }
        if !(self.sensing_decay > 0.0) {
            return bad("sensing_decay must be positive");
        }
        if !(self.clutter_max >= 0.0 && self.clutter_max < 1.0) {
            return bad("clutter_max must lie in [0, 1)");
        }
        if !(0.0 <= self.speed_min_kmh
            && self.speed_min_kmh <= self.speed_max_kmh
            && self.speed_max_kmh <= 25.0)
        {
            return bad("speeds must satisfy 0 <= min <= max <= 25 km/h");
        }
        if self.object_length == 0 || self.object_width == 0 {
            return bad("object footprint must be non-empty");
        }
        if self.road_width < 4 || self.road_width % 4 != 0 {
            return bad("road_width must be a positive multiple of 4 (four lanes)");
        }
        if self.object_width > self.road_width / 4 {
            return bad("object_width does not fit in a lane");
        }
        if self.road_width > self.grid_h.min(self.grid_w) {
            return bad("roads do not fit in the grid");
        }
        if !(self.rsu_height >= 0.0) || !(self.comm_range > 0.0) {
            return bad("rsu_height must be >= 0 and comm_range > 0");
        }
        let (rx, ry) = (self.rsu_x, self.rsu_y);
        let (wm, hm) = (
            self.grid_w as f64 * self.cell_size,
            self.grid_h as f64 * self.cell_size,
        );
        if !(rx >= 0.0 && rx < wm && ry >= 0.0 && ry < hm) {
            return bad("RSU must sit inside the grid");
        }
        Ok(())
    }

    /// Grid cell containing a metric position.
    pub fn cell_at(&self, x: f64, y: f64) -> Cell {
        let r = ((y / self.cell_size).floor() as isize).clamp(0, self.grid_h as isize - 1);
        let c = ((x / self.cell_size).floor() as isize).clamp(0, self.grid_w as isize - 1);
        (r as usize, c as usize)
    }

    /// Metric center of a grid cell, `(x, y)`.
    pub fn cell_center(&self, (r, c): Cell) -> (f64, f64) {
        (
            (c as f64 + 0.5) * self.cell_size,
            (r as f64 + 0.5) * self.cell_size,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
}

impl Pose {
    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub footprint: Vec<Cell>,
    pub center: (f64, f64),
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub objects: Vec<SceneObject>,
    /// Agent poses: index 0 is the RSU, 1..=M are the CAVs.
    pub agents: Vec<Pose>,
    pub occupancy: Grid<bool>,
    /// Object index per cell, `None` for free space.
    pub labels: Grid<Option<u32>>,
    pub visibility: Vec<Grid<bool>>,
    pub quality: Vec<Grid<f64>>,
    pub clutter: Vec<Grid<f64>>,
}

impl Scenario {
    pub fn n_cavs(&self) -> usize {
        self.agents.len() - 1
    }

    pub fn shape(&self) -> (usize, usize) {
        self.occupancy.shape()
    }

    pub fn agent_cell(&self, agent: usize) -> Cell {
        let p = &self.agents[agent];
        self.config.cell_at(p.x, p.y)
    }

    /// Ground distance from the RSU mast to an agent, meters.
    pub fn ground_distance_to_rsu(&self, agent: usize) -> f64 {
        let (a, r) = (&self.agents[agent], &self.agents[RSU]);
        (a.x - r.x).hypot(a.y - r.y)
    }

    /// Assembles a scenario from placed geometry, deriving every per-agent grid.
    pub fn from_parts(
        config: ScenarioConfig,
        agents: Vec<Pose>,
        objects: Vec<SceneObject>,
        clutter: Vec<Grid<f64>>,
    ) -> Result<Self> {
        let (h, w) = (config.grid_h, config.grid_w);
        let mut occupancy = Grid::filled(h, w, false);
        let mut labels = Grid::filled(h, w, None);
        for (id, obj) in objects.iter().enumerate() {
            for &cell in &obj.footprint {
                if cell.0 >= h || cell.1 >= w {
                    return Err(Error::InvalidConfig(format!("object {id} leaves the grid")));
                }
                if occupancy[cell] {
                    return Err(Error::InvalidConfig(format!("object {id} overlaps another")));
                }
                occupancy[cell] = true;
                labels[cell] = Some(id as u32);
            }
        }
        if clutter.len() != agents.len() || clutter.iter().any(|g| g.shape() != (h, w)) {
            return Err(Error::InvalidConfig("clutter grids do not match agents/grid".into()));
        }
        let mut scenario = Scenario {
            config,
            objects,
            agents,
            occupancy,
            labels,
            visibility: Vec::new(),
            quality: Vec::new(),
            clutter,
        };
        scenario.visibility = (0..scenario.agents.len())
            .map(|a| visibility_grid(&scenario, a))
            .collect();
        scenario.quality = (0..scenario.agents.len())
            .map(|a| sensing_quality_grid(&scenario, a))
            .collect();
        Ok(scenario)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Road {
    /// Runs along x (columns), occupies a band of rows.
    EastWest,
    /// Runs along y (rows), occupies a band of columns.
    NorthSouth,
}

struct Layout {
    road_start_row: usize,
    road_start_col: usize,
    lane_width: usize,
}

impl Layout {
    fn new(cfg: &ScenarioConfig) -> Self {
        Self {
            road_start_row: (cfg.grid_h - cfg.road_width) / 2,
            road_start_col: (cfg.grid_w - cfg.road_width) / 2,
            lane_width: cfg.road_width / 4,
        }
    }

    /// First cross-road cell of a lane band of the given thickness, centered in the lane.
    fn lane_offset(&self, road: Road, lane: usize, thickness: usize) -> usize {
        let base = match road {
            Road::EastWest => self.road_start_row,
            Road::NorthSouth => self.road_start_col,
        };
        base + lane * self.lane_width + (self.lane_width - thickness) / 2
    }

    /// Heading for a lane: the first two lanes run in the negative direction.
    fn heading(road: Road, lane: usize) -> f64 {
        use std::f64::consts::{FRAC_PI_2, PI};
        match (road, lane < 2) {
            (Road::EastWest, true) => PI,
            (Road::EastWest, false) => 0.0,
            (Road::NorthSouth, true) => -FRAC_PI_2,
            (Road::NorthSouth, false) => FRAC_PI_2,
        }
    }
}

fn pick_road(rng: &mut ChaCha8Rng) -> Road {
    if rng.random_bool(0.5) {
        Road::EastWest
    } else {
        Road::NorthSouth
    }
}

/// Generates a seeded world. Identical configs yield bit-identical scenarios.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let cfg = config.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let layout = Layout::new(&cfg);
    let (h, w) = (cfg.grid_h, cfg.grid_w);

    let rsu = Pose {
        x: cfg.rsu_x,
        y: cfg.rsu_y,
        vx: 0.0,
        vy: 0.0,
    };
    let mut agents = vec![rsu];
    let mut agent_cells = vec![cfg.cell_at(rsu.x, rsu.y)];

    let mut attempts = 0;
    while agents.len() < cfg.n_cavs + 1 {
        attempts += 1;
        if attempts > cfg.max_placement_attempts {
            return Err(Error::InvalidConfig(
                "could not place CAVs inside the RSU communication range".into(),
            ));
        }
        let road = pick_road(&mut rng);
        let lane = rng.random_range(0..4);
        let across = layout.lane_offset(road, lane, 1);
        let cell = match road {
            Road::EastWest => (across, rng.random_range(0..w)),
            Road::NorthSouth => (rng.random_range(0..h), across),
        };
        if agent_cells.contains(&cell) {
            continue;
        }
        let (x, y) = cfg.cell_center(cell);
        if (x - rsu.x).hypot(y - rsu.y) > cfg.comm_range {
            continue;
        }
        let speed = rng.random_range(cfg.speed_min_kmh..=cfg.speed_max_kmh) / 3.6;
        let heading = Layout::heading(road, lane);
        agents.push(Pose {
            x,
            y,
            vx: speed * heading.cos(),
            vy: speed * heading.sin(),
        });
        agent_cells.push(cell);
    }

    // Cells an object may not touch: agents, and every object cell dilated by one.
    let mut blocked = Grid::filled(h, w, false);
    for &c in &agent_cells {
        blocked[c] = true;
    }
    let mut objects: Vec<SceneObject> = Vec::with_capacity(cfg.n_objects);
    let mut attempts = 0;
    while objects.len() < cfg.n_objects {
        attempts += 1;
        if attempts > cfg.max_placement_attempts {
            return Err(Error::Placement {
                wanted: cfg.n_objects,
                placed: objects.len(),
                attempts: attempts - 1,
            });
        }
        let road = pick_road(&mut rng);
        let lane = rng.random_range(0..4);
        let across = layout.lane_offset(road, lane, cfg.object_width);
        let along_extent = match road {
            Road::EastWest => w,
            Road::NorthSouth => h,
        };
        if cfg.object_length > along_extent {
            return Err(Error::InvalidConfig("object_length exceeds the grid".into()));
        }
        let along = rng.random_range(0..=along_extent - cfg.object_length);
        let mut footprint = Vec::with_capacity(cfg.object_length * cfg.object_width);
        for a in along..along + cfg.object_length {
            for x in across..across + cfg.object_width {
                footprint.push(match road {
                    Road::EastWest => (x, a),
                    Road::NorthSouth => (a, x),
                });
            }
        }
        footprint.sort_unstable();
        if footprint.iter().any(|&c| blocked[c]) {
            continue;
        }
        for &(r, c) in &footprint {
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if blocked.contains(rr, cc) {
                        blocked[(rr as usize, cc as usize)] = true;
                    }
                }
            }
        }
        let n = footprint.len() as f64;
        let (sx, sy) = footprint.iter().fold((0.0, 0.0), |(sx, sy), &cell| {
            let (x, y) = cfg.cell_center(cell);
            (sx + x, sy + y)
        });
        objects.push(SceneObject {
            footprint,
            center: (sx / n, sy / n),
            yaw: Layout::heading(road, lane),
        });
    }

    let clutter = (0..agents.len())
        .map(|_| {
            Grid::from_fn(h, w, |_, _| {
                if cfg.clutter_max > 0.0 {
                    rng.random_range(0.0..cfg.clutter_max)
                } else {
                    0.0
                }
            })
        })
        .collect();

    Scenario::from_parts(cfg, agents, objects, clutter)
}

/// Cells visited by an integer line walk from `from` to `to`, both inclusive.
pub fn line_walk(from: Cell, to: Cell) -> Vec<Cell> {
    let (mut r, mut c) = (from.0 as isize, from.1 as isize);
    let (r1, c1) = (to.0 as isize, to.1 as isize);
    let dr = (r1 - r).abs();
    let dc = -(c1 - c).abs();
    let sr = if r < r1 { 1 } else { -1 };
    let sc = if c < c1 { 1 } else { -1 };
    let mut err = dr + dc;
    let mut out = Vec::with_capacity((dr.max(-dc) + 1) as usize);
    loop {
        out.push((r as usize, c as usize));
        if r == r1 && c == c1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dc {
            err += dc;
            r += sr;
        }
        if e2 <= dr {
            err += dr;
            c += sc;
        }
    }
    out
}

/// Line-of-sight grid for one agent.
///
/// A cell is visible when no cell strictly between the agent and the target
/// on the integer line walk is occupied by an object other than the target's
/// own object. The agent's own cell is always visible.
pub fn visibility_grid(scenario: &Scenario, agent: usize) -> Grid<bool> {
    let (h, w) = scenario.shape();
    let origin = scenario.agent_cell(agent);
    let labels = &scenario.labels;
    Grid::from_fn(h, w, |r, c| {
        let target = (r, c);
        if target == origin {
            return true;
        }
        let own = labels[target];
        let path = line_walk(origin, target);
        path[1..path.len() - 1]
            .iter()
            .all(|&cell| labels[cell].is_none() || labels[cell] == own)
    })
}

/// Sensing quality `q0 · exp(-d/ρ)` on visible cells, zero elsewhere.
pub fn sensing_quality_grid(scenario: &Scenario, agent: usize) -> Grid<f64> {
    let cfg = &scenario.config;
    let vis = if scenario.visibility.len() > agent {
        scenario.visibility[agent].clone()
    } else {
        visibility_grid(scenario, agent)
    };
    let origin = cfg.cell_center(scenario.agent_cell(agent));
    let (h, w) = scenario.shape();
    Grid::from_fn(h, w, |r, c| {
        if !vis[(r, c)] {
            return 0.0;
        }
        let (x, y) = cfg.cell_center((r, c));
        let d = (x - origin.0).hypot(y - origin.1);
        cfg.sensing_base_quality * (-d / cfg.sensing_decay).exp()
    })
}

// ---------------------------------------------------------------------------
// Text fixtures

pub const SCENARIO_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ScenarioFile {
    format: String,
    version: u32,
    config: ScenarioConfig,
    agents: Vec<Pose>,
    objects: Vec<ObjectRecord>,
    grids: GridRecords,
}

#[derive(Serialize, Deserialize)]
struct ObjectRecord {
    center_x: f64,
    center_y: f64,
    yaw: f64,
    /// `"r,c r,c ..."`
    cells: String,
}

#[derive(Serialize, Deserialize)]
struct GridRecords {
    occupancy: Vec<String>,
    visibility: Vec<Vec<String>>,
    quality: Vec<Vec<String>>,
    clutter: Vec<Vec<String>>,
}

/// Encodes one grid row as `value*count` runs separated by spaces.
fn rle_row<T: PartialEq>(row: &[T], fmt: impl Fn(&T) -> String) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < row.len() {
        let mut j = i + 1;
        while j < row.len() && row[j] == row[i] {
            j += 1;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&fmt(&row[i]));
        out.push('*');
        out.push_str(&(j - i).to_string());
        i = j;
    }
    out
}

fn rle_decode<T: Clone>(
    rows: &[String],
    h: usize,
    w: usize,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Grid<T>> {
    let perr = |line: usize, msg: String| Error::Parse { line, msg };
    if rows.len() != h {
        return Err(perr(0, format!("expected {h} rows, found {}", rows.len())));
    }
    let mut data = Vec::with_capacity(h * w);
    for (r, row) in rows.iter().enumerate() {
        let before = data.len();
        for run in row.split_whitespace() {
            let (v, n) = run
                .rsplit_once('*')
                .ok_or_else(|| perr(r, format!("malformed run {run:?}")))?;
            let v = parse(v).ok_or_else(|| perr(r, format!("bad value {v:?}")))?;
            let n: usize = n
                .parse()
                .map_err(|_| perr(r, format!("bad run length {n:?}")))?;
            data.extend(std::iter::repeat_n(v, n));
        }
        if data.len() - before != w {
            return Err(perr(r, format!("row has {} cells, expected {w}", data.len() - before)));
        }
    }
    Ok(Grid::from_vec(h, w, data))
}

fn bool_rows(g: &Grid<bool>) -> Vec<String> {
    (0..g.height())
        .map(|r| rle_row(g.row(r), |&b| if b { "1".into() } else { "0".into() }))
        .collect()
}

fn f64_rows(g: &Grid<f64>) -> Vec<String> {
    (0..g.height())
        .map(|r| rle_row(g.row(r), |v| format!("{v:?}")))
        .collect()
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "0" => Some(false),
        "1" => Some(true),
        _ => None,
    }
}

/// Serializes a scenario to the versioned text fixture format.
pub fn export_scenario(scenario: &Scenario) -> Result<String> {
    let file = ScenarioFile {
        format: "v2i-coop-scenario".into(),
        version: SCENARIO_FORMAT_VERSION,
        config: scenario.config.clone(),
        agents: scenario.agents.clone(),
        objects: scenario
            .objects
            .iter()
            .map(|o| ObjectRecord {
                center_x: o.center.0,
                center_y: o.center.1,
                yaw: o.yaw,
                cells: o
                    .footprint
                    .iter()
                    .map(|(r, c)| format!("{r},{c}"))
                    .collect::<Vec<_>>()
                    .join(" "),
            })
            .collect(),
        grids: GridRecords {
            occupancy: bool_rows(&scenario.occupancy),
            visibility: scenario.visibility.iter().map(bool_rows).collect(),
            quality: scenario.quality.iter().map(f64_rows).collect(),
            clutter: scenario.clutter.iter().map(f64_rows).collect(),
        },
    };
    Ok(format!(
        "# v2i-coop scenario fixture\n{}",
        toml::to_string(&file)?
    ))
}

/// Parses a scenario fixture. Stored grids are checked against the geometry.
pub fn import_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = toml::from_str(text)?;
    if file.format != "v2i-coop-scenario" || file.version != SCENARIO_FORMAT_VERSION {
        return Err(Error::Parse {
            line: 0,
            msg: format!("unsupported format {} v{}", file.format, file.version),
        });
    }
    let cfg = file.config;
    cfg.validate()?;
    let (h, w) = (cfg.grid_h, cfg.grid_w);
    let objects = file
        .objects
        .into_iter()
        .map(|o| {
            let footprint = o
                .cells
                .split_whitespace()
                .map(|rc| {
                    let (r, c) = rc.split_once(',')?;
                    Some((r.parse().ok()?, c.parse().ok()?))
                })
                .collect::<Option<Vec<Cell>>>()
                .ok_or_else(|| Error::Parse {
                    line: 0,
                    msg: format!("bad footprint {:?}", o.cells),
                })?;
            Ok(SceneObject {
                footprint,
                center: (o.center_x, o.center_y),
                yaw: o.yaw,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let clutter = file
        .grids
        .clutter
        .iter()
        .map(|rows| rle_decode(rows, h, w, |s| s.parse::<f64>().ok()))
        .collect::<Result<Vec<_>>>()?;
    let scenario = Scenario::from_parts(cfg, file.agents, objects, clutter)?;

    let occupancy = rle_decode(&file.grids.occupancy, h, w, parse_bool)?;
    let visibility = file
        .grids
        .visibility
        .iter()
        .map(|rows| rle_decode(rows, h, w, parse_bool))
        .collect::<Result<Vec<_>>>()?;
    let quality = file
        .grids
        .quality
        .iter()
        .map(|rows| rle_decode(rows, h, w, |s| s.parse::<f64>().ok()))
        .collect::<Result<Vec<_>>>()?;
    if occupancy != scenario.occupancy || visibility != scenario.visibility || quality != scenario.quality
    {
        return Err(Error::Parse {
            line: 0,
            msg: "stored grids disagree with the stored geometry".into(),
        });
    }
    Ok(scenario)
}
