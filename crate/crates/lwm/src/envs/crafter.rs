//! A miniature crafting gridworld on a torus.
//!
//! The agent walks a wrap-around grid of grass, tree, stone, iron, and
//! water tiles, collects resources, and works up a recipe chain that ends
//! with an iron pickaxe. Every step costs reward; crafts pay bonuses.

use super::{Env, EnvError, EnvSpec, StepResult};
use crate::core::{ActionName, Observation};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tile {
    Grass,
    Tree,
    Stone,
    Iron,
    Water,
}

impl Tile {
    pub fn name(self) -> &'static str {
        match self {
            Tile::Grass => "grass",
            Tile::Tree => "tree",
            Tile::Stone => "stone",
            Tile::Iron => "iron",
            Tile::Water => "water",
        }
    }

    fn fixture_char(self) -> char {
        match self {
            Tile::Grass => 'g',
            Tile::Tree => 't',
            Tile::Stone => 's',
            Tile::Iron => 'i',
            Tile::Water => 'w',
        }
    }

    fn from_fixture_char(ch: char) -> Option<Self> {
        Some(match ch {
            'g' => Tile::Grass,
            't' => Tile::Tree,
            's' => Tile::Stone,
            'i' => Tile::Iron,
            'w' => Tile::Water,
            _ => return None,
        })
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "grass" => Tile::Grass,
            "tree" => Tile::Tree,
            "stone" => Tile::Stone,
            "iron" => Tile::Iron,
            "water" => Tile::Water,
            _ => return None,
        })
    }

    /// True for tiles that action 4 can collect.
    pub fn is_resource(self) -> bool {
        matches!(self, Tile::Tree | Tile::Stone | Tile::Iron)
    }
}

/// Mutable part of the crafter state: position, inventory, and tools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CrafterState {
    pub pos: (usize, usize),
    pub wood: u32,
    pub stone: u32,
    pub iron: u32,
    pub wood_pickaxe: bool,
    pub stone_pickaxe: bool,
    pub iron_pickaxe: bool,
}

/// Immutable world blueprint: the initial tile layout and agent start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrafterWorld {
    n: usize,
    tiles: Vec<Tile>,
    start: (usize, usize),
}

impl CrafterWorld {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn start(&self) -> (usize, usize) {
        self.start
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn tile(&self, r: usize, c: usize) -> Tile {
        self.tiles[r * self.n + c]
    }

    pub fn max_steps(&self) -> usize {
        4 * self.n * self.n
    }

    pub fn count(&self, tile: Tile) -> usize {
        self.tiles.iter().filter(|t| **t == tile).count()
    }

    pub fn description(&self) -> String {
        let n = self.n;
        format!(
            "You are in a {n}x{n} crafting world whose edges wrap around. Tiles are grass, tree, stone, iron, or water, and every tile is walkable. \
Actions (integers): 0 moves north, 1 moves south, 2 moves east, 3 moves west, \
4 collects the resource on your tile (a tree gives 1 wood, a stone tile gives 1 stone, an iron tile gives 1 iron, and the tile turns to grass), \
5 crafts a wood_pickaxe (requires 3 wood), 6 crafts a stone_pickaxe (requires 1 wood and 3 stone), \
7 crafts an iron_pickaxe (requires a stone_pickaxe, which is consumed, and 3 iron). \
Every step gives reward -1. Crafting adds a bonus on top: +10 for the wood_pickaxe, +20 for the stone_pickaxe, +50 for the iron_pickaxe. \
Collecting or crafting without the requirements does nothing and still costs the step. \
Crafting the iron_pickaxe ends the episode. The episode also ends after {max} steps.",
            max = self.max_steps()
        )
    }

    pub fn spec(&self) -> EnvSpec {
        EnvSpec {
            name: format!("craftermini_{n}x{n}", n = self.n),
            description: self.description(),
            allowed_actions: action_names(),
            max_steps: self.max_steps(),
        }
    }

    /// Serialize to the fixture format: an `agent r c` header line followed
    /// by rows of space-separated tile characters.
    pub fn render_fixture(&self) -> String {
        let mut out = format!("agent {} {}", self.start.0, self.start.1);
        for r in 0..self.n {
            out.push('\n');
            let row: Vec<String> = (0..self.n)
                .map(|c| self.tile(r, c).fixture_char().to_string())
                .collect();
            out.push_str(&row.join(" "));
        }
        out
    }

    pub fn parse_fixture(text: &str) -> Result<Self, EnvError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines
            .next()
            .ok_or_else(|| EnvError::ParseError("empty fixture".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "agent" {
            return Err(EnvError::ParseError(format!(
                "fixture must start with 'agent r c', found {header:?}"
            )));
        }
        let start_r: usize = parts[1]
            .parse()
            .map_err(|_| EnvError::ParseError("bad agent row".into()))?;
        let start_c: usize = parts[2]
            .parse()
            .map_err(|_| EnvError::ParseError("bad agent column".into()))?;
        let rows: Vec<&str> = lines.collect();
        let n = rows.len();
        if n < 2 {
            return Err(EnvError::ParseError(format!(
                "world needs at least 2 rows, found {n}"
            )));
        }
        let mut tiles = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            let tokens: Vec<&str> = row.split_whitespace().collect();
            if tokens.len() != n {
                return Err(EnvError::ParseError(format!(
                    "row {r} has {} tiles, expected {n}",
                    tokens.len()
                )));
            }
            for (c, tok) in tokens.iter().enumerate() {
                if tok.chars().count() != 1 {
                    return Err(EnvError::ParseError(format!(
                        "bad tile token {tok:?} at ({r}, {c})"
                    )));
                }
                let ch = tok.chars().next().unwrap();
                let tile = Tile::from_fixture_char(ch).ok_or_else(|| {
                    EnvError::ParseError(format!("unknown tile {ch:?} at ({r}, {c})"))
                })?;
                tiles.push(tile);
            }
        }
        if start_r >= n || start_c >= n {
            return Err(EnvError::ParseError("agent start outside grid".into()));
        }
        Ok(Self {
            n,
            tiles,
            start: (start_r, start_c),
        })
    }
}

/// The canonical 5x5 world used by tests and examples. It holds enough of
/// every resource to finish the full recipe chain: two trees, three stone
/// tiles, and three iron tiles.
pub const CRAFTER_5X5_FIXTURE: &str = "agent 0 0\ng t g g w\ng g s g s\ng i g t g\ni g g s g\nw g i g g";

/// Parse [`CRAFTER_5X5_FIXTURE`].
pub fn reference_crafter() -> CrafterWorld {
    CrafterWorld::parse_fixture(CRAFTER_5X5_FIXTURE).expect("embedded fixture parses")
}

fn action_names() -> Vec<ActionName> {
    (0..=7)
        .map(|i: u8| ActionName::new(i.to_string()).unwrap())
        .collect()
}

/// Wrap-around neighbor of (r, c) one step in the given compass direction.
pub fn torus_neighbor(n: usize, pos: (usize, usize), direction: u8) -> (usize, usize) {
    let (r, c) = pos;
    match direction {
        0 => ((r + n - 1) % n, c),
        1 => ((r + 1) % n, c),
        2 => (r, (c + 1) % n),
        3 => (r, (c + n - 1) % n),
        other => panic!("bad direction {other}"),
    }
}

/// Advance one step of the crafter dynamics in place.
///
/// Returns (reward, terminal). The step budget is not handled here; the
/// caller owns it.
pub fn step_dynamics(
    n: usize,
    tiles: &mut [Tile],
    state: &mut CrafterState,
    action_id: u8,
) -> (f64, bool) {
    let mut reward = -1.0;
    let mut done = false;
    match action_id {
        0..=3 => {
            state.pos = torus_neighbor(n, state.pos, action_id);
        }
        4 => {
            let idx = state.pos.0 * n + state.pos.1;
            match tiles[idx] {
                Tile::Tree => {
                    state.wood += 1;
                    tiles[idx] = Tile::Grass;
                }
                Tile::Stone => {
                    state.stone += 1;
                    tiles[idx] = Tile::Grass;
                }
                Tile::Iron => {
                    state.iron += 1;
                    tiles[idx] = Tile::Grass;
                }
                Tile::Grass | Tile::Water => {}
            }
        }
        5 => {
            if state.wood >= 3 {
                state.wood -= 3;
                state.wood_pickaxe = true;
                reward += 10.0;
            }
        }
        6 => {
            if state.wood >= 1 && state.stone >= 3 {
                state.wood -= 1;
                state.stone -= 3;
                state.stone_pickaxe = true;
                reward += 20.0;
            }
        }
        7 => {
            if state.stone_pickaxe && state.iron >= 3 {
                state.stone_pickaxe = false;
                state.iron -= 3;
                state.iron_pickaxe = true;
                reward += 50.0;
                done = true;
            }
        }
        other => panic!("bad action id {other}"),
    }
    (reward, done)
}

/// Render the fixed-format observation for the given tiles and state.
pub fn render_observation(n: usize, tiles: &[Tile], state: &CrafterState) -> Observation {
    let (r, c) = state.pos;
    let at = |p: (usize, usize)| tiles[p.0 * n + p.1].name();
    let mut tools = Vec::new();
    if state.wood_pickaxe {
        tools.push("wood_pickaxe");
    }
    if state.stone_pickaxe {
        tools.push("stone_pickaxe");
    }
    if state.iron_pickaxe {
        tools.push("iron_pickaxe");
    }
    let tools = if tools.is_empty() {
        "none".to_string()
    } else {
        tools.join(", ")
    };
    let text = format!(
        "You are on {tile} at ({r}, {c}). North: {north}, South: {south}, East: {east}, West: {west}. \
Inventory: wood={wood}, stone={stone}, iron={iron}. Tools: {tools}.",
        tile = at((r, c)),
        north = at(torus_neighbor(n, (r, c), 0)),
        south = at(torus_neighbor(n, (r, c), 1)),
        east = at(torus_neighbor(n, (r, c), 2)),
        west = at(torus_neighbor(n, (r, c), 3)),
        wood = state.wood,
        stone = state.stone,
        iron = state.iron,
    );
    Observation::new(text).expect("crafter observation is non-empty")
}

/// Tiles visible from an observation: the agent's own tile followed by
/// its north, south, east, and west neighbors.
pub type VisibleTiles = [Tile; 5];

/// Parse an observation produced by [`render_observation`] back into the
/// agent state and the five visible tiles.
pub fn parse_observation(text: &str) -> Option<(CrafterState, VisibleTiles)> {
    let rest = text.strip_prefix("You are on ")?;
    let (here_name, rest) = rest.split_once(" at (")?;
    let (r_str, rest) = rest.split_once(", ")?;
    let (c_str, rest) = rest.split_once("). North: ")?;
    let (north_name, rest) = rest.split_once(", South: ")?;
    let (south_name, rest) = rest.split_once(", East: ")?;
    let (east_name, rest) = rest.split_once(", West: ")?;
    let (west_name, rest) = rest.split_once(". Inventory: wood=")?;
    let (wood_str, rest) = rest.split_once(", stone=")?;
    let (stone_str, rest) = rest.split_once(", iron=")?;
    let (iron_str, rest) = rest.split_once(". Tools: ")?;
    let tools_str = rest.strip_suffix('.')?;

    let mut state = CrafterState {
        pos: (r_str.parse().ok()?, c_str.parse().ok()?),
        wood: wood_str.parse().ok()?,
        stone: stone_str.parse().ok()?,
        iron: iron_str.parse().ok()?,
        ..CrafterState::default()
    };
    if tools_str != "none" {
        for tool in tools_str.split(", ") {
            match tool {
                "wood_pickaxe" => state.wood_pickaxe = true,
                "stone_pickaxe" => state.stone_pickaxe = true,
                "iron_pickaxe" => state.iron_pickaxe = true,
                _ => return None,
            }
        }
    }
    let visible = [
        Tile::from_name(here_name)?,
        Tile::from_name(north_name)?,
        Tile::from_name(south_name)?,
        Tile::from_name(east_name)?,
        Tile::from_name(west_name)?,
    ];
    Some((state, visible))
}

/// Generate a world with at least one tree, stone, and iron tile.
pub fn gen_crafter(n: usize, seed: u64) -> Result<CrafterWorld, EnvError> {
    if n < 2 {
        return Err(EnvError::InvalidArgument(format!(
            "world size must be at least 2, got {n}"
        )));
    }
    let mut rng = SplitMix64::new(seed);
    let mut tiles = Vec::with_capacity(n * n);
    for _ in 0..n * n {
        let x = rng.next_f64();
        let tile = if x < 0.55 {
            Tile::Grass
        } else if x < 0.70 {
            Tile::Tree
        } else if x < 0.82 {
            Tile::Stone
        } else if x < 0.90 {
            Tile::Iron
        } else {
            Tile::Water
        };
        tiles.push(tile);
    }
    for required in [Tile::Tree, Tile::Stone, Tile::Iron] {
        if tiles.iter().any(|t| *t == required) {
            continue;
        }
        // Overwrite a cell that is not the sole copy of another required
        // resource. Candidates are enumerated row-major for determinism.
        let candidates: Vec<usize> = (0..tiles.len())
            .filter(|&idx| {
                let t = tiles[idx];
                !t.is_resource() || tiles.iter().filter(|x| **x == t).count() >= 2
            })
            .collect();
        let pick = candidates[rng.next_below(candidates.len() as u64) as usize];
        tiles[pick] = required;
    }
    Ok(CrafterWorld {
        n,
        tiles,
        start: (0, 0),
    })
}

/// Episodic wrapper over a world blueprint.
#[derive(Debug, Clone)]
pub struct CrafterEnv {
    world: CrafterWorld,
    spec: EnvSpec,
    tiles: Vec<Tile>,
    state: CrafterState,
    steps: usize,
    done: bool,
    truncated: bool,
}

impl CrafterEnv {
    pub fn new(world: CrafterWorld) -> Self {
        let spec = world.spec();
        let tiles = world.tiles.clone();
        let state = CrafterState {
            pos: world.start,
            ..CrafterState::default()
        };
        Self {
            world,
            spec,
            tiles,
            state,
            steps: 0,
            done: false,
            truncated: false,
        }
    }

    pub fn world(&self) -> &CrafterWorld {
        &self.world
    }

    pub fn state(&self) -> &CrafterState {
        &self.state
    }

    pub fn current_tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }
}

impl Env for CrafterEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Observation {
        self.tiles = self.world.tiles.clone();
        self.state = CrafterState {
            pos: self.world.start,
            ..CrafterState::default()
        };
        self.steps = 0;
        self.done = false;
        self.truncated = false;
        render_observation(self.world.n, &self.tiles, &self.state)
    }

    fn step(&mut self, action: &ActionName) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::ProtocolViolation(
                "step called after the episode ended".into(),
            ));
        }
        let action_id: u8 = action
            .as_str()
            .parse()
            .map_err(|_| EnvError::UnknownAction(action.as_str().to_string()))?;
        if action_id > 7 {
            return Err(EnvError::UnknownAction(action.as_str().to_string()));
        }
        self.steps += 1;
        let (reward, terminal) =
            step_dynamics(self.world.n, &mut self.tiles, &mut self.state, action_id);
        let mut done = terminal;
        if !terminal && self.steps >= self.spec.max_steps {
            done = true;
            self.truncated = true;
        }
        self.done = done;
        Ok(StepResult {
            obs: render_observation(self.world.n, &self.tiles, &self.state),
            reward,
            done,
        })
    }

    fn done(&self) -> bool {
        self.done
    }

    fn truncated(&self) -> bool {
        self.truncated
    }
}
