//! A text rendering of the classic frozen lake gridworld.
//!
//! Boards are square. The agent starts at (0, 0), the goal sits at
//! (n-1, n-1), and every other cell is either ice or a hole. Generation
//! first carves a zig-zag staircase corridor along the diagonal so a safe
//! path always exists, then samples holes among the remaining cells in
//! row-major order.

use super::{Env, EnvError, EnvSpec, StepResult};
use crate::core::{ActionName, Observation};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terrain {
    Start,
    Ice,
    Hole,
    Goal,
}

impl Terrain {
    pub fn name(self) -> &'static str {
        match self {
            Terrain::Start => "start",
            Terrain::Ice => "ice",
            Terrain::Hole => "hole",
            Terrain::Goal => "goal",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "start" => Terrain::Start,
            "ice" => Terrain::Ice,
            "hole" => Terrain::Hole,
            "goal" => Terrain::Goal,
            _ => return None,
        })
    }
}

/// Immutable board layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenLakeBoard {
    n: usize,
    cells: Vec<Terrain>,
}

impl FrozenLakeBoard {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn terrain(&self, r: usize, c: usize) -> Terrain {
        self.cells[r * self.n + c]
    }

    pub fn goal(&self) -> (usize, usize) {
        (self.n - 1, self.n - 1)
    }

    /// Episode step budget for this board size.
    pub fn max_steps(&self) -> usize {
        8 * (self.n - 1)
    }

    pub fn holes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.n {
            for c in 0..self.n {
                if self.terrain(r, c) == Terrain::Hole {
                    out.push((r, c));
                }
            }
        }
        out
    }

    /// Render the observation for standing at (r, c).
    pub fn observe(&self, r: usize, c: usize) -> Observation {
        let text = format!("You are at ({r}, {c}) on {}.", self.terrain(r, c).name());
        Observation::new(text).expect("board observation is non-empty")
    }

    /// One-line prompt description of the environment.
    pub fn description(&self) -> String {
        let n = self.n;
        let m = n - 1;
        format!(
            "You are navigating a {n}x{n} frozen lake grid. You start at (0, 0) and the goal is at ({m}, {m}). \
Every cell is start, ice, hole, or goal. Actions: up, down, left, right. Moving off the grid leaves you in place. \
Stepping onto the goal gives reward +1.0 and ends the episode. Stepping into a hole gives reward -1.0 and ends the episode. \
Every other step gives reward 0.0. The episode also ends after {max} steps. A path to the goal is guaranteed to exist.",
            max = self.max_steps()
        )
    }

    pub fn spec(&self) -> EnvSpec {
        EnvSpec {
            name: format!("frozenlake_{n}x{n}", n = self.n),
            description: self.description(),
            allowed_actions: action_names(),
            max_steps: self.max_steps(),
        }
    }

    /// Serialize to the fixture format: rows of space-separated
    /// `S`, `.`, `H`, `G` tokens.
    pub fn render_fixture(&self) -> String {
        let mut rows = Vec::with_capacity(self.n);
        for r in 0..self.n {
            let row: Vec<&str> = (0..self.n)
                .map(|c| match self.terrain(r, c) {
                    Terrain::Start => "S",
                    Terrain::Ice => ".",
                    Terrain::Hole => "H",
                    Terrain::Goal => "G",
                })
                .collect();
            rows.push(row.join(" "));
        }
        rows.join("\n")
    }

    /// Parse the fixture format produced by [`render_fixture`].
    ///
    /// [`render_fixture`]: FrozenLakeBoard::render_fixture
    pub fn parse_fixture(text: &str) -> Result<Self, EnvError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect();
        let n = rows.len();
        if n < 2 {
            return Err(EnvError::ParseError(format!(
                "board needs at least 2 rows, found {n}"
            )));
        }
        let mut cells = Vec::with_capacity(n * n);
        for (r, row) in rows.iter().enumerate() {
            let tokens: Vec<&str> = row.split_whitespace().collect();
            if tokens.len() != n {
                return Err(EnvError::ParseError(format!(
                    "row {r} has {} cells, expected {n}",
                    tokens.len()
                )));
            }
            for (c, tok) in tokens.iter().enumerate() {
                let terrain = match *tok {
                    "S" => Terrain::Start,
                    "." => Terrain::Ice,
                    "H" => Terrain::Hole,
                    "G" => Terrain::Goal,
                    other => {
                        return Err(EnvError::ParseError(format!(
                            "unknown cell token {other:?} at ({r}, {c})"
                        )))
                    }
                };
                cells.push(terrain);
            }
        }
        let board = Self { n, cells };
        if board.terrain(0, 0) != Terrain::Start {
            return Err(EnvError::ParseError("cell (0, 0) must be S".into()));
        }
        if board.terrain(n - 1, n - 1) != Terrain::Goal {
            return Err(EnvError::ParseError(format!(
                "cell ({m}, {m}) must be G",
                m = n - 1
            )));
        }
        Ok(board)
    }
}

/// Board induced by a list of known hole positions: start at (0, 0), goal
/// at (n-1, n-1), listed cells are holes, every other cell is ice. Hole
/// positions falling on the start or goal (or off the grid) are ignored.
pub fn belief_board(n: usize, holes: &[(usize, usize)]) -> FrozenLakeBoard {
    let mut cells = vec![Terrain::Ice; n * n];
    cells[0] = Terrain::Start;
    cells[n * n - 1] = Terrain::Goal;
    for &(r, c) in holes {
        if (r, c) == (0, 0) || (r, c) == (n - 1, n - 1) || r >= n || c >= n {
            continue;
        }
        cells[r * n + c] = Terrain::Hole;
    }
    FrozenLakeBoard { n, cells }
}

/// The canonical 4x4 board used across tests and examples: nine holes with
/// a single six-step safe path along the diagonal.
pub const LAKE_4X4_FIXTURE: &str = "S . H H\nH . . H\nH H . .\nH H H G";

/// Parse [`LAKE_4X4_FIXTURE`].
pub fn reference_lake() -> FrozenLakeBoard {
    FrozenLakeBoard::parse_fixture(LAKE_4X4_FIXTURE).expect("embedded fixture parses")
}

fn action_names() -> Vec<ActionName> {
    ["up", "down", "left", "right"]
        .iter()
        .map(|a| ActionName::new(*a).unwrap())
        .collect()
}

/// Apply a move with off-grid moves clamped in place.
pub fn apply_move(n: usize, pos: (usize, usize), action: &str) -> Result<(usize, usize), EnvError> {
    let (r, c) = pos;
    Ok(match action {
        "up" => (r.saturating_sub(1), c),
        "down" => ((r + 1).min(n - 1), c),
        "left" => (r, c.saturating_sub(1)),
        "right" => (r, (c + 1).min(n - 1)),
        other => return Err(EnvError::UnknownAction(other.to_string())),
    })
}

/// Parse an observation of the form `You are at (r, c) on terrain.` back
/// into its position and terrain.
pub fn parse_observation(text: &str) -> Option<((usize, usize), Terrain)> {
    let rest = text.strip_prefix("You are at (")?;
    let (r_str, rest) = rest.split_once(", ")?;
    let (c_str, rest) = rest.split_once(") on ")?;
    let terrain_name = rest.strip_suffix('.')?;
    let r = r_str.parse().ok()?;
    let c = c_str.parse().ok()?;
    let terrain = Terrain::from_name(terrain_name)?;
    Some(((r, c), terrain))
}

/// Breadth-first reachability of the goal from the start over non-hole cells.
pub fn is_solvable(board: &FrozenLakeBoard) -> bool {
    let n = board.size();
    let mut seen = vec![false; n * n];
    let mut queue = std::collections::VecDeque::new();
    seen[0] = true;
    queue.push_back((0usize, 0usize));
    while let Some((r, c)) = queue.pop_front() {
        if (r, c) == board.goal() {
            return true;
        }
        for action in ["up", "down", "left", "right"] {
            let (nr, nc) = apply_move(n, (r, c), action).unwrap();
            let idx = nr * n + nc;
            if !seen[idx] && board.terrain(nr, nc) != Terrain::Hole {
                seen[idx] = true;
                queue.push_back((nr, nc));
            }
        }
    }
    false
}

/// Generate a solvable board.
///
/// The safe corridor is the staircase {(i, i)} union {(i, i+1)}; every cell
/// outside it becomes a hole with probability `hole_density`, sampled in
/// row-major order from a stream seeded with `seed`.
pub fn gen_frozen_lake(
    n: usize,
    hole_density: f64,
    seed: u64,
) -> Result<FrozenLakeBoard, EnvError> {
    if n < 2 {
        return Err(EnvError::InvalidArgument(format!(
            "board size must be at least 2, got {n}"
        )));
    }
    if !(0.0..=1.0).contains(&hole_density) {
        return Err(EnvError::InvalidArgument(format!(
            "hole density must lie in [0, 1], got {hole_density}"
        )));
    }
    let mut cells = vec![Terrain::Ice; n * n];
    cells[0] = Terrain::Start;
    cells[n * n - 1] = Terrain::Goal;
    let corridor = |r: usize, c: usize| c == r || c == r + 1;
    let mut rng = SplitMix64::new(seed);
    for r in 0..n {
        for c in 0..n {
            if (r, c) == (0, 0) || (r, c) == (n - 1, n - 1) || corridor(r, c) {
                continue;
            }
            if rng.next_f64() < hole_density {
                cells[r * n + c] = Terrain::Hole;
            }
        }
    }
    let board = FrozenLakeBoard { n, cells };
    debug_assert!(is_solvable(&board));
    Ok(board)
}

/// Episodic wrapper over a board.
#[derive(Debug, Clone)]
pub struct FrozenLakeEnv {
    board: FrozenLakeBoard,
    spec: EnvSpec,
    pos: (usize, usize),
    steps: usize,
    done: bool,
    truncated: bool,
}

impl FrozenLakeEnv {
    pub fn new(board: FrozenLakeBoard) -> Self {
        let spec = board.spec();
        Self {
            board,
            spec,
            pos: (0, 0),
            steps: 0,
            done: false,
            truncated: false,
        }
    }

    pub fn board(&self) -> &FrozenLakeBoard {
        &self.board
    }

    pub fn position(&self) -> (usize, usize) {
        self.pos
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }
}

impl Env for FrozenLakeEnv {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self) -> Observation {
        self.pos = (0, 0);
        self.steps = 0;
        self.done = false;
        self.truncated = false;
        self.board.observe(0, 0)
    }

    fn step(&mut self, action: &ActionName) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::ProtocolViolation(
                "step called after the episode ended".into(),
            ));
        }
        let next = apply_move(self.board.size(), self.pos, action.as_str())?;
        self.pos = next;
        self.steps += 1;
        let terrain = self.board.terrain(next.0, next.1);
        let (reward, terminal) = match terrain {
            Terrain::Goal => (1.0, true),
            Terrain::Hole => (-1.0, true),
            Terrain::Start | Terrain::Ice => (0.0, false),
        };
        let mut done = terminal;
        if !terminal && self.steps >= self.spec.max_steps {
            done = true;
            self.truncated = true;
        }
        self.done = done;
        Ok(StepResult {
            obs: self.board.observe(next.0, next.1),
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observation_parses_back() {
        let board = reference_lake();
        for r in 0..4 {
            for c in 0..4 {
                let obs = board.observe(r, c);
                let ((pr, pc), terrain) = parse_observation(obs.as_str()).unwrap();
                assert_eq!((pr, pc), (r, c));
                assert_eq!(terrain, board.terrain(r, c));
            }
        }
        assert!(parse_observation("You are at (a, b) on ice.").is_none());
        assert!(parse_observation("somewhere else").is_none());
    }

    #[test]
    fn reference_board_layout() {
        let board = reference_lake();
        assert_eq!(board.size(), 4);
        assert_eq!(board.holes().len(), 9);
        assert_eq!(board.terrain(1, 0), Terrain::Hole);
        assert_eq!(board.terrain(0, 1), Terrain::Ice);
        assert_eq!(board.terrain(3, 3), Terrain::Goal);
        assert!(is_solvable(&board));
    }

    #[test]
    fn fixture_round_trip() {
        let board = reference_lake();
        let rendered = board.render_fixture();
        assert_eq!(rendered, LAKE_4X4_FIXTURE);
        let back = FrozenLakeBoard::parse_fixture(&rendered).unwrap();
        assert_eq!(back, board);
    }

    #[test]
    fn full_density_fills_everything_outside_corridor() {
        let board = gen_frozen_lake(4, 1.0, 123).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let corridor = c == r || c == r + 1;
                let expected = if (r, c) == (0, 0) {
                    Terrain::Start
                } else if (r, c) == (3, 3) {
                    Terrain::Goal
                } else if corridor {
                    Terrain::Ice
                } else {
                    Terrain::Hole
                };
                assert_eq!(board.terrain(r, c), expected, "cell ({r}, {c})");
            }
        }
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = gen_frozen_lake(6, 0.7, 99).unwrap();
        let b = gen_frozen_lake(6, 0.7, 99).unwrap();
        let c = gen_frozen_lake(6, 0.7, 100).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_arguments_rejected() {
        assert!(gen_frozen_lake(1, 0.5, 0).is_err());
        assert!(gen_frozen_lake(4, 1.5, 0).is_err());
        assert!(gen_frozen_lake(4, -0.1, 0).is_err());
    }

    #[test]
    fn stepping_into_hole_ends_episode() {
        let mut env = FrozenLakeEnv::new(reference_lake());
        let first = env.reset();
        assert_eq!(first.as_str(), "You are at (0, 0) on start.");
        let result = env.step(&ActionName::new("down").unwrap()).unwrap();
        assert_eq!(result.obs.as_str(), "You are at (1, 0) on hole.");
        assert_eq!(result.reward, -1.0);
        assert!(result.done);
        assert!(!env.truncated());
    }

    #[test]
    fn step_after_done_is_a_protocol_violation() {
        let mut env = FrozenLakeEnv::new(reference_lake());
        env.reset();
        env.step(&ActionName::new("down").unwrap()).unwrap();
        let err = env.step(&ActionName::new("up").unwrap()).unwrap_err();
        assert!(matches!(err, EnvError::ProtocolViolation(_)));
    }

    #[test]
    fn off_grid_moves_stay_in_place() {
        let mut env = FrozenLakeEnv::new(reference_lake());
        env.reset();
        let result = env.step(&ActionName::new("up").unwrap()).unwrap();
        assert_eq!(result.obs.as_str(), "You are at (0, 0) on start.");
        assert_eq!(result.reward, 0.0);
        assert!(!result.done);
    }

    #[test]
    fn budget_exhaustion_truncates_with_zero_reward() {
        let mut env = FrozenLakeEnv::new(reference_lake());
        env.reset();
        assert_eq!(env.spec().max_steps, 24);
        let up = ActionName::new("up").unwrap();
        for i in 0..24 {
            let result = env.step(&up).unwrap();
            if i < 23 {
                assert!(!result.done);
            } else {
                assert!(result.done);
                assert_eq!(result.reward, 0.0);
            }
        }
        assert!(env.truncated());
    }

    #[test]
    fn optimal_path_on_reference_board() {
        let mut env = FrozenLakeEnv::new(reference_lake());
        env.reset();
        let mut total = 0.0;
        let mut steps = 0;
        for action in ["right", "down", "right", "down", "right", "down"] {
            let result = env.step(&ActionName::new(action).unwrap()).unwrap();
            total += result.reward;
            steps += 1;
            if result.done {
                break;
            }
        }
        assert_eq!(steps, 6);
        assert_eq!(total, 1.0);
        assert!(env.done());
        assert!(!env.truncated());
    }

    #[test]
    fn description_promises_solvability() {
        let board = reference_lake();
        assert!(board
            .description()
            .contains("path to the goal is guaranteed"));
    }

    #[test]
    fn solvability_catches_blocked_boards() {
        let text = "S H\nH G";
        let board = FrozenLakeBoard::parse_fixture(text).unwrap();
        assert!(!is_solvable(&board));
    }
}
