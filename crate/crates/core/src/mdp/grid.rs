use crate::error::{Error, Result};

use super::{MdpSpec, StateId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Wall,
    Free,
    Start,
    Goal,
    Trap,
}

impl Cell {
    fn from_char(c: char) -> Option<Cell> {
        match c {
            '#' | 'w' => Some(Cell::Wall),
            '.' | ' ' => Some(Cell::Free),
            'S' => Some(Cell::Start),
            'G' => Some(Cell::Goal),
            'T' => Some(Cell::Trap),
            _ => None,
        }
    }

    fn to_char(self) -> char {
        match self {
            Cell::Wall => '#',
            Cell::Free => '.',
            Cell::Start => 'S',
            Cell::Goal => 'G',
            Cell::Trap => 'T',
        }
    }
}

/// The four compass moves, in action-id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridAction {
    Up,
    Down,
    Left,
    Right,
}

impl GridAction {
    pub const ALL: [GridAction; 4] = [GridAction::Up, GridAction::Down, GridAction::Left, GridAction::Right];

    fn delta(self) -> (isize, isize) {
        match self {
            GridAction::Up => (0, -1),
            GridAction::Down => (0, 1),
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
        }
    }
}

/// A rectangular grid of cells. Every non-wall cell is a state, numbered in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    goal_reward: f64,
    trap_penalty: f64,
    state_of: Vec<Option<StateId>>,
    position: Vec<(usize, usize)>,
}

impl GridLayout {
    /// Parses an ASCII map: `#` wall, `.` free, `S` start, `G` goal, `T` trap.
    pub fn parse(map: &str, goal_reward: f64, trap_penalty: f64) -> Result<Self> {
        let lines: Vec<&str> = map.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
        let height = lines.len();
        let width = lines.first().map_or(0, |l| l.chars().count());
        let mut cells = Vec::with_capacity(width * height);
        for (i, line) in lines.iter().enumerate() {
            if line.chars().count() != width {
                return Err(Error::parse(i + 1, "ragged grid row"));
            }
            for c in line.chars() {
                cells.push(Cell::from_char(c).ok_or_else(|| Error::parse(i + 1, format!("unknown cell {c:?}")))?);
            }
        }
        Self::from_cells(width, height, cells, goal_reward, trap_penalty)
    }

    pub fn from_cells(
        width: usize,
        height: usize,
        cells: Vec<Cell>,
        goal_reward: f64,
        trap_penalty: f64,
    ) -> Result<Self> {
        if cells.len() != width * height {
            return Err(Error::DimensionMismatch { expected: width * height, actual: cells.len() });
        }
        if !cells.contains(&Cell::Start) || !cells.contains(&Cell::Goal) {
            return Err(Error::InvalidMdp("grid needs at least one start and one goal cell".into()));
        }
        let mut state_of = vec![None; cells.len()];
        let mut position = Vec::new();
        for (i, cell) in cells.iter().enumerate() {
            if *cell != Cell::Wall {
                state_of[i] = Some(position.len());
                position.push((i % width, i / width));
            }
        }
        Ok(GridLayout { width, height, cells, goal_reward, trap_penalty, state_of, position })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn goal_reward(&self) -> f64 {
        self.goal_reward
    }

    pub fn trap_penalty(&self) -> f64 {
        self.trap_penalty
    }

    pub fn num_states(&self) -> usize {
        self.position.len()
    }

    pub fn cell(&self, x: usize, y: usize) -> Cell {
        self.cells[y * self.width + x]
    }

    pub fn state_at(&self, x: usize, y: usize) -> Option<StateId> {
        if x >= self.width || y >= self.height {
            return None;
        }
        self.state_of[y * self.width + x]
    }

    /// `(x, y)` of a state.
    pub fn position(&self, s: StateId) -> (usize, usize) {
        self.position[s]
    }

    pub fn cell_of(&self, s: StateId) -> Cell {
        let (x, y) = self.position[s];
        self.cell(x, y)
    }

    pub fn states_of_kind(&self, kind: Cell) -> Vec<StateId> {
        (0..self.num_states()).filter(|&s| self.cell_of(s) == kind).collect()
    }

    /// Cell reached by moving from `s`; walls and the border keep the agent in place.
    pub fn move_from(&self, s: StateId, action: GridAction) -> StateId {
        let (x, y) = self.position[s];
        let (dx, dy) = action.delta();
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        if nx < 0 || ny < 0 {
            return s;
        }
        self.state_at(nx as usize, ny as usize).unwrap_or(s)
    }

    /// Manhattan-neighbour shortest-path distances from `from`.
    pub fn bfs_distances(&self, from: StateId) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.num_states()];
        let mut queue = std::collections::VecDeque::from([from]);
        dist[from] = Some(0);
        while let Some(s) = queue.pop_front() {
            let d = dist[s].unwrap_or(0);
            for a in GridAction::ALL {
                let n = self.move_from(s, a);
                if dist[n].is_none() {
                    dist[n] = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(self.cell(x, y).to_char());
            }
            out.push('\n');
        }
        out
    }

    /// Builds the MDP: four actions, with probability `noise` the chosen
    /// action is replaced by a uniformly random one. Goal cells are absorbing
    /// terminals; goal and trap rewards are paid on arrival.
    pub fn to_mdp(&self, name: &str, noise: f64, gamma: f64, max_steps: usize) -> Result<MdpSpec> {
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::InvalidMdp(format!("action noise {noise} outside [0, 1]")));
        }
        let n = self.num_states();
        let na = GridAction::ALL.len();
        let mut transition = vec![0.0; n * na * n];
        let mut terminal = vec![false; n];
        let mut arrival = vec![0.0; n];
        for s in 0..n {
            match self.cell_of(s) {
                Cell::Goal => {
                    terminal[s] = true;
                    arrival[s] = self.goal_reward;
                }
                Cell::Trap => arrival[s] = self.trap_penalty,
                _ => {}
            }
        }
        for s in 0..n {
            for (a, &intended) in GridAction::ALL.iter().enumerate() {
                let row = &mut transition[(s * na + a) * n..(s * na + a + 1) * n];
                if terminal[s] {
                    row[s] = 1.0;
                    continue;
                }
                for &actual in &GridAction::ALL {
                    let mut p = noise / na as f64;
                    if actual == intended {
                        p += 1.0 - noise;
                    }
                    row[self.move_from(s, actual)] += p;
                }
            }
        }
        let starts = self.states_of_kind(Cell::Start);
        let mut start = vec![0.0; n];
        for &s in &starts {
            start[s] = 1.0 / starts.len() as f64;
        }
        Ok(MdpSpec::with_arrival(name, n, na, transition, vec![0.0; n * na], arrival, gamma, start, terminal, max_steps)?
            .with_layout(self.clone()))
    }
}
