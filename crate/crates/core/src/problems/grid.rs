//! ASCII grid maps: `.` is a white (free) cell, `#` a black cell or obstacle.
//!
//! Coordinates are `(x, y)` with `y` counted from the top row; cells are
//! stored row-major.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedGrid { row: usize, expected: usize, found: usize },
    #[error("unknown character {ch:?} at row {row}, column {col}")]
    UnknownCharacter { ch: char, row: usize, col: usize },
    #[error("grid has no cells")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    North,
    South,
    East,
    West,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::South, Dir::East, Dir::West];

    pub fn name(self) -> &'static str {
        match self {
            Dir::North => "n",
            Dir::South => "s",
            Dir::East => "e",
            Dir::West => "w",
        }
    }

    fn delta(self) -> (i64, i64) {
        match self {
            Dir::North => (0, -1),
            Dir::South => (0, 1),
            Dir::East => (1, 0),
            Dir::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    /// `true` for black cells, row-major.
    pub cells: Vec<bool>,
    pub toric: bool,
}

impl GridSpec {
    pub fn new(width: usize, height: usize, toric: bool) -> Self {
        assert!(width >= 1 && height >= 1, "grid dimensions must be positive");
        Self { width, height, cells: vec![false; width * height], toric }
    }

    pub fn with_toric(mut self, toric: bool) -> Self {
        self.toric = toric;
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.width, i / self.width)
    }

    pub fn is_black(&self, x: usize, y: usize) -> bool {
        self.cells[self.index(x, y)]
    }

    pub fn set_black(&mut self, x: usize, y: usize, black: bool) {
        let i = self.index(x, y);
        self.cells[i] = black;
    }

    pub fn black_cells(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter(|&i| self.cells[i]).map(|i| self.coords(i)).collect()
    }

    /// The neighbor of cell `i` in direction `d`: wraps around on a torus,
    /// `None` past the border otherwise.
    pub fn neighbor(&self, i: usize, d: Dir) -> Option<usize> {
        let (x, y) = self.coords(i);
        let (dx, dy) = d.delta();
        let (w, h) = (self.width as i64, self.height as i64);
        let (mut nx, mut ny) = (x as i64 + dx, y as i64 + dy);
        if self.toric {
            nx = nx.rem_euclid(w);
            ny = ny.rem_euclid(h);
        } else if nx < 0 || ny < 0 || nx >= w || ny >= h {
            return None;
        }
        Some(self.index(nx as usize, ny as usize))
    }

    /// Distinct cells adjacent to `i` (fewer than 4 on tiny tori or at borders).
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        let mut out: Vec<usize> = Dir::ALL.iter().filter_map(|&d| self.neighbor(i, d)).filter(|&j| j != i).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn to_ascii(&self) -> String {
        let mut s = String::with_capacity((self.width + 1) * self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                s.push(if self.is_black(x, y) { '#' } else { '.' });
            }
            s.push('\n');
        }
        s
    }
}

/// Parses a map into a toric [`GridSpec`]. Blank lines are skipped and
/// trailing whitespace is ignored.
pub fn parse_grid(text: &str) -> Result<GridSpec, GridError> {
    let rows: Vec<&str> = text.lines().map(str::trim_end).filter(|l| !l.is_empty()).collect();
    let width = rows.first().map(|r| r.chars().count()).ok_or(GridError::Empty)?;
    let mut cells = Vec::with_capacity(width * rows.len());
    for (row, line) in rows.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(GridError::RaggedGrid { row, expected: width, found });
        }
        for (col, ch) in line.chars().enumerate() {
            cells.push(match ch {
                '.' => false,
                '#' => true,
                _ => return Err(GridError::UnknownCharacter { ch, row, col }),
            });
        }
    }
    Ok(GridSpec { width, height: rows.len(), cells, toric: true })
}

pub const MAZE_CROSS: &str = include_str!("../../fixtures/maps/maze_cross.txt");
pub const MAZE_LINES: &str = include_str!("../../fixtures/maps/maze_lines.txt");
pub const MAZE_HOLE: &str = include_str!("../../fixtures/maps/maze_hole.txt");
pub const MAZE_DOTS: &str = include_str!("../../fixtures/maps/maze_dots.txt");
pub const GRID_X: &str = include_str!("../../fixtures/maps/grid_x.txt");
pub const SEEK_AND_SEEK: &str = include_str!("../../fixtures/maps/seek_and_seek.txt");

/// MazeDots on an `n×n` torus: the three 6×6 dots scaled to the new size.
pub fn maze_dots(n: usize) -> GridSpec {
    let base = parse_grid(MAZE_DOTS).expect("shipped fixture parses");
    if n == base.width {
        return base;
    }
    let mut g = GridSpec::new(n, n, true);
    for (x, y) in base.black_cells() {
        g.set_black(x * n / base.width, y * n / base.height, true);
    }
    g
}
