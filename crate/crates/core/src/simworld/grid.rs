//! Occupancy grids: fixture parsing, procedural multi-room layouts,
//! breadth-first geodesic distances and grid line of sight.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::WorldError;
use crate::executive::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn manhattan(&self, other: &Cell) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tile {
    Free,
    Wall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
    cell_size: f64,
}

impl GridMap {
    /// All-wall map.
    pub fn filled(width: usize, height: usize, cell_size: f64) -> Self {
        Self {
            width,
            height,
            tiles: vec![Tile::Wall; width * height],
            cell_size,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    #[inline]
    pub fn index(&self, c: Cell) -> usize {
        c.y * self.width + c.x
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height
    }

    pub fn tile(&self, c: Cell) -> Tile {
        self.tiles[self.index(c)]
    }

    pub fn set(&mut self, c: Cell, t: Tile) {
        let i = self.index(c);
        self.tiles[i] = t;
    }

    #[inline]
    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && self.tiles[self.index(c)] == Tile::Free
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.tiles.len())
            .filter(|&i| self.tiles[i] == Tile::Free)
            .map(|i| self.cell_at(i))
    }

    /// Cell center in meters.
    pub fn to_point(&self, c: Cell) -> Point2 {
        Point2::new(
            (c.x as f64 + 0.5) * self.cell_size,
            (c.y as f64 + 0.5) * self.cell_size,
        )
    }

    /// 4-connected free neighbours in fixed order (E, W, S, N).
    #[inline]
    pub fn neighbours(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        let cand = [
            (c.x + 1 < self.width).then(|| Cell::new(c.x + 1, c.y)),
            (c.x > 0).then(|| Cell::new(c.x - 1, c.y)),
            (c.y + 1 < self.height).then(|| Cell::new(c.x, c.y + 1)),
            (c.y > 0).then(|| Cell::new(c.x, c.y - 1)),
        ];
        cand.into_iter()
            .flatten()
            .filter(move |n| self.tiles[self.index(*n)] == Tile::Free)
    }

    pub fn border_is_walled(&self) -> bool {
        (0..self.width).all(|x| {
            self.tile(Cell::new(x, 0)) == Tile::Wall
                && self.tile(Cell::new(x, self.height - 1)) == Tile::Wall
        }) && (0..self.height).all(|y| {
            self.tile(Cell::new(0, y)) == Tile::Wall
                && self.tile(Cell::new(self.width - 1, y)) == Tile::Wall
        })
    }

    /// Text rendering, `#` walls and `.` free cells.
    pub fn render(&self) -> Vec<Vec<char>> {
        (0..self.height)
            .map(|y| {
                (0..self.width)
                    .map(|x| match self.tile(Cell::new(x, y)) {
                        Tile::Wall => '#',
                        Tile::Free => '.',
                    })
                    .collect()
            })
            .collect()
    }
}

/// Breadth-first step counts from one source cell. `u32::MAX` marks
/// unreachable cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceField {
    source: Cell,
    steps: Vec<u32>,
    cell_size: f64,
}

pub const UNREACHABLE: u32 = u32::MAX;

impl DistanceField {
    pub fn compute(map: &GridMap, source: Cell) -> Self {
        let mut steps = vec![UNREACHABLE; map.len()];
        if map.is_free(source) {
            let mut queue = VecDeque::new();
            steps[map.index(source)] = 0;
            queue.push_back(source);
            while let Some(c) = queue.pop_front() {
                let next = steps[map.index(c)] + 1;
                for n in map.neighbours(c) {
                    let i = map.index(n);
                    if steps[i] == UNREACHABLE {
                        steps[i] = next;
                        queue.push_back(n);
                    }
                }
            }
        }
        Self {
            source,
            steps,
            cell_size: map.cell_size(),
        }
    }

    pub fn source(&self) -> Cell {
        self.source
    }

    pub fn steps(&self, map: &GridMap, c: Cell) -> u32 {
        self.steps[map.index(c)]
    }

    /// Meters, `f64::INFINITY` when unreachable.
    pub fn meters(&self, map: &GridMap, c: Cell) -> f64 {
        match self.steps(map, c) {
            UNREACHABLE => f64::INFINITY,
            s => s as f64 * self.cell_size,
        }
    }

    /// The neighbour of `c` that is strictly closer to the source, if any.
    pub fn descend(&self, map: &GridMap, c: Cell) -> Option<Cell> {
        let here = self.steps(map, c);
        if here == UNREACHABLE || here == 0 {
            return None;
        }
        map.neighbours(c).find(|n| self.steps(map, *n) < here)
    }
}

/// Shortest 4-connected path length in meters; `f64::INFINITY` if the cells
/// are disconnected.
pub fn geodesic_distance(map: &GridMap, from: Cell, to: Cell) -> Result<f64, WorldError> {
    for c in [from, to] {
        if !map.is_free(c) {
            return Err(WorldError::OccupiedCell(c));
        }
    }
    Ok(DistanceField::compute(map, to).meters(map, from))
}

/// Integer ray cast: true when no wall lies on the Bresenham line between the
/// two cells. Symmetric in its arguments.
pub fn line_of_sight(map: &GridMap, a: Cell, b: Cell) -> bool {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    let (mut x, mut y) = (a.x as i64, a.y as i64);
    let (x1, y1) = (b.x as i64, b.y as i64);
    let dx = (x1 - x).abs();
    let dy = -(y1 - y).abs();
    let sx = if x < x1 { 1 } else { -1 };
    let sy = if y < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        if !map.is_free(Cell::new(x as usize, y as usize)) {
            return false;
        }
        if x == x1 && y == y1 {
            return true;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Number of free cells reachable from `start`.
pub fn reachable_count(map: &GridMap, start: Cell) -> usize {
    let field = DistanceField::compute(map, start);
    field.steps.iter().filter(|&&s| s != UNREACHABLE).count()
}

/// A fixture map parsed from the text grid format.
#[derive(Debug, Clone, PartialEq)]
pub struct FixtureMap {
    pub map: GridMap,
    pub spawn: Cell,
    /// Goal digit (1-9) to cell.
    pub goals: BTreeMap<u8, Cell>,
}

/// Parse the plain-text grid format: `#` wall, `.` free, `S` spawn, digits
/// `1`-`9` goal positions (free cells). Blank lines and surrounding
/// whitespace are ignored; all rows must have equal width.
pub fn parse_fixture(text: &str, cell_size: f64) -> Result<FixtureMap, WorldError> {
    let rows: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if rows.is_empty() {
        return Err(WorldError::Fixture("empty map".into()));
    }
    let width = rows[0].chars().count();
    let height = rows.len();
    let mut map = GridMap::filled(width, height, cell_size);
    let mut spawn = None;
    let mut goals = BTreeMap::new();
    for (y, row) in rows.iter().enumerate() {
        if row.chars().count() != width {
            return Err(WorldError::Fixture(format!(
                "row {y} has {} columns, expected {width}",
                row.chars().count()
            )));
        }
        for (x, ch) in row.chars().enumerate() {
            let c = Cell::new(x, y);
            match ch {
                '#' => {}
                '.' => map.set(c, Tile::Free),
                'S' => {
                    map.set(c, Tile::Free);
                    if spawn.replace(c).is_some() {
                        return Err(WorldError::Fixture("more than one spawn".into()));
                    }
                }
                '1'..='9' => {
                    map.set(c, Tile::Free);
                    let id = ch as u8 - b'0';
                    if goals.insert(id, c).is_some() {
                        return Err(WorldError::Fixture(format!("goal {id} appears twice")));
                    }
                }
                other => {
                    return Err(WorldError::Fixture(format!(
                        "unexpected character {other:?} at ({x}, {y})"
                    )))
                }
            }
        }
    }
    if !map.border_is_walled() {
        return Err(WorldError::Fixture("border cells must be walls".into()));
    }
    let spawn = spawn.ok_or_else(|| WorldError::Fixture("missing spawn `S`".into()))?;
    Ok(FixtureMap { map, spawn, goals })
}

/// Parameters of the procedural rooms-and-doors generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MapParams {
    pub rooms_x: usize,
    pub rooms_y: usize,
    /// Interior side length of a room, cells.
    pub room_size: usize,
    pub door_width: usize,
    /// Probability of a door on each non-tree wall between adjacent rooms.
    pub door_density: f64,
    /// Obstacle blocks placed per room.
    pub clutter_per_room: usize,
    pub cell_size: f64,
}

impl Default for MapParams {
    fn default() -> Self {
        Self {
            rooms_x: 4,
            rooms_y: 3,
            room_size: 14,
            door_width: 2,
            door_density: 0.25,
            clutter_per_room: 2,
            cell_size: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    pub x0: usize,
    pub y0: usize,
    pub size: usize,
}

impl Room {
    pub fn contains(&self, c: Cell) -> bool {
        c.x >= self.x0 && c.x < self.x0 + self.size && c.y >= self.y0 && c.y < self.y0 + self.size
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Door {
    pub rooms: (usize, usize),
    pub cells: Vec<Cell>,
}

/// A generated layout: the grid plus its room and door structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub map: GridMap,
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
}

impl Layout {
    pub fn room_of(&self, c: Cell) -> Option<usize> {
        self.rooms.iter().position(|r| r.contains(c))
    }

    /// Wall up every door of `room`.
    pub fn seal(&mut self, room: usize) {
        for door in self.doors.iter().filter(|d| d.rooms.0 == room || d.rooms.1 == room) {
            for &c in &door.cells {
                self.map.set(c, Tile::Wall);
            }
        }
    }

    /// Whether sealing `room` keeps every other room mutually reachable.
    pub fn can_seal(&self, room: usize) -> bool {
        let mut trial = self.clone();
        trial.seal(room);
        let Some(anchor) = self
            .rooms
            .iter()
            .enumerate()
            .find(|(i, _)| *i != room)
            .map(|(_, r)| Cell::new(r.x0, r.y0))
        else {
            return false;
        };
        let inside = trial
            .map
            .free_cells()
            .filter(|c| self.rooms[room].contains(*c))
            .count();
        let total = trial.map.free_cells().count();
        reachable_count(&trial.map, anchor) == total - inside
    }
}

/// Rooms on a regular lattice joined by a random spanning tree of doors plus
/// extra doors at `door_density`, then cluttered with 2x2 obstacles that
/// never disconnect the free space.
pub fn generate_layout<R: Rng + ?Sized>(params: &MapParams, rng: &mut R) -> Layout {
    let pitch = params.room_size + 1;
    let width = params.rooms_x * pitch + 1;
    let height = params.rooms_y * pitch + 1;
    let mut map = GridMap::filled(width, height, params.cell_size);
    let mut rooms = Vec::with_capacity(params.rooms_x * params.rooms_y);
    for ry in 0..params.rooms_y {
        for rx in 0..params.rooms_x {
            let room = Room {
                x0: rx * pitch + 1,
                y0: ry * pitch + 1,
                size: params.room_size,
            };
            for y in room.y0..room.y0 + room.size {
                for x in room.x0..room.x0 + room.size {
                    map.set(Cell::new(x, y), Tile::Free);
                }
            }
            rooms.push(room);
        }
    }

    let idx = |rx: usize, ry: usize| ry * params.rooms_x + rx;
    // Adjacent room pairs, each as (a, b) with a < b.
    let mut pairs = Vec::new();
    for ry in 0..params.rooms_y {
        for rx in 0..params.rooms_x {
            if rx + 1 < params.rooms_x {
                pairs.push((idx(rx, ry), idx(rx + 1, ry)));
            }
            if ry + 1 < params.rooms_y {
                pairs.push((idx(rx, ry), idx(rx, ry + 1)));
            }
        }
    }

    // Randomized depth-first spanning tree over rooms.
    let n = rooms.len();
    let mut in_tree = vec![false; n];
    let mut tree = Vec::new();
    let mut stack = vec![rng.random_range(0..n)];
    in_tree[stack[0]] = true;
    while let Some(&cur) = stack.last() {
        let mut options: Vec<(usize, usize)> = pairs
            .iter()
            .filter_map(|&(a, b)| {
                let fresh = (a == cur && !in_tree[b]) || (b == cur && !in_tree[a]);
                fresh.then_some((a, b))
            })
            .collect();
        if options.is_empty() {
            stack.pop();
            continue;
        }
        options.shuffle(rng);
        let (a, b) = options[0];
        let next = if a == cur { b } else { a };
        in_tree[next] = true;
        tree.push((a, b));
        stack.push(next);
    }
    let mut door_pairs = tree.clone();
    for &p in &pairs {
        if !tree.contains(&p) && rng.random_bool(params.door_density.clamp(0.0, 1.0)) {
            door_pairs.push(p);
        }
    }
    door_pairs.sort_unstable();

    let door_width = params.door_width.clamp(1, params.room_size);
    let mut doors = Vec::with_capacity(door_pairs.len());
    for (a, b) in door_pairs {
        let ra = rooms[a];
        let rb = rooms[b];
        let offset = rng.random_range(0..=params.room_size - door_width);
        let cells: Vec<Cell> = if rb.x0 > ra.x0 {
            let x = ra.x0 + ra.size;
            (0..door_width).map(|k| Cell::new(x, ra.y0 + offset + k)).collect()
        } else {
            let y = ra.y0 + ra.size;
            (0..door_width).map(|k| Cell::new(ra.x0 + offset + k, y)).collect()
        };
        for &c in &cells {
            map.set(c, Tile::Free);
        }
        doors.push(Door {
            rooms: (a, b),
            cells,
        });
    }

    let mut layout = Layout { map, rooms, doors };
    add_clutter(&mut layout, params, rng);
    layout
}

fn add_clutter<R: Rng + ?Sized>(layout: &mut Layout, params: &MapParams, rng: &mut R) {
    if params.room_size < 6 {
        return;
    }
    let door_cells: Vec<Cell> = layout.doors.iter().flat_map(|d| d.cells.clone()).collect();
    let total_free = layout.map.free_cells().count();
    let mut free_now = total_free;
    for r in 0..layout.rooms.len() {
        let room = layout.rooms[r];
        for _ in 0..params.clutter_per_room {
            let x = room.x0 + rng.random_range(1..room.size - 2);
            let y = room.y0 + rng.random_range(1..room.size - 2);
            let block = [
                Cell::new(x, y),
                Cell::new(x + 1, y),
                Cell::new(x, y + 1),
                Cell::new(x + 1, y + 1),
            ];
            let near_door = block
                .iter()
                .any(|b| door_cells.iter().any(|d| d.manhattan(b) <= 2));
            if near_door || block.iter().any(|b| !layout.map.is_free(*b)) {
                continue;
            }
            for b in block {
                layout.map.set(b, Tile::Wall);
            }
            let anchor = layout
                .map
                .free_cells()
                .next()
                .expect("map keeps free cells");
            if reachable_count(&layout.map, anchor) == free_now - 4 {
                free_now -= 4;
            } else {
                for b in block {
                    layout.map.set(b, Tile::Free);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const CORRIDOR: &str = "
        ############
        #S.........#
        ############
    ";

    #[test]
    fn parse_corridor() {
        let f = parse_fixture(CORRIDOR, 0.25).unwrap();
        assert_eq!(f.map.width(), 12);
        assert_eq!(f.map.height(), 3);
        assert_eq!(f.spawn, Cell::new(1, 1));
        assert!(f.goals.is_empty());
    }

    #[test]
    fn geodesic_examples() {
        let f = parse_fixture(CORRIDOR, 0.25).unwrap();
        let d = geodesic_distance(&f.map, Cell::new(1, 1), Cell::new(2, 1)).unwrap();
        assert_eq!(d, 0.25);
        let d = geodesic_distance(&f.map, Cell::new(1, 1), Cell::new(10, 1)).unwrap();
        assert!((d - 2.25).abs() < 1e-12);
        let d = geodesic_distance(&f.map, Cell::new(0, 1), Cell::new(10, 1));
        assert_eq!(d, Err(WorldError::OccupiedCell(Cell::new(0, 1))));
    }

    #[test]
    fn ten_cell_straight_corridor() {
        let f = parse_fixture(
            "
            #############
            #S..........#
            #############
            ",
            0.25,
        )
        .unwrap();
        let d = geodesic_distance(&f.map, Cell::new(1, 1), Cell::new(11, 1)).unwrap();
        assert!((d - 2.5).abs() < 1e-12);
    }

    #[test]
    fn disconnected_cells_are_infinitely_far() {
        let f = parse_fixture(
            "
            #######
            #S#..1#
            #######
            ",
            0.25,
        )
        .unwrap();
        let goal = f.goals[&1];
        assert_eq!(geodesic_distance(&f.map, f.spawn, goal).unwrap(), f64::INFINITY);
    }

    #[test]
    fn fixture_errors() {
        assert!(parse_fixture("", 0.25).is_err());
        assert!(parse_fixture("###\n#.#\n###", 0.25).is_err()); // no spawn
        assert!(parse_fixture("###\n#S.\n###", 0.25).is_err()); // open border
        assert!(parse_fixture("####\n#S?#\n####", 0.25).is_err());
        assert!(parse_fixture("####\n#S.#\n###", 0.25).is_err()); // ragged
    }

    #[test]
    fn line_of_sight_is_blocked_by_walls() {
        let f = parse_fixture(
            "
            #######
            #S.#..#
            #..#..#
            #.....#
            #######
            ",
            0.25,
        )
        .unwrap();
        assert!(line_of_sight(&f.map, Cell::new(1, 1), Cell::new(2, 3)));
        assert!(!line_of_sight(&f.map, Cell::new(1, 1), Cell::new(5, 1)));
        assert!(!line_of_sight(&f.map, Cell::new(5, 1), Cell::new(1, 1)));
    }

    #[test]
    fn generated_layout_is_connected_and_walled() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let layout = generate_layout(&MapParams::default(), &mut rng);
            assert!(layout.map.border_is_walled());
            let anchor = layout.map.free_cells().next().unwrap();
            assert_eq!(
                reachable_count(&layout.map, anchor),
                layout.map.free_cells().count()
            );
        }
    }

    #[test]
    fn sealing_isolates_one_room() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut layout = generate_layout(&MapParams::default(), &mut rng);
        let room = (0..layout.rooms.len()).find(|&r| layout.can_seal(r)).unwrap();
        layout.seal(room);
        let other = (0..layout.rooms.len()).find(|&r| r != room).unwrap();
        // Corners may be clutter; search for free cells in each room.
        let free_in = |r: usize| {
            layout
                .map
                .free_cells()
                .find(|c| layout.rooms[r].contains(*c))
                .unwrap()
        };
        assert_eq!(
            geodesic_distance(&layout.map, free_in(room), free_in(other)).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_layout(&MapParams::default(), &mut ChaCha8Rng::seed_from_u64(3));
        let b = generate_layout(&MapParams::default(), &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
    }
}
