//! Hand-authored fixture maps for deterministic scenario tests.
//!
//! Format: one character per cell. `#` wall, `.` free, `S` spawn, `1`-`9`
//! goal positions. The outer border must be walls.

use super::grid::{parse_fixture, FixtureMap};
use super::WorldError;

/// Both goals next to the spawn.
pub const TRIVIAL: &str = "
#######
#..1..#
#..S..#
#..2..#
#######
";

/// One open room, two goals in opposite corners.
pub const OPEN: &str = "
######################
#S...................#
#....................#
#....................#
#....................#
#....................#
#....................#
#..................1.#
#.2..................#
######################
";

/// Two rooms joined by a two-cell door.
pub const TWO_ROOM: &str = "
##############################
#.............#..............#
#.S...........#..............#
#.............#..........2...#
#.............#..............#
#............................#
#............................#
#.............#..............#
#.............#..............#
#...........1.#..............#
#.............#..............#
##############################
";

/// Goal 1 sits in a room with no door.
pub const SEALED_ROOM: &str = "
##############################
#.............#..............#
#.S...........#..............#
#.............#..............#
#.............#..............#
#.............#..............#
#.............#.......1......#
#.............#..............#
#.............#..............#
#.............#..............#
#.............#..............#
##############################
";

/// Winding corridors; goal 1 at the far end.
pub const MAZE: &str = "
#####################
#S..#.......#.......#
###.#.#####.#.#####.#
#...#.#...#...#.....#
#.###.#.#.#####.#####
#.#...#.#.......#...#
#.#.###.#######.#.#.#
#...#...#.....#...#.#
#####.###.###.#####.#
#.........#.......#1#
#####################
";

pub const NAMES: [&str; 5] = ["trivial", "open", "two_room", "sealed_room", "maze"];

pub fn text(name: &str) -> Option<&'static str> {
    Some(match name {
        "trivial" => TRIVIAL,
        "open" => OPEN,
        "two_room" => TWO_ROOM,
        "sealed_room" => SEALED_ROOM,
        "maze" => MAZE,
        _ => return None,
    })
}

pub fn load(name: &str, cell_size: f64) -> Result<FixtureMap, WorldError> {
    let txt = text(name).ok_or_else(|| WorldError::Fixture(format!("unknown fixture `{name}`")))?;
    parse_fixture(txt, cell_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::grid::geodesic_distance;

    #[test]
    fn all_fixtures_parse() {
        for name in NAMES {
            let f = load(name, 0.25).unwrap();
            assert!(!f.goals.is_empty(), "{name}");
        }
        assert!(load("nope", 0.25).is_err());
    }

    #[test]
    fn sealed_goal_is_unreachable() {
        let f = load("sealed_room", 0.25).unwrap();
        let d = geodesic_distance(&f.map, f.spawn, f.goals[&1]).unwrap();
        assert_eq!(d, f64::INFINITY);
    }

    #[test]
    fn maze_goal_is_reachable_with_detour() {
        let f = load("maze", 0.25).unwrap();
        let g = f.goals[&1];
        let d = geodesic_distance(&f.map, f.spawn, g).unwrap();
        let straight = f.map.to_point(f.spawn).distance(&f.map.to_point(g));
        assert!(d.is_finite());
        assert!(d > 1.5 * straight);
    }
}
