//! Random obstacle scenes and their rasterization.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`, which is
//! portable and stable across platforms and releases of `rand_chacha`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LbmError, Result};
use crate::state::BoundaryMask;

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Rectangle,
    Ellipse,
}

impl Shape {
    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Rectangle => "rectangle",
            Shape::Ellipse => "ellipse",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rectangle" => Some(Shape::Rectangle),
            "ellipse" => Some(Shape::Ellipse),
            _ => None,
        }
    }
}

/// An obstacle in cell coordinates. A rectangle covers
/// `|dx| <= half_extent[0], |dy| <= half_extent[1]`; an ellipse covers
/// `(dx/a)^2 + (dy/b)^2 <= 1`. Distances in y wrap around the periodic axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SceneObject {
    pub shape: Shape,
    pub center: [usize; 2],
    pub half_extent: [usize; 2],
}

impl SceneObject {
    fn contains(&self, x: usize, y: usize, ny: usize) -> bool {
        let dx = x.abs_diff(self.center[0]);
        let dy = y.abs_diff(self.center[1]);
        let dy = dy.min(ny - dy);
        let [a, b] = self.half_extent;
        match self.shape {
            Shape::Rectangle => dx <= a && dy <= b,
            Shape::Ellipse => {
                if a == 0 || b == 0 {
                    return dx <= a && dy <= b;
                }
                let (dx, dy, a, b) = (dx as u128, dy as u128, a as u128, b as u128);
                dx * dx * b * b + dy * dy * a * a <= a * a * b * b
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneSpec {
    pub nx: usize,
    pub ny: usize,
    pub objects: Vec<SceneObject>,
    pub seed: u64,
}

/// Inclusive range of full object sizes (width or height) in cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeRange {
    pub min: usize,
    pub max: usize,
}

impl SizeRange {
    /// Half-extents drawn for objects lie in this inclusive range.
    pub fn half_extent_range(&self) -> (usize, usize) {
        (self.min.div_ceil(2).max(1), (self.max / 2).max(1))
    }
}

pub fn random_scene(
    nx: usize,
    ny: usize,
    object_count: usize,
    sizes: SizeRange,
    seed: u64,
) -> Result<SceneSpec> {
    if nx < 3 || ny < 1 {
        return Err(LbmError::InvalidInput(format!(
            "grid {nx}x{ny} leaves no room between inlet and outlet"
        )));
    }
    if sizes.min > sizes.max || sizes.max == 0 {
        return Err(LbmError::InvalidInput(format!(
            "size range [{}, {}] is empty",
            sizes.min, sizes.max
        )));
    }
    let (h_lo, h_hi) = sizes.half_extent_range();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::with_capacity(object_count);
    for index in 0..object_count {
        let mut placed = None;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let shape = if rng.gen_bool(0.5) {
                Shape::Rectangle
            } else {
                Shape::Ellipse
            };
            let hx = rng.gen_range(h_lo..=h_hi);
            let hy = rng.gen_range(h_lo..=h_hi);
            // Keep x = 0 and x = nx - 1 free; y wraps.
            if 2 * hx + 3 > nx || 2 * hy + 1 > ny {
                continue;
            }
            let cx = rng.gen_range(1 + hx..=nx - 2 - hx);
            let cy = rng.gen_range(0..ny);
            placed = Some(SceneObject {
                shape,
                center: [cx, cy],
                half_extent: [hx, hy],
            });
            break;
        }
        objects.push(placed.ok_or(LbmError::Placement {
            index,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })?);
    }
    Ok(SceneSpec {
        nx,
        ny,
        objects,
        seed,
    })
}

/// Union of all objects; a cell is solid iff some object contains it.
pub fn rasterize(scene: &SceneSpec) -> Result<BoundaryMask> {
    let mut mask = BoundaryMask::fluid(scene.nx, scene.ny);
    for x in 0..scene.nx {
        for y in 0..scene.ny {
            if scene.objects.iter().any(|o| o.contains(x, y, scene.ny)) {
                mask.set_solid(x, y, true);
            }
        }
    }
    mask.check_open_ends()?;
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solid_set(mask: &BoundaryMask) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for x in 0..mask.nx {
            for y in 0..mask.ny {
                if mask.is_solid(x, y) {
                    v.push((x, y));
                }
            }
        }
        v
    }

    #[test]
    fn empty_scene() {
        let scene = random_scene(16, 16, 0, SizeRange { min: 2, max: 4 }, 3).unwrap();
        assert!(scene.objects.is_empty());
        assert_eq!(rasterize(&scene).unwrap().solid_count(), 0);
    }

    #[test]
    fn deterministic() {
        let s = SizeRange { min: 6, max: 20 };
        assert_eq!(
            random_scene(64, 64, 2, s, 11).unwrap(),
            random_scene(64, 64, 2, s, 11).unwrap()
        );
        assert_ne!(
            random_scene(64, 64, 2, s, 11).unwrap(),
            random_scene(64, 64, 2, s, 12).unwrap()
        );
    }

    #[test]
    fn objects_stay_off_inlet_and_outlet() {
        let sizes = SizeRange { min: 20, max: 140 };
        for seed in 0..100 {
            let scene = random_scene(256, 256, 8, sizes, seed).unwrap();
            for o in &scene.objects {
                assert!(o.center[0] - o.half_extent[0] >= 1);
                assert!(o.center[0] + o.half_extent[0] <= 254);
                assert!(o.half_extent[0] >= 10 && o.half_extent[0] <= 70);
            }
            rasterize(&scene).unwrap();
        }
    }

    #[test]
    fn impossible_placement() {
        let err = random_scene(8, 8, 1, SizeRange { min: 10, max: 12 }, 0).unwrap_err();
        assert!(matches!(err, LbmError::Placement { index: 0, .. }));
    }

    #[test]
    fn rectangle_raster() {
        let scene = SceneSpec {
            nx: 11,
            ny: 11,
            objects: vec![SceneObject {
                shape: Shape::Rectangle,
                center: [5, 5],
                half_extent: [1, 1],
            }],
            seed: 0,
        };
        let expected: Vec<_> = (4..=6).flat_map(|x| (4..=6).map(move |y| (x, y))).collect();
        assert_eq!(solid_set(&rasterize(&scene).unwrap()), expected);
    }

    #[test]
    fn circle_raster_is_discrete_disk() {
        for r in 1..6usize {
            let scene = SceneSpec {
                nx: 17,
                ny: 17,
                objects: vec![SceneObject {
                    shape: Shape::Ellipse,
                    center: [8, 8],
                    half_extent: [r, r],
                }],
                seed: 0,
            };
            let mut expected = Vec::new();
            for x in 0..17i64 {
                for y in 0..17i64 {
                    if (x - 8).pow(2) + (y - 8).pow(2) <= (r * r) as i64 {
                        expected.push((x as usize, y as usize));
                    }
                }
            }
            assert_eq!(solid_set(&rasterize(&scene).unwrap()), expected, "r = {r}");
        }
    }

    #[test]
    fn objects_wrap_in_y() {
        let scene = SceneSpec {
            nx: 9,
            ny: 8,
            objects: vec![SceneObject {
                shape: Shape::Rectangle,
                center: [4, 0],
                half_extent: [0, 1],
            }],
            seed: 0,
        };
        assert_eq!(solid_set(&rasterize(&scene).unwrap()), vec![(4, 0), (4, 1), (4, 7)]);
    }
}
