//! Mesh voxelization: turn a closed triangle mesh into an occupancy grid
//! whose occupied-cell centers become workspace target points.
//!
//! A cell is occupied when its center lies inside the mesh (ray-crossing
//! parity along +x) or the surface passes through the cell's interior
//! (triangle/box separating-axis test against a box shrunk by a hair, so a
//! face lying exactly on a lattice plane marks no cell).  The grid origin is
//! snapped to the voxel lattice, which makes voxelization equivariant under
//! translations by whole voxels.

use crate::error::{Error, Result};
use crate::reachability::{GridInfo, TargetSet};
use crate::stl::TriangleMesh;
use crate::vec3::Vec3;

/// Deterministic ray offsets (in voxel units) tried in order when a row's
/// ray hits a triangle edge, vertex, or coincident surface: the unjittered
/// ray first, then fixed sub-voxel nudges.
const JITTERS: [(f64, f64); 8] = [
    (0.0, 0.0),
    (0.21, 0.13),
    (-0.17, 0.29),
    (0.33, -0.27),
    (-0.41, -0.11),
    (0.47, 0.43),
    (-0.29, -0.37),
    (0.11, -0.47),
];

/// Barycentric tolerance: hits this close to a triangle edge are ambiguous
/// (the neighbouring triangle may double-report them) and trigger a jitter.
const BARY_BAND: f64 = 1e-9;

/// Occupancy grid over a mesh's bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct VoxelGrid {
    /// Lattice-snapped minimum corner: `voxel_size · ⌊bbox_min / voxel_size⌋`.
    pub origin: Vec3,
    /// Cell edge length (cm).
    pub voxel_size: f64,
    /// Cell counts along x, y, z.
    pub dims: [usize; 3],
    /// Union of `center_inside` and `surface`, linear index order.
    pub occupied: Vec<bool>,
    /// Cells whose center is strictly inside the mesh.
    pub center_inside: Vec<bool>,
    /// Cells whose interior the mesh surface passes through.
    pub surface: Vec<bool>,
}

impl VoxelGrid {
    /// Linear index of cell `(ix, iy, iz)`; x varies fastest.
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.dims[1] + iy) * self.dims[0] + ix
    }

    /// Center of cell `(ix, iy, iz)`.
    pub fn cell_center(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        self.origin
            + Vec3::new(
                (ix as f64 + 0.5) * self.voxel_size,
                (iy as f64 + 0.5) * self.voxel_size,
                (iz as f64 + 0.5) * self.voxel_size,
            )
    }

    /// Cell containing a point, if it falls inside the grid.
    pub fn locate(&self, p: Vec3) -> Option<[usize; 3]> {
        let rel = (p - self.origin) / self.voxel_size;
        let cells = [rel.x.floor(), rel.y.floor(), rel.z.floor()];
        let mut out = [0_usize; 3];
        for a in 0..3 {
            if cells[a] < 0.0 || cells[a] >= self.dims[a] as f64 {
                return None;
            }
            out[a] = cells[a] as usize;
        }
        Some(out)
    }

    pub fn total_cells(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    /// Centers of occupied cells in linear index order.
    pub fn occupied_centers(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.occupied_count());
        for iz in 0..self.dims[2] {
            for iy in 0..self.dims[1] {
                for ix in 0..self.dims[0] {
                    if self.occupied[self.index(ix, iy, iz)] {
                        out.push(self.cell_center(ix, iy, iz));
                    }
                }
            }
        }
        out
    }
}

/// Voxelizes a closed mesh at the given cell size.
///
/// Fails with [`Error::OpenMesh`] when ray-crossing parity is inconsistent
/// (odd crossings, or coincident surfaces that survive every jitter) on at
/// least 1 % of the grid cells.
pub fn voxelize_mesh(mesh: &TriangleMesh, voxel_size: f64) -> Result<VoxelGrid> {
    if !(voxel_size > 0.0) || !voxel_size.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "voxel size must be positive and finite, got {voxel_size}"
        )));
    }
    if mesh.triangles.is_empty() {
        return Err(Error::EmptyWorkspace("mesh has no triangles".into()));
    }
    for t in &mesh.triangles {
        if t.vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "mesh contains non-finite vertices".into(),
            ));
        }
    }

    let s = voxel_size;
    let (lo, hi) = mesh.bounding_box().expect("non-empty mesh");
    let origin = Vec3::new(
        s * (lo.x / s).floor(),
        s * (lo.y / s).floor(),
        s * (lo.z / s).floor(),
    );
    let dim = |min: f64, max: f64| -> usize {
        // A max lying exactly on a lattice plane must not open an extra
        // empty layer of cells; shave float noise before the ceil.
        (((max - min) / s - 1e-9).ceil().max(1.0)) as usize
    };
    let dims = [
        dim(origin.x, hi.x),
        dim(origin.y, hi.y),
        dim(origin.z, hi.z),
    ];
    let total = dims[0] * dims[1] * dims[2];

    let mut grid = VoxelGrid {
        origin,
        voxel_size: s,
        dims,
        occupied: vec![false; total],
        center_inside: vec![false; total],
        surface: vec![false; total],
    };

    mark_surface_cells(&mut grid, mesh);
    mark_inside_centers(&mut grid, mesh)?;

    for i in 0..total {
        grid.occupied[i] = grid.center_inside[i] || grid.surface[i];
    }
    Ok(grid)
}

/// Targets from a voxel grid: one point per occupied cell center, with the
/// grid attached so reachability uses voxel-containment membership.
pub fn grid_to_targets(
    grid: &VoxelGrid,
    tolerance: f64,
    required_fraction: f64,
) -> Result<TargetSet> {
    let points = grid.occupied_centers();
    if points.is_empty() {
        return Err(Error::EmptyWorkspace(
            "voxel grid has no occupied cells".into(),
        ));
    }
    let targets = TargetSet {
        points,
        tolerance,
        required_fraction,
        grid: Some(GridInfo {
            origin: grid.origin,
            voxel_size: grid.voxel_size,
        }),
    };
    targets.validate()?;
    Ok(targets)
}

/// Marks every cell whose *interior* the surface crosses.  The test box is
/// shrunk by `1e-9·s` per side so contact of exactly zero measure (a face
/// lying on a lattice plane) marks nothing.
fn mark_surface_cells(grid: &mut VoxelGrid, mesh: &TriangleMesh) {
    let s = grid.voxel_size;
    let half = 0.5 * s - 1e-9 * s;
    for tri in &mesh.triangles {
        let [v0, v1, v2] = tri.vertices;
        let t_lo = Vec3::new(
            v0.x.min(v1.x).min(v2.x),
            v0.y.min(v1.y).min(v2.y),
            v0.z.min(v1.z).min(v2.z),
        );
        let t_hi = Vec3::new(
            v0.x.max(v1.x).max(v2.x),
            v0.y.max(v1.y).max(v2.y),
            v0.z.max(v1.z).max(v2.z),
        );
        let range = |min: f64, max: f64, dim: usize| -> (usize, usize) {
            let a = ((min / s).floor() as i64).clamp(0, dim as i64 - 1);
            let b = ((max / s).floor() as i64).clamp(0, dim as i64 - 1);
            (a as usize, b as usize)
        };
        let (x0, x1) = range(t_lo.x - grid.origin.x, t_hi.x - grid.origin.x, grid.dims[0]);
        let (y0, y1) = range(t_lo.y - grid.origin.y, t_hi.y - grid.origin.y, grid.dims[1]);
        let (z0, z1) = range(t_lo.z - grid.origin.z, t_hi.z - grid.origin.z, grid.dims[2]);
        for iz in z0..=z1 {
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    let idx = grid.index(ix, iy, iz);
                    if grid.surface[idx] {
                        continue;
                    }
                    let center = grid.cell_center(ix, iy, iz);
                    if triangle_box_overlap(center, half, v0, v1, v2) {
                        grid.surface[idx] = true;
                    }
                }
            }
        }
    }
}

/// Separating-axis triangle/cube overlap test (3 box axes, the triangle
/// plane, and the 9 edge cross-products).
fn triangle_box_overlap(center: Vec3, half: f64, a: Vec3, b: Vec3, c: Vec3) -> bool {
    let v0 = a - center;
    let v1 = b - center;
    let v2 = c - center;

    let min3 = |p: f64, q: f64, r: f64| p.min(q).min(r);
    let max3 = |p: f64, q: f64, r: f64| p.max(q).max(r);

    // Box face normals.
    if min3(v0.x, v1.x, v2.x) > half || max3(v0.x, v1.x, v2.x) < -half {
        return false;
    }
    if min3(v0.y, v1.y, v2.y) > half || max3(v0.y, v1.y, v2.y) < -half {
        return false;
    }
    if min3(v0.z, v1.z, v2.z) > half || max3(v0.z, v1.z, v2.z) < -half {
        return false;
    }

    // Cross products of triangle edges with the box axes.
    let edges = [v1 - v0, v2 - v1, v0 - v2];
    for e in edges {
        // x̂ × e
        let (p0, p1, p2) = (
            -e.z * v0.y + e.y * v0.z,
            -e.z * v1.y + e.y * v1.z,
            -e.z * v2.y + e.y * v2.z,
        );
        let r = half * (e.z.abs() + e.y.abs());
        if min3(p0, p1, p2) > r || max3(p0, p1, p2) < -r {
            return false;
        }
        // ŷ × e
        let (p0, p1, p2) = (
            e.z * v0.x - e.x * v0.z,
            e.z * v1.x - e.x * v1.z,
            e.z * v2.x - e.x * v2.z,
        );
        let r = half * (e.z.abs() + e.x.abs());
        if min3(p0, p1, p2) > r || max3(p0, p1, p2) < -r {
            return false;
        }
        // ẑ × e
        let (p0, p1, p2) = (
            -e.y * v0.x + e.x * v0.y,
            -e.y * v1.x + e.x * v1.y,
            -e.y * v2.x + e.x * v2.y,
        );
        let r = half * (e.y.abs() + e.x.abs());
        if min3(p0, p1, p2) > r || max3(p0, p1, p2) < -r {
            return false;
        }
    }

    // Triangle plane.
    let n = (v1 - v0).cross(v2 - v0);
    let d = n.dot(v0);
    let r = half * (n.x.abs() + n.y.abs() + n.z.abs());
    d.abs() <= r
}

enum RayHit {
    Miss,
    /// Transversal crossing at this x.
    At(f64),
    /// Edge/vertex/parallel ambiguity: retry the row with a jittered ray.
    Degenerate,
}

/// Intersects the +x ray at `(y, z)` with a triangle, in the (y, z)
/// projection.  `band` is the absolute ambiguity width for rays skimming a
/// triangle that is parallel to the ray.
fn ray_triangle_x(v0: Vec3, v1: Vec3, v2: Vec3, y: f64, z: f64, band: f64) -> RayHit {
    let d1 = (v1.y - v0.y, v1.z - v0.z);
    let d2 = (v2.y - v0.y, v2.z - v0.z);
    let det = d1.0 * d2.1 - d1.1 * d2.0;
    let scale = d1.0.abs().max(d1.1.abs()).max(d2.0.abs()).max(d2.1.abs());
    if det.abs() <= 1e-14 * scale * scale {
        // Triangle is edge-on to the ray; ambiguous only if the ray passes
        // its projected extent.
        let y_lo = v0.y.min(v1.y).min(v2.y) - band;
        let y_hi = v0.y.max(v1.y).max(v2.y) + band;
        let z_lo = v0.z.min(v1.z).min(v2.z) - band;
        let z_hi = v0.z.max(v1.z).max(v2.z) + band;
        if y >= y_lo && y <= y_hi && z >= z_lo && z <= z_hi {
            return RayHit::Degenerate;
        }
        return RayHit::Miss;
    }
    let dp = (y - v0.y, z - v0.z);
    let u = (dp.0 * d2.1 - dp.1 * d2.0) / det;
    let v = (d1.0 * dp.1 - d1.1 * dp.0) / det;
    let w = 1.0 - u - v;
    if u < -BARY_BAND || v < -BARY_BAND || w < -BARY_BAND {
        return RayHit::Miss;
    }
    if u <= BARY_BAND || v <= BARY_BAND || w <= BARY_BAND {
        return RayHit::Degenerate;
    }
    RayHit::At(v0.x + u * (v1.x - v0.x) + v * (v2.x - v0.x))
}

/// Classifies each cell center as inside/outside by ray-crossing parity
/// along +x, one ray per (y, z) row of cells.
fn mark_inside_centers(grid: &mut VoxelGrid, mesh: &TriangleMesh) -> Result<()> {
    let s = grid.voxel_size;
    let band = 1e-9 * s;
    let dup_tol = 1e-7 * s;
    let surf_tol = 1e-7 * s;
    let [nx, ny, nz] = grid.dims;

    // Bucket triangles by the (y, z) rows they might intersect; the ray may
    // be jittered by up to half a voxel, so expand by that much.
    let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); ny * nz];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [v0, v1, v2] = tri.vertices;
        let pad = 0.5 * s + band;
        let row_range = |lo: f64, hi: f64, dim: usize| -> Option<(usize, usize)> {
            let a = ((lo - pad) / s).floor() as i64;
            let b = ((hi + pad) / s).floor() as i64;
            if b < 0 || a >= dim as i64 {
                return None;
            }
            Some((a.max(0) as usize, b.min(dim as i64 - 1) as usize))
        };
        let Some((y0, y1)) = row_range(
            v0.y.min(v1.y).min(v2.y) - grid.origin.y,
            v0.y.max(v1.y).max(v2.y) - grid.origin.y,
            ny,
        ) else {
            continue;
        };
        let Some((z0, z1)) = row_range(
            v0.z.min(v1.z).min(v2.z) - grid.origin.z,
            v0.z.max(v1.z).max(v2.z) - grid.origin.z,
            nz,
        ) else {
            continue;
        };
        for iz in z0..=z1 {
            for iy in y0..=y1 {
                buckets[iz * ny + iy].push(t as u32);
            }
        }
    }

    let mut bad_rows = 0_usize;
    let mut hits: Vec<f64> = Vec::new();
    for iz in 0..nz {
        for iy in 0..ny {
            let bucket = &buckets[iz * ny + iy];
            let y_c = grid.origin.y + (iy as f64 + 0.5) * s;
            let z_c = grid.origin.z + (iz as f64 + 0.5) * s;

            let mut resolved = false;
            'attempt: for (dy, dz) in JITTERS {
                let y = y_c + dy * s;
                let z = z_c + dz * s;
                hits.clear();
                for &t in bucket {
                    let [v0, v1, v2] = mesh.triangles[t as usize].vertices;
                    match ray_triangle_x(v0, v1, v2, y, z, band) {
                        RayHit::Miss => {}
                        RayHit::At(x) => hits.push(x),
                        RayHit::Degenerate => continue 'attempt,
                    }
                }
                hits.sort_by(f64::total_cmp);
                // Coincident crossings (doubled faces) can't be paired off.
                if hits.windows(2).any(|w| w[1] - w[0] <= dup_tol) {
                    continue 'attempt;
                }
                if hits.len() % 2 != 0 {
                    continue 'attempt;
                }
                resolved = true;
                break;
            }

            if !resolved {
                bad_rows += 1;
                continue;
            }
            for ix in 0..nx {
                let x_c = grid.origin.x + (ix as f64 + 0.5) * s;
                let on_surface = hits.iter().any(|h| (h - x_c).abs() <= surf_tol);
                if on_surface {
                    continue;
                }
                let ahead = hits.iter().filter(|h| **h > x_c).count();
                if ahead % 2 == 1 {
                    let idx = grid.index(ix, iy, iz);
                    grid.center_inside[idx] = true;
                }
            }
        }
    }

    let bad_cells = bad_rows * nx;
    let total_cells = grid.total_cells();
    if bad_cells > 0 && bad_cells * 100 >= total_cells {
        return Err(Error::OpenMesh {
            bad_cells,
            total_cells,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::{box_mesh, uv_sphere};

    #[test]
    fn lattice_aligned_cube_occupies_exactly_its_cells() {
        let mesh = box_mesh(Vec3::new(0.0, 0.0, 0.0), Vec3::new(3.0, 3.0, 3.0));
        let grid = voxelize_mesh(&mesh, 1.0).unwrap();
        assert_eq!(grid.dims, [3, 3, 3]);
        assert_eq!(grid.origin, Vec3::ZERO);
        assert_eq!(grid.occupied_count(), 27);
        // Faces lie exactly on lattice planes, so they mark nothing; every
        // cell is occupied through its center.
        assert_eq!(grid.surface.iter().filter(|s| **s).count(), 0);
        assert_eq!(grid.center_inside.iter().filter(|c| **c).count(), 27);
    }

    #[test]
    fn half_shifted_cube_spills_into_all_straddled_cells() {
        let mesh = box_mesh(Vec3::new(0.5, 0.5, 0.5), Vec3::new(3.5, 3.5, 3.5));
        let grid = voxelize_mesh(&mesh, 1.0).unwrap();
        assert_eq!(grid.dims, [4, 4, 4]);
        assert_eq!(grid.origin, Vec3::ZERO);
        assert_eq!(grid.occupied_count(), 64);
        assert_eq!(grid.surface.iter().filter(|s| **s).count(), 56);
        // The strict-interior 2×2×2 core is always classified inside.  A
        // center lying exactly on the surface may be classified either way,
        // but such cells are surface cells, so occupancy never depends on
        // the ambiguity.
        for iz in 0..4 {
            for iy in 0..4 {
                for ix in 0..4 {
                    let idx = grid.index(ix, iy, iz);
                    let core = (1..=2).contains(&ix) && (1..=2).contains(&iy) && (1..=2).contains(&iz);
                    if core {
                        assert!(grid.center_inside[idx], "core cell ({ix},{iy},{iz})");
                    } else if grid.center_inside[idx] {
                        assert!(grid.surface[idx], "boundary cell ({ix},{iy},{iz})");
                    }
                }
            }
        }
    }

    #[test]
    fn translation_by_whole_voxels_shifts_the_grid_rigidly() {
        let lo = Vec3::new(0.5, 0.5, 0.5);
        let hi = Vec3::new(3.5, 3.5, 3.5);
        let shift = Vec3::new(7.0, -3.0, 2.0); // whole multiples of s = 1
        let base = voxelize_mesh(&box_mesh(lo, hi), 1.0).unwrap();
        let moved = voxelize_mesh(&box_mesh(lo + shift, hi + shift), 1.0).unwrap();
        assert_eq!(moved.origin, base.origin + shift);
        assert_eq!(moved.dims, base.dims);
        assert_eq!(moved.occupied, base.occupied);
        assert_eq!(moved.center_inside, base.center_inside);
        assert_eq!(moved.surface, base.surface);
    }

    #[test]
    fn sphere_interior_count_tracks_its_volume() {
        let radius = 10.0;
        let s = 3.0;
        let mesh = uv_sphere(Vec3::ZERO, radius, 64, 32);
        let grid = voxelize_mesh(&mesh, s).unwrap();
        let inside = grid.center_inside.iter().filter(|c| **c).count();
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * radius.powi(3) / s.powi(3);
        let rel = (inside as f64 - analytic).abs() / analytic;
        assert!(rel < 0.10, "inside {inside} vs analytic {analytic:.1}");

        // Cross-check against a brute-force point-in-sphere count over the
        // same lattice of cell centers.
        let mut expected = 0;
        for iz in 0..grid.dims[2] {
            for iy in 0..grid.dims[1] {
                for ix in 0..grid.dims[0] {
                    if grid.cell_center(ix, iy, iz).norm() < radius {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(inside, expected);
    }

    #[test]
    fn sphere_occupancy_is_interior_plus_shell() {
        let grid = voxelize_mesh(&uv_sphere(Vec3::ZERO, 10.0, 64, 32), 3.0).unwrap();
        for i in 0..grid.total_cells() {
            assert_eq!(grid.occupied[i], grid.center_inside[i] || grid.surface[i]);
        }
        assert!(grid.occupied_count() > grid.center_inside.iter().filter(|c| **c).count());
    }

    #[test]
    fn sphere_with_a_side_hole_is_rejected_as_open() {
        let full = uv_sphere(Vec3::ZERO, 10.0, 64, 32);
        let holed = TriangleMesh {
            triangles: full
                .triangles
                .into_iter()
                .filter(|t| !t.vertices.iter().all(|v| v.x > 8.0))
                .collect(),
        };
        let err = voxelize_mesh(&holed, 3.0).unwrap_err();
        match err {
            Error::OpenMesh {
                bad_cells,
                total_cells,
            } => {
                assert!(bad_cells * 100 >= total_cells);
            }
            other => panic!("expected OpenMesh, got {other:?}"),
        }
    }

    #[test]
    fn doubled_face_is_rejected_as_open() {
        let mut mesh = box_mesh(Vec3::new(0.5, 0.5, 0.5), Vec3::new(3.5, 3.5, 3.5));
        // Duplicate the two triangles of the +x face: every ray through it
        // sees coincident crossings that no jitter can separate.
        let dup: Vec<_> = mesh
            .triangles
            .iter()
            .filter(|t| t.vertices.iter().all(|v| v.x == 3.5))
            .copied()
            .collect();
        assert_eq!(dup.len(), 2);
        mesh.triangles.extend(dup);
        assert!(matches!(
            voxelize_mesh(&mesh, 1.0),
            Err(Error::OpenMesh { .. })
        ));
    }

    #[test]
    fn flat_aligned_patch_occupies_nothing() {
        // A zero-thickness square on a lattice plane has no interior and
        // its surface lies on cell boundaries: nothing is occupied.
        let mesh = TriangleMesh {
            triangles: vec![
                crate::stl::Triangle {
                    normal: Vec3::new(0.0, 0.0, 1.0),
                    vertices: [
                        Vec3::new(0.0, 0.0, 1.0),
                        Vec3::new(2.0, 0.0, 1.0),
                        Vec3::new(2.0, 2.0, 1.0),
                    ],
                },
                crate::stl::Triangle {
                    normal: Vec3::new(0.0, 0.0, 1.0),
                    vertices: [
                        Vec3::new(0.0, 0.0, 1.0),
                        Vec3::new(2.0, 2.0, 1.0),
                        Vec3::new(0.0, 2.0, 1.0),
                    ],
                },
            ],
        };
        let grid = voxelize_mesh(&mesh, 1.0).unwrap();
        assert_eq!(grid.occupied_count(), 0);
        assert!(matches!(
            grid_to_targets(&grid, 1.0, 0.95),
            Err(Error::EmptyWorkspace(_))
        ));
    }

    #[test]
    fn cell_centers_and_locate_agree() {
        let mesh = box_mesh(Vec3::new(0.5, 0.5, 0.5), Vec3::new(3.5, 3.5, 3.5));
        let grid = voxelize_mesh(&mesh, 1.0).unwrap();
        assert_eq!(grid.cell_center(0, 0, 0), Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(grid.cell_center(3, 2, 1), Vec3::new(3.5, 2.5, 1.5));
        assert_eq!(grid.locate(Vec3::new(0.1, 0.9, 3.9)), Some([0, 0, 3]));
        assert_eq!(grid.locate(Vec3::new(-0.1, 1.0, 1.0)), None);
        assert_eq!(grid.locate(Vec3::new(4.1, 1.0, 1.0)), None);
        for p in grid.occupied_centers().into_iter().take(5) {
            let [ix, iy, iz] = grid.locate(p).unwrap();
            assert_eq!(grid.cell_center(ix, iy, iz), p);
        }
    }

    #[test]
    fn grid_targets_carry_grid_info() {
        let mesh = box_mesh(Vec3::new(0.5, 0.5, 0.5), Vec3::new(3.5, 3.5, 3.5));
        let grid = voxelize_mesh(&mesh, 1.0).unwrap();
        let targets = grid_to_targets(&grid, 1.0, 0.95).unwrap();
        assert_eq!(targets.points.len(), 64);
        assert_eq!(targets.tolerance, 1.0);
        assert_eq!(targets.required_fraction, 0.95);
        let info = targets.grid.unwrap();
        assert_eq!(info.origin, grid.origin);
        assert_eq!(info.voxel_size, 1.0);
        assert_eq!(targets.points[0], Vec3::new(0.5, 0.5, 0.5));
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mesh = box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0));
        assert!(voxelize_mesh(&mesh, 0.0).is_err());
        assert!(voxelize_mesh(&mesh, -1.0).is_err());
        assert!(voxelize_mesh(&mesh, f64::NAN).is_err());
        assert!(matches!(
            voxelize_mesh(&TriangleMesh::default(), 1.0),
            Err(Error::EmptyWorkspace(_))
        ));
        let mut bad = box_mesh(Vec3::ZERO, Vec3::new(1.0, 1.0, 1.0));
        bad.triangles[0].vertices[0].x = f64::NAN;
        assert!(matches!(
            voxelize_mesh(&bad, 1.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn negative_coordinates_snap_origin_downward() {
        let mesh = box_mesh(Vec3::new(-2.5, -2.5, -2.5), Vec3::new(0.5, 0.5, 0.5));
        let grid = voxelize_mesh(&mesh, 1.0).unwrap();
        assert_eq!(grid.origin, Vec3::new(-3.0, -3.0, -3.0));
        assert_eq!(grid.dims, [4, 4, 4]);
        assert_eq!(grid.occupied_count(), 64);
    }
}
