//! Median-split bounding volume hierarchy over triangles.

use nalgebra::{Point3, Vector3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub dir: Vector3<f64>,
    inv_dir: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Point3<f64>, dir: Vector3<f64>) -> Self {
        Self {
            origin,
            dir,
            inv_dir: dir.map(|d| 1.0 / d),
        }
    }

    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.dir * t
    }
}

/// Nearest intersection along a ray. `u`, `v` are the barycentric weights of
/// the triangle's second and third vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub triangle: u32,
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

impl Hit {
    /// Ordering used everywhere a nearest hit is chosen: smaller `t` wins,
    /// exact ties go to the lower triangle id.
    pub fn is_closer_than(&self, other: &Hit) -> bool {
        self.t < other.t || (self.t == other.t && self.triangle < other.triangle)
    }
}

/// Möller–Trumbore. Returns `(t, u, v)` for `t` in `[t_min, t_max]`;
/// degenerate triangles never hit.
#[inline]
pub fn intersect_triangle(ray: &Ray, tri: &[Point3<f64>; 3], t_min: f64, t_max: f64) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = ray.dir.cross(&e2);
    let det = e1.dot(&p);
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.dir.dot(&q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t >= t_min && t <= t_max).then_some((t, u, v))
}

#[derive(Debug, Clone, Copy)]
struct Node {
    min: [f64; 3],
    max: [f64; 3],
    /// Leaf: first primitive slot. Interior: index of the right child
    /// (the left child is always the next node).
    first: u32,
    /// Zero for interior nodes.
    count: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    prims: Vec<u32>,
}

impl Bvh {
    pub fn build(triangles: &[[Point3<f64>; 3]]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * triangles.len() / LEAF_SIZE + 1),
            prims: (0..triangles.len() as u32).collect(),
        };
        if triangles.is_empty() {
            return bvh;
        }
        let centroids: Vec<[f64; 3]> = triangles
            .iter()
            .map(|t| {
                let c = (t[0].coords + t[1].coords + t[2].coords) / 3.0;
                [c.x, c.y, c.z]
            })
            .collect();
        let mut prims = std::mem::take(&mut bvh.prims);
        bvh.build_node(triangles, &centroids, &mut prims, 0);
        bvh.prims = prims;
        bvh
    }

    fn build_node(&mut self, triangles: &[[Point3<f64>; 3]], centroids: &[[f64; 3]], prims: &mut [u32], offset: usize) -> u32 {
        let index = self.nodes.len() as u32;
        let (min, max) = bounds(prims.iter().flat_map(|&p| triangles[p as usize].iter()));
        self.nodes.push(Node {
            min,
            max,
            first: offset as u32,
            count: prims.len() as u32,
        });
        if prims.len() <= LEAF_SIZE {
            return index;
        }

        let mut cmin = [f64::INFINITY; 3];
        let mut cmax = [f64::NEG_INFINITY; 3];
        for &p in prims.iter() {
            for k in 0..3 {
                cmin[k] = cmin[k].min(centroids[p as usize][k]);
                cmax[k] = cmax[k].max(centroids[p as usize][k]);
            }
        }
        let axis = (0..3)
            .max_by(|&a, &b| (cmax[a] - cmin[a]).total_cmp(&(cmax[b] - cmin[b])))
            .unwrap();
        if cmax[axis] - cmin[axis] <= 0.0 {
            // coincident centroids: splitting cannot separate them
            return index;
        }

        let mid = prims.len() / 2;
        prims.select_nth_unstable_by(mid, |&a, &b| {
            centroids[a as usize][axis]
                .total_cmp(&centroids[b as usize][axis])
                .then(a.cmp(&b))
        });
        let (left, right) = prims.split_at_mut(mid);
        self.build_node(triangles, centroids, left, offset);
        let right_index = self.build_node(triangles, centroids, right, offset + mid);
        let node = &mut self.nodes[index as usize];
        node.first = right_index;
        node.count = 0;
        index
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Nearest hit with `t` in `[t_min, t_max]`, ties broken toward the lower triangle id.
    pub fn nearest(&self, triangles: &[[Point3<f64>; 3]], ray: &Ray, t_min: f64, t_max: f64) -> Option<Hit> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Hit> = None;
        let mut limit = t_max;
        let mut stack = [0u32; 64];
        let mut top = 1usize;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            // boxes are only pruned when strictly beyond the best hit so exact ties are still visited
            if slab(node, ray, t_min, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                let start = node.first as usize;
                for &p in &self.prims[start..start + node.count as usize] {
                    if let Some((t, u, v)) = intersect_triangle(ray, &triangles[p as usize], t_min, limit) {
                        let hit = Hit { triangle: p, t, u, v };
                        if best.is_none_or(|b| hit.is_closer_than(&b)) {
                            best = Some(hit);
                            limit = t;
                        }
                    }
                }
            } else {
                let left = stack[top] + 1;
                let right = node.first;
                let tl = slab(&self.nodes[left as usize], ray, t_min, limit);
                let tr = slab(&self.nodes[right as usize], ray, t_min, limit);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (left, right) } else { (right, left) };
                        stack[top] = far;
                        stack[top + 1] = near;
                        top += 2;
                    }
                    (Some(_), None) => {
                        stack[top] = left;
                        top += 1;
                    }
                    (None, Some(_)) => {
                        stack[top] = right;
                        top += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best
    }
}

fn bounds<'a>(points: impl Iterator<Item = &'a Point3<f64>>) -> ([f64; 3], [f64; 3]) {
    let mut min = [f64::INFINITY; 3];
    let mut max = [f64::NEG_INFINITY; 3];
    for p in points {
        for k in 0..3 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    // pad so flat boxes and rounding at the faces never lose a hit
    for k in 0..3 {
        let pad = 1e-9 * (1.0 + min[k].abs().max(max[k].abs()));
        min[k] -= pad;
        max[k] += pad;
    }
    (min, max)
}

/// Entry distance if the ray overlaps the box within `[t_min, t_max]`.
#[inline]
fn slab(node: &Node, ray: &Ray, t_min: f64, t_max: f64) -> Option<f64> {
    let mut lo = t_min;
    let mut hi = t_max;
    for k in 0..3 {
        let t1 = (node.min[k] - ray.origin[k]) * ray.inv_dir[k];
        let t2 = (node.max[k] - ray.origin[k]) * ray.inv_dir[k];
        // NaN (0 * inf) leaves the interval unchanged
        lo = lo.max(t1.min(t2));
        hi = hi.min(t1.max(t2));
    }
    (lo <= hi).then_some(lo)
}
