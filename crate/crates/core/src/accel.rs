//! Ray queries against strand capsules: exact entry/exit intervals, a BVH
//! over capsule bounds, per-strand transmittance along a ray, and the
//! interval merging the transparency compositor relies on.

use crate::geom::{Ray, Vec3};
use crate::strand::Capsule;

/// One ray/capsule crossing, as a parametric interval.
#[derive(Clone, Copy, Debug)]
pub struct CapsuleHit {
    pub t_enter: f64,
    pub t_exit: f64,
    pub capsule: u32,
}

/// Exact ray/capsule intersection. Returns the parametric interval clipped
/// to [t_min, t_max], or None. A capsule is convex, so the intersection is a
/// single interval; its endpoints are crossings of either the cylinder body
/// (axis parameter within the segment) or one of the end caps.
pub fn intersect_capsule(ray: &Ray, c: &Capsule, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
    let d = ray.dir;
    let ba = c.b - c.a;
    let oa = ray.origin - c.a;
    let baba = ba.dot(&ba);
    let bard = ba.dot(&d);
    let baoa = ba.dot(&oa);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut take = |t: f64| {
        lo = lo.min(t);
        hi = hi.max(t);
    };

    // Cylinder body: |(o + t d - a) x ba| = r |ba|, axis param in [0, baba].
    let a2 = baba - bard * bard;
    let b2 = baba * oa.dot(&d) - baoa * bard;
    let c2 = baba * oa.dot(&oa) - baoa * baoa - c.radius * c.radius * baba;
    if a2.abs() > 1e-300 {
        let disc = b2 * b2 - a2 * c2;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-b2 - sq) / a2, (-b2 + sq) / a2] {
                let y = baoa + t * bard;
                if y >= 0.0 && y <= baba {
                    take(t);
                }
            }
        }
    }

    // End caps: sphere crossings on the outward side of each cap plane.
    for (center, outward_sign) in [(c.a, -1.0), (c.b, 1.0)] {
        let oc = ray.origin - center;
        let b = oc.dot(&d);
        let cc = oc.dot(&oc) - c.radius * c.radius;
        let disc = b * b - cc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [-b - sq, -b + sq] {
                let p = ray.at(t) - center;
                if p.dot(&ba) * outward_sign >= 0.0 {
                    take(t);
                }
            }
        }
    }

    if lo > hi {
        return None;
    }
    let t0 = lo.max(t_min);
    let t1 = hi.min(t_max);
    if t0 >= t1 {
        return None;
    }
    Some((t0, t1))
}

#[derive(Clone, Copy)]
struct Aabb {
    lo: Vec3,
    hi: Vec3,
}

impl Aabb {
    fn of_capsule(c: &Capsule) -> Self {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in [c.a, c.b] {
            for k in 0..3 {
                lo[k] = lo[k].min(p[k] - c.radius);
                hi[k] = hi[k].max(p[k] + c.radius);
            }
        }
        Aabb { lo, hi }
    }

    fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            lo: self.lo.inf(&other.lo),
            hi: self.hi.sup(&other.hi),
        }
    }

    fn center(&self, axis: usize) -> f64 {
        0.5 * (self.lo[axis] + self.hi[axis])
    }

    fn hit(&self, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> bool {
        let mut t0 = t_min;
        let mut t1 = t_max;
        for k in 0..3 {
            let mut near = (self.lo[k] - origin[k]) * inv_dir[k];
            let mut far = (self.hi[k] - origin[k]) * inv_dir[k];
            if near > far {
                std::mem::swap(&mut near, &mut far);
            }
            t0 = t0.max(near);
            t1 = t1.min(far);
            if t0 > t1 {
                return false;
            }
        }
        true
    }
}

struct Node {
    bounds: Aabb,
    // Leaf when count > 0: capsule order[start..start+count].
    // Internal otherwise: children at (left, left + 1 subtree offset) — we
    // store explicit child indices for clarity.
    left: u32,
    right: u32,
    start: u32,
    count: u32,
}

/// Median-split BVH over capsule bounds. Built once per geometry; queries
/// are read-only and safe to run from many threads.
pub struct CapsuleBvh {
    capsules: Vec<Capsule>,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

const LEAF_SIZE: usize = 4;

impl CapsuleBvh {
    pub fn build(capsules: Vec<Capsule>) -> Self {
        assert!(!capsules.is_empty(), "no capsules to index");
        let boxes: Vec<Aabb> = capsules.iter().map(Aabb::of_capsule).collect();
        let mut order: Vec<u32> = (0..capsules.len() as u32).collect();
        let mut nodes = Vec::new();
        build_node(&boxes, &mut order, 0, capsules.len(), &mut nodes);
        CapsuleBvh {
            capsules,
            nodes,
            order,
        }
    }

    pub fn capsules(&self) -> &[Capsule] {
        &self.capsules
    }

    /// Appends every capsule interval the ray crosses in [t_min, t_max].
    /// Order is unspecified; callers sort as needed.
    pub fn intersect_all(&self, ray: &Ray, t_min: f64, t_max: f64, out: &mut Vec<CapsuleHit>) {
        let inv_dir = Vec3::new(
            1.0 / ray.dir.x,
            1.0 / ray.dir.y,
            1.0 / ray.dir.z,
        );
        let mut stack = [0u32; 64];
        let mut top = 0usize;
        stack[top] = 0;
        top += 1;
        while top > 0 {
            top -= 1;
            let node = &self.nodes[stack[top] as usize];
            if !node.bounds.hit(ray.origin, inv_dir, t_min, t_max) {
                continue;
            }
            if node.count > 0 {
                for i in node.start..node.start + node.count {
                    let ci = self.order[i as usize];
                    if let Some((t0, t1)) =
                        intersect_capsule(ray, &self.capsules[ci as usize], t_min, t_max)
                    {
                        out.push(CapsuleHit {
                            t_enter: t0,
                            t_exit: t1,
                            capsule: ci,
                        });
                    }
                }
            } else {
                stack[top] = node.left;
                stack[top + 1] = node.right;
                top += 2;
            }
        }
    }

    /// Fraction of light surviving along the ray: product of (1 - alpha) over
    /// each *strand* crossed (a strand attenuates once no matter how many of
    /// its segments the ray grazes). `exclude` removes capsules from
    /// consideration (used for bake-time self-exclusion).
    pub fn transmittance(
        &self,
        ray: &Ray,
        t_min: f64,
        t_max: f64,
        strand_alpha: impl Fn(u32) -> f64,
        exclude: impl Fn(&Capsule) -> bool,
    ) -> f64 {
        let mut hits = Vec::new();
        self.intersect_all(ray, t_min, t_max, &mut hits);
        let mut seen: Vec<u32> = Vec::new();
        let mut transmitted = 1.0;
        for h in &hits {
            let cap = &self.capsules[h.capsule as usize];
            if exclude(cap) || seen.contains(&cap.strand) {
                continue;
            }
            seen.push(cap.strand);
            transmitted *= 1.0 - strand_alpha(cap.strand);
            if transmitted == 0.0 {
                break;
            }
        }
        transmitted
    }
}

fn build_node(
    boxes: &[Aabb],
    order: &mut [u32],
    start: usize,
    count: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let slice = &order[start..start + count];
    let mut bounds = boxes[slice[0] as usize];
    for &i in &slice[1..] {
        bounds = bounds.union(&boxes[i as usize]);
    }
    let index = nodes.len() as u32;
    if count <= LEAF_SIZE {
        nodes.push(Node {
            bounds,
            left: 0,
            right: 0,
            start: start as u32,
            count: count as u32,
        });
        return index;
    }
    // Split on the widest axis at the median of box centers.
    let extent = bounds.hi - bounds.lo;
    let axis = if extent[0] >= extent[1] && extent[0] >= extent[2] {
        0
    } else if extent[1] >= extent[2] {
        1
    } else {
        2
    };
    let mid = count / 2;
    order[start..start + count].select_nth_unstable_by(mid, |&a, &b| {
        boxes[a as usize]
            .center(axis)
            .partial_cmp(&boxes[b as usize].center(axis))
            .unwrap()
    });
    nodes.push(Node {
        bounds,
        left: 0,
        right: 0,
        start: 0,
        count: 0,
    });
    let left = build_node(boxes, order, start, mid, nodes);
    let right = build_node(boxes, order, start + mid, count - mid, nodes);
    nodes[index as usize].left = left;
    nodes[index as usize].right = right;
    index
}

/// A contiguous crossing of one strand, after merging the overlapping
/// per-capsule intervals of that strand (adjacent segments overlap at their
/// shared joint; counting both would double-composite one fiber).
#[derive(Clone, Copy, Debug)]
pub struct StrandCrossing {
    pub t_enter: f64,
    pub t_exit: f64,
    pub strand: u32,
    /// Capsule providing the front-most entry of this crossing.
    pub capsule: u32,
}

/// Merges raw capsule hits into per-strand crossings, sorted front-to-back.
pub fn merge_strand_crossings(hits: &mut Vec<CapsuleHit>, capsules: &[Capsule]) -> Vec<StrandCrossing> {
    hits.sort_by(|a, b| {
        let sa = capsules[a.capsule as usize].strand;
        let sb = capsules[b.capsule as usize].strand;
        (sa, a.t_enter).partial_cmp(&(sb, b.t_enter)).unwrap()
    });
    let mut out: Vec<StrandCrossing> = Vec::with_capacity(hits.len());
    for h in hits.iter() {
        let strand = capsules[h.capsule as usize].strand;
        if let Some(last) = out.last_mut() {
            if last.strand == strand && h.t_enter <= last.t_exit + 1e-9 {
                last.t_exit = last.t_exit.max(h.t_exit);
                continue;
            }
        }
        out.push(StrandCrossing {
            t_enter: h.t_enter,
            t_exit: h.t_exit,
            strand,
            capsule: h.capsule,
        });
    }
    out.sort_by(|a, b| a.t_enter.partial_cmp(&b.t_enter).unwrap());
    out
}
