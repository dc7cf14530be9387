use serde::{Deserialize, Serialize};

use super::{conjugate_tolerance, CutProfile};
use crate::geodesic::wrap_angle;
use crate::surface::{norm, sub, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutPointKind {
    Conjugate,
    Cleave,
    BranchCandidate,
    /// Order one and not conjugate: the grid did not resolve a partner.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutPointRecord {
    pub point: Vec3,
    pub chart: Option<(usize, [f64; 2])>,
    /// Grid indices whose cut points fell into this cluster.
    pub members: Vec<usize>,
    /// Minimizing initial angles grouped into clusters.
    pub angle_clusters: Vec<Vec<f64>>,
    pub order: usize,
    pub kind: CutPointKind,
    /// The angle set covers the whole circle (round-sphere antipode).
    pub degenerate: bool,
}

fn cluster_angles(mut angles: Vec<f64>, gap: f64) -> (Vec<Vec<f64>>, bool) {
    angles.iter_mut().for_each(|a| *a = wrap_angle(*a));
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let n = angles.len();
    if n == 0 {
        return (Vec::new(), false);
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let gaps: Vec<f64> = (0..n).map(|i| if i + 1 < n { angles[i + 1] - angles[i] } else { angles[0] + two_pi - angles[n - 1] }).collect();
    let Some(cut) = gaps.iter().position(|&g| g > gap) else {
        return (vec![angles], true);
    };
    // Start right after a real gap so no cluster straddles the seam.
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut cur = Vec::new();
    for k in 0..n {
        let i = (cut + 1 + k) % n;
        cur.push(angles[i]);
        if gaps[i] > gap {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    (out, false)
}

/// Groups the cut points w_i by proximity and labels each group.
pub fn classify_cut_points(profile: &CutProfile) -> Vec<CutPointRecord> {
    let radius = 1e-3 * profile.d_p;
    let conj_tol = conjugate_tolerance(profile.d_p);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, w) in profile.cut_points.iter().enumerate() {
        match groups.iter_mut().find(|g| norm(sub(profile.cut_points[g[0]], *w)) <= radius) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    let gap = 1.5 * profile.step();
    groups
        .into_iter()
        .map(|members| {
            let mut angles: Vec<f64> = members.iter().map(|&i| profile.rays[i].theta).collect();
            angles.extend(members.iter().filter_map(|&i| profile.rays[i].partner));
            let (angle_clusters, degenerate) = cluster_angles(angles, gap);
            let order = angle_clusters.len();
            let conjugate = members.iter().any(|&i| profile.rays[i].f_at_cut < conj_tol);
            let kind = if conjugate {
                CutPointKind::Conjugate
            } else if order == 2 {
                CutPointKind::Cleave
            } else if order >= 3 {
                CutPointKind::BranchCandidate
            } else {
                CutPointKind::Unresolved
            };
            let point = profile.cut_points[members[0]];
            let chart = profile.base.surface.best_chart(point).map(|(c, u, v, _)| (c, [u, v]));
            CutPointRecord { point, chart, members, angle_clusters, order, kind, degenerate }
        })
        .collect()
}
