//! Greedy nearest-neighbour association with a distance gate.

use jtr_core::models::{Registration, TrackState};

use super::synth::Detection;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssociationMap {
    /// `(track id, detection index)`.
    pub pairs: Vec<(u64, usize)>,
    /// Detection indices left over, ascending.
    pub unassociated: Vec<usize>,
}

/// Pairs detections with tracks by Cartesian distance between the track
/// position and the detection back-projected through `registration`.
///
/// Candidates beyond `gate` are dropped; the rest are accepted closest
/// first, ties going to the lower detection index. A track takes at most one
/// detection per sensor.
pub fn associate(
    tracks: &[(u64, TrackState)],
    registration: &[Registration],
    observed: &[Detection],
    gate: f64,
) -> AssociationMap {
    let mut candidates = Vec::new();
    for (j, det) in observed.iter().enumerate() {
        let Some(reg) = registration.get(det.sensor()) else { continue };
        let (px, py) = det.measurement.back_project(reg);
        for (slot, (_, x)) in tracks.iter().enumerate() {
            let d = (x.xi - px).hypot(x.eta - py);
            if d <= gate {
                candidates.push((d, j, slot));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let sensors = registration.len();
    let mut used_det = vec![false; observed.len()];
    let mut used_pair = vec![false; tracks.len() * sensors];
    let mut pairs = Vec::new();
    for (_, j, slot) in candidates {
        let key = slot * sensors + observed[j].sensor();
        if used_det[j] || used_pair[key] {
            continue;
        }
        used_det[j] = true;
        used_pair[key] = true;
        pairs.push((tracks[slot].0, j));
    }
    pairs.sort_by_key(|p| p.1);
    let unassociated = (0..observed.len()).filter(|j| !used_det[*j]).collect();
    AssociationMap { pairs, unassociated }
}
