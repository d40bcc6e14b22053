//! Network selection in an overlap zone.

use std::cmp::Ordering;

use super::{NetworkId, OverlapError, VlrId};

/// Floor on |Vs| in the ratio rule.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// How the bandwidth ratio and the velocity sign combine into one score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CombiningRule {
    /// C = |q| / max(|Vs|, ε).
    Ratio { epsilon: f64 },
    /// Compare |q| first, then prefer the larger |Vs|.
    Lexicographic,
}

impl Default for CombiningRule {
    fn default() -> Self {
        CombiningRule::Ratio {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateCondition {
    pub q: f64,
    pub vs: f64,
    /// Scalar score; lower is better. Under the lexicographic rule this is |q|.
    pub c: f64,
}

/// Bandwidth required over bandwidth available.
pub fn compute_qos(required: f64, available: f64) -> Result<f64, OverlapError> {
    if available > 0.0 {
        Ok(required / available)
    } else {
        Err(OverlapError::NoCapacity)
    }
}

/// Signed approach speed toward the candidate's coverage over the reference
/// speed. The terminal's own network always counts as positive.
pub fn compute_velocity_sign(
    approach_kmh: f64,
    candidate_is_own: bool,
    reference_speed: f64,
) -> Result<f64, OverlapError> {
    if !(reference_speed > 0.0) {
        return Err(OverlapError::BadReferenceSpeed(reference_speed));
    }
    let vs = approach_kmh / reference_speed;
    Ok(if candidate_is_own { vs.abs() } else { vs })
}

pub fn update_condition(q: f64, vs: f64, rule: CombiningRule) -> UpdateCondition {
    let c = match rule {
        CombiningRule::Ratio { epsilon } => q.abs() / vs.abs().max(epsilon),
        CombiningRule::Lexicographic => q.abs(),
    };
    UpdateCondition { q, vs, c }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub network: NetworkId,
    pub vlr: VlrId,
    pub own: bool,
    pub condition: UpdateCondition,
}

fn rank(a: &Candidate, b: &Candidate, rule: CombiningRule) -> Ordering {
    let score = match rule {
        CombiningRule::Ratio { .. } => a.condition.c.total_cmp(&b.condition.c),
        CombiningRule::Lexicographic => a
            .condition
            .q
            .abs()
            .total_cmp(&b.condition.q.abs())
            .then_with(|| b.condition.vs.abs().total_cmp(&a.condition.vs.abs())),
    };
    score
        .then_with(|| b.own.cmp(&a.own))
        .then_with(|| a.network.cmp(&b.network))
        .then_with(|| a.vlr.cmp(&b.vlr))
}

/// Lowest score wins; ties go to the own network, then the lowest network id.
pub fn choose_network(
    candidates: &[Candidate],
    rule: CombiningRule,
) -> Result<Candidate, OverlapError> {
    candidates
        .iter()
        .copied()
        .min_by(|a, b| rank(a, b, rule))
        .ok_or(OverlapError::NoCandidates)
}
