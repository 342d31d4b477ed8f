use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Result, RigidityError};
use crate::immersion::{energies, EnergyReport, ImmersionField, Measure, MetricField, ReferenceShape};
use crate::par;
use crate::scenario::{scenario_generate, Family, ScenarioSpec};

/// One member of an asymptotic sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceMember {
    pub epsilon: f64,
    pub energies: EnergyReport,
    /// `‖Dū_k - Dū_K‖_{L^p}` against the final member.
    pub gap_to_final: f64,
    /// `∫ dist^p(Dū_k, O(g, e_D)) dvol_g`.
    pub defect: f64,
    /// `(∫ |Dū_k (S_{u_k} - S)|^p dvol_g)^{1/p}`.
    pub shape_error: f64,
    /// `round(E_s^{-1/(p+1)})`, the partition size coupled to the stretch.
    pub coupled_t: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceReport {
    pub p: f64,
    pub members: Vec<SequenceMember>,
    pub final_defect: f64,
    pub final_shape_error: f64,
    pub stretch_decreasing: bool,
    pub gap_decreasing: bool,
    pub defect_decreasing: bool,
    pub shape_error_decreasing: bool,
}

fn strictly_decreasing(values: impl Iterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.collect();
    v.windows(2).all(|w| w[1] < w[0])
}

/// `(Σ w |Dū_a - Dū_b|^p_{g,e})^{1/p}` with Riemannian weights.
fn w1p_gap(a: &ImmersionField, b: &ImmersionField, g: &MetricField, p: f64) -> f64 {
    let h_d = g.grid().cell_volume();
    let terms = par::map_range(g.grid().cell_count(), |c| {
        let gc = g.cell(c);
        let diff = &a.differentials()[c] - &b.differentials()[c];
        gc.determinant().sqrt() * h_d * (diff * gc.inv_sqrt()).norm().powf(p)
    });
    terms.iter().sum::<f64>().powf(1.0 / p)
}

/// Energies, gaps and shape-operator recovery along a perturbation family
/// with a non-increasing `ε` schedule.
///
/// Every spec must be a [`Family::Perturbation`] on the same grid and carry
/// the reference shape; the metric and reference of the first spec are used.
pub fn asymptotic_sequence_run(specs: &[ScenarioSpec], p: f64) -> Result<SequenceReport> {
    check_exponent(p)?;
    let first = specs.first().ok_or_else(|| RigidityError::InvalidConfig("empty schedule".into()))?;
    let mut eps = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        match spec.family {
            Family::Perturbation { epsilon, .. } => eps.push(epsilon),
            _ => return Err(RigidityError::InvalidScenario("asymptotic runs need the perturbation family".into())),
        }
        if spec.grid != first.grid {
            return Err(RigidityError::InvalidConfig("all members must share the grid".into()));
        }
        if i > 0 && eps[i] > eps[i - 1] {
            return Err(RigidityError::NonMonotoneSchedule { index: i });
        }
    }
    let base = scenario_generate(first)?;
    let g: MetricField = base.metric;
    let reference: ReferenceShape =
        base.reference.ok_or_else(|| RigidityError::InvalidConfig("asymptotic runs need a reference shape".into()))?;
    let fields = specs
        .iter()
        .map(|s| {
            scenario_generate(s)?
                .field
                .immersion()
                .cloned()
                .ok_or_else(|| RigidityError::InvalidScenario("asymptotic runs need an immersion".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    let last = fields.last().expect("non-empty");
    let members = fields
        .iter()
        .zip(&eps)
        .map(|(u, &epsilon)| {
            let e = energies(u, &g, Some(&reference), p, Measure::Riemannian)?;
            let coupled_t = (e.stretch > 0.0).then(|| e.stretch.powf(-1.0 / (p + 1.0)).round() as u64);
            Ok(SequenceMember {
                epsilon,
                gap_to_final: w1p_gap(u, last, &g, p),
                defect: e.stretch,
                shape_error: e.bend_reference.unwrap_or(0.0).powf(1.0 / p),
                coupled_t,
                energies: e,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fin = members.last().expect("non-empty");
    Ok(SequenceReport {
        p,
        final_defect: fin.defect,
        final_shape_error: fin.shape_error,
        stretch_decreasing: strictly_decreasing(members.iter().map(|m| m.energies.stretch)),
        gap_decreasing: strictly_decreasing(members[..members.len() - 1].iter().map(|m| m.gap_to_final)),
        defect_decreasing: strictly_decreasing(members.iter().map(|m| m.defect)),
        shape_error_decreasing: strictly_decreasing(members.iter().map(|m| m.shape_error)),
        members,
    })
}

/// `ε_k = eps0 · 2^{-k}` for `k = 0..=k_max` applied to a perturbation spec.
pub fn geometric_schedule(spec: &ScenarioSpec, eps0: f64, k_max: u32) -> Result<Vec<ScenarioSpec>> {
    (0..=k_max).map(|k| spec.clone().with_epsilon(eps0 * 0.5f64.powi(k as i32))).collect()
}
