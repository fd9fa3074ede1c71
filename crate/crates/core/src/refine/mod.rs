//! Iterative refinement of a set `A` toward a subset whose spectrum has small
//! doubling.
//!
//! State `(A_i, rho_i)` starts at `(A, eps)`. Each iteration builds
//! `M(A_i, Spec_rho(A_i))` and tests it for `lambda_i`-regularity alongside a
//! spectrum-growth gate `|Spec_gate(A_i)| <= K |Spec_rho(A_i)|`:
//!
//! * regular and gate holds: stop with `A* = A_i`;
//! * irregular: extract a denser minor `(A', Gamma')`, move to `A'` and raise
//!   `rho`;
//! * gate fails: keep `A_i` and lower `rho` to the gate threshold.
//!
//! The [`Variant::Linear`] schedule uses `lambda = eps rho / 150` and gate
//! threshold `eps rho / 2`; [`Variant::Quadratic`] uses `rho^2 / 150` and
//! `rho^2 / 2`, and reports the spectrum at the final threshold instead of at
//! `eps`.

mod audit;

use serde::{Deserialize, Serialize};

use crate::coherence::build_matrix;
use crate::error::{Error, Result};
use crate::fourier::{dft, spectrum, FourierTable};
use crate::group::{difference_set, sumset, ElementSet, FiniteAbelianGroup};
use crate::regularity::{
    decide_regularity, extract_minor, ExtractionConstants, ExtractionMode, Quadrant,
    RegularityBudget, RegularityStatus,
};

pub use audit::{audit_trace, final_bound_report, AuditReport, BoundReport};

/// Share of `Spec_rho` that pairs up in the difference-set counting argument.
pub const PAIRING_FRACTION: f64 = 0.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `lambda = eps rho / 150`, gate and growth step at `eps rho / 2`,
    /// `K = |G|^delta`.
    Linear,
    /// `lambda = rho^2 / 150`, gate and growth step at `rho^2 / 2`,
    /// `K = |G|^(delta/2)`.
    Quadratic,
}

impl Variant {
    pub fn lambda(self, epsilon: f64, rho: f64) -> f64 {
        match self {
            Variant::Linear => epsilon * rho / 150.0,
            Variant::Quadratic => rho * rho / 150.0,
        }
    }

    /// Threshold of the gate spectrum, which is also the next `rho` after a
    /// growth step.
    pub fn gate_threshold(self, epsilon: f64, rho: f64) -> f64 {
        match self {
            Variant::Linear => epsilon * rho / 2.0,
            Variant::Quadratic => rho * rho / 2.0,
        }
    }

    /// Lower bound on `rho` before the `j`-th growth step (`j >= 1`).
    pub fn rho_floor(self, epsilon: f64, j: usize) -> f64 {
        match self {
            Variant::Linear => (epsilon / 2.0).powi(j as i32),
            Variant::Quadratic => (epsilon / 2.0).powf(2f64.powi(j as i32)),
        }
    }

    /// Threshold of the spectrum whose doubling is reported at the end.
    pub fn target_threshold(self, epsilon: f64, rho: f64) -> f64 {
        match self {
            Variant::Linear => epsilon,
            Variant::Quadratic => rho,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    pub variant: Variant,
    pub epsilon: f64,
    pub delta: f64,
    /// Growth gate; `None` means `|G|^delta` (linear) or `|G|^(delta/2)`
    /// (quadratic).
    pub k_gate: Option<f64>,
    pub mode: ExtractionMode,
    pub constants: ExtractionConstants,
    pub max_iterations: usize,
    pub budget: RegularityBudget,
    pub seed: u64,
}

impl RefineConfig {
    pub fn new(variant: Variant, epsilon: f64, delta: f64) -> Self {
        Self {
            variant,
            epsilon,
            delta,
            k_gate: None,
            mode: ExtractionMode::Opportunistic,
            constants: ExtractionConstants::default(),
            max_iterations: 500,
            budget: RegularityBudget::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} must lie in (0, 1)", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta = {} must lie in (0, 1)", self.delta));
        }
        if let Some(k) = self.k_gate {
            if !(k >= 1.0) {
                return bad(format!("K = {k} must be at least 1"));
            }
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be at least 1".into());
        }
        Ok(())
    }

    pub fn k_for(&self, group_size: usize) -> f64 {
        self.k_gate.unwrap_or_else(|| {
            let n = group_size as f64;
            match self.variant {
                Variant::Linear => n.powf(self.delta),
                Variant::Quadratic => n.powf(self.delta / 2.0),
            }
        })
    }

    fn iteration_budget(&self, i: usize) -> RegularityBudget {
        let mut b = self.budget.clone();
        b.seed = self
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(i as u64)
            ^ self.budget.seed;
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Certified regular and gate holds.
    Finish,
    /// Regularity undecided, but the gate holds and the doubling conclusion
    /// was verified directly.
    UncertifiedFinish,
    /// Irregular: moved to an extracted minor.
    Irregular,
    /// Gate failed: threshold lowered.
    SpectrumGrowth,
    /// Regularity undecided and the direct check failed.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub rows: usize,
    pub cols: usize,
    pub old_mean: f64,
    pub new_mean: f64,
    pub improvement: f64,
    pub eta: f64,
    pub quadrant: Quadrant,
}

/// Outcome of testing the doubling conclusion without a regularity
/// certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectCheck {
    pub difference_size: usize,
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub index: usize,
    pub rho: f64,
    pub lambda: f64,
    pub gate_threshold: f64,
    pub kind: StepKind,
    pub set_size: usize,
    pub spectrum_size: usize,
    pub gate_size: usize,
    pub gate_ok: bool,
    pub status: RegularityStatus,
    pub upper_bound: f64,
    pub lower_bound: f64,
    pub extraction: Option<ExtractionSummary>,
    pub direct_check: Option<DirectCheck>,
    /// `rho` of the next state, when there is one.
    pub rho_next: Option<f64>,
    /// Intended increase of `rho` on an irregular step. In faithful mode this
    /// is far below f64 resolution, so `rho_next` may equal `rho`.
    pub rho_increment: Option<f64>,
    /// Encoded elements of `A_i`.
    pub set: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminated {
    Finished,
    FinishedUncertified,
    BudgetExhausted,
    Inconclusive,
}

impl Terminated {
    pub fn finished(self) -> bool {
        matches!(self, Terminated::Finished | Terminated::FinishedUncertified)
    }
}

/// Exact sizes and bounds at the final state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    /// `eps` (linear) or `rho*` (quadratic).
    pub target_threshold: f64,
    pub target_size: usize,
    pub sum_size: usize,
    pub difference_size: usize,
    pub spectrum_size: usize,
    pub gate_size: usize,
    pub k_gate: f64,
    /// `2 |Spec_gate|^2 / (0.8 |Spec_rho|)`.
    pub pairing_bound: f64,
    /// `2 |Spec_gate|^2 / |Spec_rho|`.
    pub stated_bound: f64,
    /// `8 K |G| / (eps^2 rho^2 |A*|)` (linear) or `2 K^2 |Spec_rho|`
    /// (quadratic).
    pub interim_bound: f64,
    /// `|Spec_rho*(A*)| / |Spec_eps(A)|`.
    pub spectrum_ratio: f64,
    /// `|S + S| / |S|` for the target spectrum `S`.
    pub doubling: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineResult {
    pub orders: Vec<usize>,
    pub original: Vec<usize>,
    pub a_star: Vec<usize>,
    pub rho_star: f64,
    pub trace: Vec<TraceStep>,
    pub terminated: Terminated,
    pub measured: Measured,
}

impl RefineResult {
    pub fn group(&self) -> Result<FiniteAbelianGroup> {
        FiniteAbelianGroup::new(&self.orders)
    }

    pub fn a_star_set(&self) -> Result<ElementSet> {
        ElementSet::from_indices(&self.group()?, self.a_star.iter().copied())
    }

    pub fn original_set(&self) -> Result<ElementSet> {
        ElementSet::from_indices(&self.group()?, self.original.iter().copied())
    }

    /// Growth steps and irregular steps taken.
    pub fn step_counts(&self) -> (usize, usize) {
        let count = |k| self.trace.iter().filter(|s| s.kind == k).count();
        (count(StepKind::Irregular), count(StepKind::SpectrumGrowth))
    }
}

fn pairing_bound(gate: usize, spec: usize) -> f64 {
    2.0 * (gate as f64).powi(2) / (PAIRING_FRACTION * spec as f64)
}

/// Sizes and bounds for `(a, rho)` under `cfg`.
pub fn measure(
    a: &ElementSet,
    rho: f64,
    original_spectrum: usize,
    cfg: &RefineConfig,
) -> Result<Measured> {
    let table = dft(a)?;
    let g = a.group().size();
    let k = cfg.k_for(g);
    let eps = cfg.epsilon;
    let target_threshold = cfg.variant.target_threshold(eps, rho);
    let target = spectrum(&table, target_threshold)?.into_members();
    let spec = spectrum(&table, rho)?.len();
    let gate = spectrum(&table, cfg.variant.gate_threshold(eps, rho))?.len();
    let sum_size = sumset(&target, &target)?.len();
    let difference_size = difference_set(&target, &target)?.len();
    let interim_bound = match cfg.variant {
        Variant::Linear => 8.0 * k * g as f64 / (eps * eps * rho * rho * a.len() as f64),
        Variant::Quadratic => 2.0 * k * k * spec as f64,
    };
    Ok(Measured {
        target_threshold,
        target_size: target.len(),
        sum_size,
        difference_size,
        spectrum_size: spec,
        gate_size: gate,
        k_gate: k,
        pairing_bound: pairing_bound(gate, spec),
        stated_bound: 2.0 * (gate as f64).powi(2) / spec as f64,
        interim_bound,
        spectrum_ratio: spec as f64 / original_spectrum as f64,
        doubling: sum_size as f64 / target.len() as f64,
    })
}

/// Runs the refinement loop on `a`.
pub fn refine(a: &ElementSet, cfg: &RefineConfig) -> Result<RefineResult> {
    cfg.validate()?;
    if a.is_empty() {
        return Err(Error::EmptySet);
    }
    let group = a.group().clone();
    let eps = cfg.epsilon;
    let k = cfg.k_for(group.size());
    let original_spectrum = spectrum(&dft(a)?, eps)?.len();

    let mut current = a.clone();
    let mut rho = eps;
    let mut table: Option<FourierTable> = None;
    let mut trace = Vec::new();
    let mut terminated = Terminated::BudgetExhausted;

    for i in 0..cfg.max_iterations {
        let t = match table.take() {
            Some(t) => t,
            None => dft(&current)?,
        };
        let lambda = cfg.variant.lambda(eps, rho);
        let gate_threshold = cfg.variant.gate_threshold(eps, rho);
        let spec = spectrum(&t, rho)?;
        let gate = spectrum(&t, gate_threshold)?;
        assert!(
            spec.members().contains(0),
            "trivial character missing from spectrum"
        );
        let gate_ok = gate.len() as f64 <= k * spec.len() as f64;
        let cm = build_matrix(&current, spec.members(), &t)?;
        let verdict = decide_regularity(cm.matrix(), lambda, &cfg.iteration_budget(i));

        let mut step = TraceStep {
            index: i,
            rho,
            lambda,
            gate_threshold,
            kind: StepKind::Inconclusive,
            set_size: current.len(),
            spectrum_size: spec.len(),
            gate_size: gate.len(),
            gate_ok,
            status: verdict.status,
            upper_bound: verdict.upper_bound,
            lower_bound: verdict.lower_bound,
            extraction: None,
            direct_check: None,
            rho_next: None,
            rho_increment: None,
            set: current.indices(),
        };

        if verdict.status == RegularityStatus::Regular && gate_ok {
            step.kind = StepKind::Finish;
            trace.push(step);
            terminated = Terminated::Finished;
            break;
        }

        if verdict.status == RegularityStatus::Irregular {
            let witness = verdict
                .witness
                .as_ref()
                .expect("irregular verdict carries a witness");
            match extract_minor(cm.matrix(), witness, lambda, cfg.mode, &cfg.constants) {
                Ok(minor) => {
                    let (increment, next) = match cfg.mode {
                        ExtractionMode::Faithful => {
                            let inc = cfg.constants.c / 2.0 * lambda.powi(15);
                            (inc, (rho + inc).min(1.0))
                        }
                        ExtractionMode::Opportunistic => {
                            let next = minor.new_mean.min(1.0);
                            (next - rho, next)
                        }
                    };
                    if increment > 0.0 {
                        let (a_sub, _) = minor.to_sets(&cm);
                        step.kind = StepKind::Irregular;
                        step.extraction = Some(ExtractionSummary {
                            rows: minor.rows.len(),
                            cols: minor.cols.len(),
                            old_mean: minor.old_mean,
                            new_mean: minor.new_mean,
                            improvement: minor.improvement,
                            eta: minor.eta,
                            quadrant: minor.quadrant,
                        });
                        step.rho_increment = Some(increment);
                        step.rho_next = Some(next);
                        trace.push(step);
                        current = a_sub;
                        rho = next;
                        continue;
                    }
                }
                Err(Error::DegenerateExtraction) => {}
                Err(e) => return Err(e),
            }
        }

        if !gate_ok {
            step.kind = StepKind::SpectrumGrowth;
            step.rho_next = Some(gate_threshold);
            trace.push(step);
            rho = gate_threshold;
            table = Some(t);
            continue;
        }

        // Gate holds but regularity is unresolved: test the doubling
        // conclusion itself.
        let target = spectrum(&t, cfg.variant.target_threshold(eps, rho))?.into_members();
        let difference_size = difference_set(&target, &target)?.len();
        let bound = pairing_bound(gate.len(), spec.len());
        let holds = difference_size as f64 <= bound;
        step.direct_check = Some(DirectCheck {
            difference_size,
            bound,
            holds,
        });
        step.kind = if holds {
            StepKind::UncertifiedFinish
        } else {
            StepKind::Inconclusive
        };
        terminated = if holds {
            Terminated::FinishedUncertified
        } else {
            Terminated::Inconclusive
        };
        trace.push(step);
        break;
    }

    let measured = measure(&current, rho, original_spectrum, cfg)?;
    Ok(RefineResult {
        orders: group.orders().to_vec(),
        original: a.indices(),
        a_star: current.indices(),
        rho_star: rho,
        trace,
        terminated,
        measured,
    })
}

/// [`refine`] with the linear schedule.
pub fn refine_linear(a: &ElementSet, cfg: &RefineConfig) -> Result<RefineResult> {
    refine(
        a,
        &RefineConfig {
            variant: Variant::Linear,
            ..cfg.clone()
        },
    )
}

/// [`refine`] with the quadratic schedule.
pub fn refine_quadratic(a: &ElementSet, cfg: &RefineConfig) -> Result<RefineResult> {
    refine(
        a,
        &RefineConfig {
            variant: Variant::Quadratic,
            ..cfg.clone()
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{subgroup_span, GroupElement};

    fn subgroup() -> ElementSet {
        let g = FiniteAbelianGroup::binary(6).unwrap();
        let gens: Vec<GroupElement> = [[1, 0, 0, 0, 0, 0], [0, 1, 1, 0, 0, 0], [0, 0, 0, 1, 0, 1]]
            .iter()
            .map(|c| GroupElement(c.to_vec()))
            .collect();
        subgroup_span(&g, &gens).unwrap()
    }

    #[test]
    fn subgroup_is_a_fixed_point() {
        let h = subgroup();
        for variant in [Variant::Linear, Variant::Quadratic] {
            let r = refine(&h, &RefineConfig::new(variant, 0.5, 0.3)).unwrap();
            assert_eq!(r.terminated, Terminated::Finished);
            assert_eq!(r.trace.len(), 1);
            assert_eq!(r.a_star, h.indices());
            assert_eq!(r.measured.sum_size, 8);
            assert_eq!(r.measured.doubling, 1.0);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = RefineConfig::new(Variant::Linear, 0.5, 0.3);
        assert!(c.validate().is_ok());
        c.epsilon = 1.0;
        assert!(c.validate().is_err());
        c.epsilon = 0.5;
        c.k_gate = Some(0.5);
        assert!(c.validate().is_err());
        c.k_gate = None;
        c.max_iterations = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn floors() {
        assert_eq!(Variant::Linear.rho_floor(0.4, 1), 0.2);
        assert!((Variant::Quadratic.rho_floor(0.4, 1) - 0.04).abs() < 1e-15);
    }
}
