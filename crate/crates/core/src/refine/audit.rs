use serde::{Deserialize, Serialize};

use super::{measure, Measured, RefineConfig, RefineResult, StepKind, Terminated};
use crate::error::{Error, Result};
use crate::fourier::{dft, spectrum, FourierTable};
use crate::group::{difference_set, ElementSet};
use crate::regularity::{ExtractionMode, RegularityStatus};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    pub violations: Vec<String>,
    /// Irregular steps taken.
    pub k1: usize,
    /// Growth steps taken.
    pub k2: usize,
    /// State index reached by each growth step, in order.
    pub eta: Vec<usize>,
    /// `|Spec| at state eta(j)` over `|Spec| at state eta(j+1) - 1`.
    pub t_ratios: Vec<f64>,
    pub sqrt_k: f64,
    /// Number of `rho` floor checks performed.
    pub floors_checked: usize,
}

/// Recomputes every recorded quantity that can be recomputed from the stored
/// sets and checks the invariants of the loop.
///
/// Checks: initial state, `rho` in `(0, 1]`, `lambda` and gate threshold
/// formulas, spectrum and gate sizes against a fresh transform, the floor
/// `rho_i >= rho_floor(eps, j)` before the `j`-th growth step, the direction
/// of each `rho` update, `A_{i+1} = A_i` on growth steps and
/// `A_{i+1} ⊆ A_i` on irregular steps, and that a growth step multiplies the
/// spectrum size by more than `K`.
pub fn audit_trace(result: &RefineResult, cfg: &RefineConfig) -> Result<AuditReport> {
    let group = result.group()?;
    let k = cfg.k_for(group.size());
    let eps = cfg.epsilon;
    let mut v: Vec<String> = Vec::new();
    let trace = &result.trace;
    if trace.is_empty() {
        v.push("trace is empty".into());
    }

    let mut cache: Option<(Vec<usize>, FourierTable)> = None;
    let mut table_for = |set: &[usize]| -> Result<FourierTable> {
        if let Some((s, t)) = &cache {
            if s.as_slice() == set {
                return Ok(t.clone());
            }
        }
        let es = ElementSet::from_indices(&group, set.iter().copied())?;
        let t = dft(&es)?;
        cache = Some((set.to_vec(), t.clone()));
        Ok(t)
    };

    let mut growth_seen = 0usize;
    let mut floors_checked = 0usize;
    let mut eta = Vec::new();
    for (pos, step) in trace.iter().enumerate() {
        let tag = format!("step {pos}");
        if step.index != pos {
            v.push(format!("{tag}: recorded index {}", step.index));
        }
        if pos == 0 {
            if step.set != result.original {
                v.push(format!("{tag}: initial set differs from the input"));
            }
            if step.rho != eps {
                v.push(format!(
                    "{tag}: initial rho {} differs from eps {eps}",
                    step.rho
                ));
            }
        }
        if !(step.rho > 0.0 && step.rho <= 1.0) {
            v.push(format!("{tag}: rho {} outside (0, 1]", step.rho));
        }
        if step.lambda != cfg.variant.lambda(eps, step.rho) {
            v.push(format!(
                "{tag}: lambda {} does not match the schedule",
                step.lambda
            ));
        }
        if step.gate_threshold != cfg.variant.gate_threshold(eps, step.rho) {
            v.push(format!("{tag}: gate threshold does not match the schedule"));
        }
        let floor = cfg.variant.rho_floor(eps, growth_seen + 1);
        floors_checked += 1;
        if step.rho < floor {
            v.push(format!(
                "{tag}: rho {} below floor {floor} before growth step {}",
                step.rho,
                growth_seen + 1
            ));
        }
        if step.set_size != step.set.len() {
            v.push(format!(
                "{tag}: set size {} but {} stored elements",
                step.set_size,
                step.set.len()
            ));
        }

        let table = table_for(&step.set)?;
        let spec = spectrum(&table, step.rho)?;
        let gate = spectrum(&table, step.gate_threshold)?;
        if spec.len() != step.spectrum_size || gate.len() != step.gate_size {
            v.push(format!(
                "{tag}: recorded sizes ({}, {}) but recomputed ({}, {})",
                step.spectrum_size,
                step.gate_size,
                spec.len(),
                gate.len()
            ));
        }
        let gate_ok = gate.len() as f64 <= k * spec.len() as f64;
        if gate_ok != step.gate_ok {
            v.push(format!(
                "{tag}: gate flag {} but recomputed {gate_ok}",
                step.gate_ok
            ));
        }

        let last = pos + 1 == trace.len();
        let (next_set, next_rho) = match trace.get(pos + 1) {
            Some(n) => (n.set.as_slice(), n.rho),
            None => (result.a_star.as_slice(), result.rho_star),
        };
        match step.kind {
            StepKind::Finish => {
                if step.status != RegularityStatus::Regular || !gate_ok {
                    v.push(format!(
                        "{tag}: finish without certified regularity and gate"
                    ));
                }
                if !last {
                    v.push(format!("{tag}: finish is not the last step"));
                }
            }
            StepKind::UncertifiedFinish | StepKind::Inconclusive => {
                if !last {
                    v.push(format!("{tag}: terminal step is not the last step"));
                }
                if !gate_ok {
                    v.push(format!("{tag}: direct check ran with a failing gate"));
                }
                match &step.direct_check {
                    None => v.push(format!("{tag}: missing direct check")),
                    Some(dc) => {
                        let target = spectrum(&table, cfg.variant.target_threshold(eps, step.rho))?
                            .into_members();
                        let d = difference_set(&target, &target)?.len();
                        let holds = d as f64 <= dc.bound;
                        if d != dc.difference_size
                            || holds != dc.holds
                            || holds != (step.kind == StepKind::UncertifiedFinish)
                        {
                            v.push(format!("{tag}: direct check does not reproduce"));
                        }
                    }
                }
            }
            StepKind::Irregular => {
                if step.status != RegularityStatus::Irregular {
                    v.push(format!(
                        "{tag}: minor extracted without an irregular verdict"
                    ));
                }
                let here = ElementSet::from_indices(&group, step.set.iter().copied())?;
                let there = ElementSet::from_indices(&group, next_set.iter().copied())?;
                if !there.is_subset(&here) || there.is_empty() {
                    v.push(format!("{tag}: next set is not a nonempty subset"));
                }
                let increased = match cfg.mode {
                    ExtractionMode::Opportunistic => next_rho > step.rho,
                    ExtractionMode::Faithful => {
                        next_rho >= step.rho && step.rho_increment.is_some_and(|d| d > 0.0)
                    }
                };
                if !increased || step.rho_next != Some(next_rho) {
                    v.push(format!(
                        "{tag}: rho did not increase ({} -> {next_rho})",
                        step.rho
                    ));
                }
            }
            StepKind::SpectrumGrowth => {
                growth_seen += 1;
                eta.push(pos + 1);
                if gate_ok {
                    v.push(format!("{tag}: growth step with a passing gate"));
                }
                if next_set != step.set.as_slice() {
                    v.push(format!("{tag}: growth step changed the set"));
                }
                if next_rho != step.gate_threshold || step.rho_next != Some(next_rho) {
                    v.push(format!("{tag}: growth step moved rho to {next_rho}"));
                }
                if !(next_rho < step.rho) {
                    v.push(format!("{tag}: growth step did not lower rho"));
                }
                // the next state's spectrum is this gate spectrum
                let grown = spectrum(&table, next_rho)?.len();
                if !(grown as f64 > k * spec.len() as f64) {
                    v.push(format!(
                        "{tag}: spectrum grew from {} to {grown}, not by more than K = {k}",
                        spec.len()
                    ));
                }
            }
        }
    }

    // terminal status
    if let Some(last) = trace.last() {
        let expected = match last.kind {
            StepKind::Finish => Terminated::Finished,
            StepKind::UncertifiedFinish => Terminated::FinishedUncertified,
            StepKind::Inconclusive => Terminated::Inconclusive,
            StepKind::Irregular | StepKind::SpectrumGrowth => Terminated::BudgetExhausted,
        };
        if expected != result.terminated {
            v.push(format!(
                "terminated {:?} but last step implies {expected:?}",
                result.terminated
            ));
        }
        if expected == Terminated::BudgetExhausted && trace.len() != cfg.max_iterations {
            v.push("budget exhausted before max_iterations".into());
        }
        if expected.finished() && (last.set != result.a_star || last.rho != result.rho_star) {
            v.push("final state differs from the finishing step".into());
        }
    }

    let sizes: Vec<usize> = trace.iter().map(|s| s.spectrum_size).collect();
    let size_at = |state: usize| -> Option<usize> { sizes.get(state).copied() };
    let t_ratios = eta
        .windows(2)
        .filter_map(|w| Some(size_at(w[0])? as f64 / size_at(w[1] - 1)? as f64))
        .collect();

    let (k1, k2) = result.step_counts();
    Ok(AuditReport {
        passed: v.is_empty(),
        violations: v,
        k1,
        k2,
        eta,
        t_ratios,
        sqrt_k: k.sqrt(),
        floors_checked,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub group_size: usize,
    pub set_size: usize,
    pub star_size: usize,
    /// `log|A| / log|G|`.
    pub alpha: f64,
    /// `|A| / |A*|`.
    pub c_emp: f64,
    /// `1 - alpha + delta`.
    pub exponent: f64,
    /// `|G|^(1 - alpha + delta)`.
    pub group_power: f64,
    pub certified: bool,
    pub measured: Measured,
    pub symmetric: bool,
    pub pairing_holds: bool,
    pub interim_holds: bool,
    /// Failures of inequalities that must hold given how the run finished.
    pub violations: Vec<String>,
    pub passed: bool,
}

/// Recomputes the final measurements from `A*` and checks the doubling
/// bounds. Both bounds are guaranteed once regularity is certified; for an
/// uncertified finish the pairing bound was checked directly and the
/// Parseval-composed bound is reported only.
pub fn final_bound_report(
    result: &RefineResult,
    original: &ElementSet,
    cfg: &RefineConfig,
) -> Result<BoundReport> {
    if !result.terminated.finished() {
        return Err(Error::NotFinished);
    }
    let a_star = result.a_star_set()?;
    let g = original.group().size();
    let original_spectrum = spectrum(&dft(original)?, cfg.epsilon)?.len();
    let m = measure(&a_star, result.rho_star, original_spectrum, cfg)?;
    let mut violations = Vec::new();
    if m != result.measured {
        violations.push("stored measurements do not reproduce".to_string());
    }
    let symmetric = m.sum_size == m.difference_size;
    if !symmetric {
        violations.push(format!(
            "|S+S| = {} but |S-S| = {}",
            m.sum_size, m.difference_size
        ));
    }
    let pairing_holds = m.difference_size as f64 <= m.pairing_bound;
    let interim_holds = m.difference_size as f64 <= m.interim_bound;
    let certified = result.terminated == Terminated::Finished;
    if !pairing_holds && result.terminated.finished() {
        violations.push(format!(
            "|S-S| = {} exceeds the pairing bound {}",
            m.difference_size, m.pairing_bound
        ));
    }
    if certified && !interim_holds {
        violations.push(format!(
            "|S-S| = {} exceeds the interim bound {}",
            m.difference_size, m.interim_bound
        ));
    }
    let alpha = (original.len() as f64).ln() / (g as f64).ln();
    let exponent = 1.0 - alpha + cfg.delta;
    Ok(BoundReport {
        group_size: g,
        set_size: original.len(),
        star_size: a_star.len(),
        alpha,
        c_emp: original.len() as f64 / a_star.len() as f64,
        exponent,
        group_power: (g as f64).powf(exponent),
        certified,
        measured: m,
        symmetric,
        pairing_holds,
        interim_holds,
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{refine, Variant};
    use super::*;
    use crate::group::{subgroup_span, FiniteAbelianGroup, GroupElement};

    #[test]
    fn subgroup_run_audits_clean() {
        let g = FiniteAbelianGroup::new(&[2, 2, 4]).unwrap();
        let h = subgroup_span(
            &g,
            &[GroupElement(vec![0, 0, 2]), GroupElement(vec![1, 0, 0])],
        )
        .unwrap();
        let cfg = RefineConfig::new(Variant::Linear, 0.5, 0.3);
        let r = refine(&h, &cfg).unwrap();
        let a = audit_trace(&r, &cfg).unwrap();
        assert!(a.passed, "{:?}", a.violations);
        assert_eq!((a.k1, a.k2), (0, 0));
        let b = final_bound_report(&r, &h, &cfg).unwrap();
        assert!(b.passed && b.certified);
        assert_eq!(b.measured.sum_size, 4);
        assert_eq!(b.c_emp, 1.0);
    }

    #[test]
    fn tampered_trace_fails() {
        let g = FiniteAbelianGroup::binary(4).unwrap();
        let h = subgroup_span(&g, &[GroupElement(vec![1, 0, 0, 0])]).unwrap();
        let cfg = RefineConfig::new(Variant::Quadratic, 0.5, 0.3);
        let mut r = refine(&h, &cfg).unwrap();
        r.trace[0].spectrum_size += 1;
        assert!(!audit_trace(&r, &cfg).unwrap().passed);
    }
}
