//! Bounds of the well-posedness propositions checked against a run log.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::semiconvergence::detect_semiconvergence;
use crate::estimator::{trace::trapezoid, Regime, RunTrace, StepRecord};
use crate::gains::GainConstants;
use crate::observation::cond_d_violated;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditStatus {
    Pass,
    Fail,
    NotComputable,
    /// Reported value without a bound to compare against.
    Info,
}

impl fmt::Display for AuditStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuditStatus::Pass => "pass",
            AuditStatus::Fail => "FAIL",
            AuditStatus::NotComputable => "not-computable",
            AuditStatus::Info => "info",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditLine {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub status: AuditStatus,
    pub note: String,
}

impl fmt::Display for AuditLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<28} {:<14} lhs={:.6e} rhs={:.6e}", self.name, self.status, self.lhs, self.rhs)?;
        if !self.note.is_empty() {
            write!(f, "  {}", self.note)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub lines: Vec<AuditLine>,
}

impl AuditReport {
    pub fn line(&self, name: &str) -> Option<&AuditLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.lines.iter().all(|l| matches!(l.status, AuditStatus::Pass | AuditStatus::Info))
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lines {
            writeln!(f, "{l}")?;
        }
        Ok(())
    }
}

/// What the audit needs from a run; built from a [`RunTrace`] or from a
/// trace file plus the configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditInput<'a> {
    pub regime: Regime,
    pub h_t: f64,
    pub sigma: f64,
    pub constants: GainConstants,
    pub records: &'a [StepRecord],
    pub sup_pu_vhat: f64,
    pub q_star_q: f64,
}

impl<'a> AuditInput<'a> {
    pub fn from_trace(trace: &'a RunTrace, sigma: f64) -> Self {
        Self {
            regime: trace.regime,
            h_t: trace.h_t,
            sigma: if trace.regime == Regime::Noisy { sigma } else { 0.0 },
            constants: trace.constants,
            records: &trace.records,
            sup_pu_vhat: trace.sup_pu_vhat,
            q_star_q: trace.q_star_q,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditOptions {
    /// Relative slack granted to every bound for discretization effects.
    pub slack: f64,
    /// Constant `C` of the per-step Lyapunov slack `C h_t^2`, if known.
    pub lyapunov_c: Option<f64>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            slack: 0.1,
            lyapunov_c: None,
        }
    }
}

fn bound(name: &str, lhs: f64, rhs: f64, slack: f64, note: impl Into<String>) -> AuditLine {
    let status = if !lhs.is_finite() || !rhs.is_finite() {
        AuditStatus::NotComputable
    } else if lhs <= (1.0 + slack) * rhs + 1e-14 {
        AuditStatus::Pass
    } else {
        AuditStatus::Fail
    };
    AuditLine {
        name: name.into(),
        lhs,
        rhs,
        status,
        note: note.into(),
    }
}

fn info(name: &str, lhs: f64, rhs: f64, note: impl Into<String>) -> AuditLine {
    AuditLine {
        name: name.into(),
        lhs,
        rhs,
        status: AuditStatus::Info,
        note: note.into(),
    }
}

/// First step with `t > 0` whose norms violate the defect condition,
/// recomputed from the logged norms.
pub fn first_cond_d_failure(records: &[StepRecord], c: &GainConstants) -> Option<usize> {
    records
        .iter()
        .position(|r| r.t > 0.0 && cond_d_violated(r.norms.d_vtil, r.norms.r_vxtil, r.norms.r_x, c.c_m, c.big_c_m))
}

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

/// Evaluates the bounds matching the run's regime. Noisy runs are audited on
/// `[0, T*)` only.
pub fn audit_propositions(input: &AuditInput<'_>, opts: &AuditOptions) -> AuditReport {
    let c = &input.constants;
    let s = opts.slack;
    let mut lines = Vec::new();
    let all = input.records;
    if all.is_empty() {
        lines.push(AuditLine {
            name: "trace".into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            status: AuditStatus::NotComputable,
            note: "empty trace".into(),
        });
        return AuditReport { lines };
    }
    let tstar = first_cond_d_failure(all, c);
    let recs = match (input.regime, tstar) {
        (Regime::Noisy, Some(k)) => &all[..k],
        _ => all,
    };
    let times: Vec<f64> = recs.iter().map(|r| r.t).collect();
    let e2 = |r: &StepRecord| r.norms.e_q * r.norms.e_q;
    let r0 = &all[0];
    let cvx2 = c.c_vxhat_x * c.c_vxhat_x;
    let pu2 = input.sup_pu_vhat * input.sup_pu_vhat;
    let cn_ratio2 = c.big_c_n * c.big_c_n / (c.c_n * c.c_n);

    match input.regime {
        Regime::Exact => {
            let e0 = r0.lyapunov();
            lines.push(bound("prop1.1 energy", max_of(recs.iter().map(StepRecord::lyapunov)), e0, s, "sup_t |e|_Q^2 + |r|_X^2"));
            let rhs = r0.norms.p_x.max(c.c_a * c.c_a / (c.c_n * cvx2 * c.nu_min) * e0 + cn_ratio2 * pu2);
            lines.push(bound("prop1.2 unobserved", max_of(recs.iter().map(|r| r.norms.p_x)), rhs, s, "sup_t |p|_X"));
            let v: Vec<f64> = recs.iter().map(|r| r.norms.p_vhat * r.norms.r_x).collect();
            lines.push(bound("prop1.3 coupling", trapezoid(&times, &v), e0 / c.l_c, s, "int |p|_Vhat |r|_X"));
        }
        Regime::Noisy => {
            let e0 = r0.lyapunov();
            let rhs1 = if input.sigma > 0.0 {
                e0.max(input.q_star_q * input.q_star_q)
            } else {
                e0
            };
            lines.push(bound("prop2.1 energy", max_of(recs.iter().map(StepRecord::lyapunov)), rhs1, s, "on [0, T*)"));
            let a = cn_ratio2 * cvx2 * cvx2 * pu2 + c.c_a * cvx2 / (c.c_n * c.nu_min) * e0;
            let rhs2 = 2.0 * a.max(r0.norms.p_x * r0.norms.p_x);
            lines.push(bound("prop2.2 unobserved", max_of(recs.iter().map(|r| r.norms.p_x * r.norms.p_x)), rhs2, s, "sup |p|_X^2 on [0, T*)"));
            if tstar.is_none() && input.sigma == 0.0 {
                let v: Vec<f64> = recs.iter().map(|r| r.norms.p_vhat * r.norms.r_x).collect();
                lines.push(bound("prop2.3 coupling", trapezoid(&times, &v), e0 / (2.0 * c.l_c), s, "int |p|_Vhat |r|_X"));
            } else {
                lines.push(AuditLine {
                    name: "prop2.3 coupling".into(),
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    status: AuditStatus::NotComputable,
                    note: "needs T* = inf and sigma = 0".into(),
                });
            }
        }
        Regime::Smooth => {
            let ea = |r: &StepRecord| e2(r) + r.norms.ra_x * r.norms.ra_x;
            let e0 = ea(r0);
            lines.push(bound("prop3.1 energy", max_of(recs.iter().map(ea)), e0, s, "sup |e|_Q^2 + |r_alpha|_X^2"));
            let rhs = (r0.norms.p_x * r0.norms.p_x)
                .max(cn_ratio2 * cvx2 * cvx2 * pu2 + c.c_a * cvx2 / (c.nu_min * c.c_n * c.c_n) * e0);
            lines.push(bound("prop3.2 unobserved", max_of(recs.iter().map(|r| r.norms.p_x * r.norms.p_x)), rhs, s, "sup |p|_X^2"));
            let v: Vec<f64> = recs.iter().map(|r| r.norms.p_vhat * r.norms.ra_x).collect();
            lines.push(bound("prop3.3 coupling", trapezoid(&times, &v), e0 / (2.0 * c.l_c), s, "int |p|_Vhat |r_alpha|_X"));
        }
    }

    let e: Vec<f64> = all.iter().map(StepRecord::lyapunov).collect();
    let inc = max_of(e.windows(2).map(|w| w[1] - w[0])).max(0.0);
    let h2 = input.h_t * input.h_t;
    let note = format!("empirical C = {:.6e}", inc / h2);
    lines.push(match opts.lyapunov_c {
        Some(cc) => bound("lyapunov step", inc, cc * h2, 0.0, note),
        None => info("lyapunov step", inc, f64::NAN, note),
    });

    lines.push(AuditLine {
        name: "cond_d".into(),
        lhs: tstar.map_or(f64::INFINITY, |k| all[k].t),
        rhs: f64::NAN,
        status: if tstar.is_none() { AuditStatus::Pass } else { AuditStatus::Info },
        note: match tstar {
            Some(k) => format!("first violation at step {k}"),
            None => "holds at every step".into(),
        },
    });

    let sc = detect_semiconvergence(&e);
    lines.push(info(
        "semiconvergence",
        all[sc.index].t,
        sc.minimum,
        format!("t_min = {}, growth = {}", all[sc.index].t, sc.growth),
    ));
    AuditReport { lines }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gains::ErrorNorms;

    fn record(step: usize, t: f64, norms: ErrorNorms) -> StepRecord {
        StepRecord {
            step,
            t,
            norms,
            mu: 1.0,
            nu: 1.0,
            gamma: 0.0,
            cond_d_rhs: 0.0,
            cond_d_violated: false,
            z_norm: 1.0,
            noise_norm: 0.0,
        }
    }

    fn input(regime: Regime, recs: &[StepRecord]) -> AuditInput<'_> {
        AuditInput {
            regime,
            h_t: 0.5,
            sigma: 0.0,
            constants: GainConstants::default(),
            records: recs,
            sup_pu_vhat: 0.0,
            q_star_q: 0.0,
        }
    }

    #[test]
    fn zero_trace_passes_everything() {
        let recs: Vec<_> = (0..5).map(|k| record(k, k as f64 * 0.5, ErrorNorms::default())).collect();
        for regime in [Regime::Exact, Regime::Noisy, Regime::Smooth] {
            let rep = audit_propositions(&input(regime, &recs), &AuditOptions::default());
            assert!(rep.all_pass(), "{regime:?}\n{rep}");
        }
    }

    #[test]
    fn growing_energy_fails_item_one() {
        let recs: Vec<_> = (0..5)
            .map(|k| {
                let n = ErrorNorms {
                    e_q: 1.0 + 0.2 * k as f64,
                    ..ErrorNorms::default()
                };
                record(k, k as f64 * 0.5, n)
            })
            .collect();
        let rep = audit_propositions(&input(Regime::Exact, &recs), &AuditOptions::default());
        assert_eq!(rep.line("prop1.1 energy").unwrap().status, AuditStatus::Fail);
    }

    #[test]
    fn noisy_audit_stops_at_tstar() {
        // the defect exceeds the threshold from step 3 on, after which the
        // energy explodes; the restricted audit ignores that
        let recs: Vec<_> = (0..6)
            .map(|k| {
                let n = ErrorNorms {
                    e_q: if k < 3 { 1.0 } else { 10.0 },
                    r_x: 1.0,
                    r_vxtil: 1.0,
                    d_vtil: if k < 3 { 0.0 } else { 1.0 },
                    ..ErrorNorms::default()
                };
                record(k, k as f64 * 0.5, n)
            })
            .collect();
        let c = GainConstants::default();
        assert_eq!(first_cond_d_failure(&recs, &c), Some(3));
        let rep = audit_propositions(&input(Regime::Noisy, &recs), &AuditOptions::default());
        assert_eq!(rep.line("prop2.1 energy").unwrap().status, AuditStatus::Pass);
        assert_eq!(rep.line("prop2.3 coupling").unwrap().status, AuditStatus::NotComputable);
    }

    #[test]
    fn lyapunov_line_uses_the_given_constant() {
        let recs: Vec<_> = (0..3)
            .map(|k| {
                let n = ErrorNorms {
                    e_q: [1.0, 1.1, 1.0][k],
                    ..ErrorNorms::default()
                };
                record(k, k as f64 * 0.5, n)
            })
            .collect();
        let inc = 1.1f64 * 1.1 - 1.0;
        let ok = AuditOptions {
            lyapunov_c: Some(inc / 0.25 * 1.01),
            ..AuditOptions::default()
        };
        let bad = AuditOptions {
            lyapunov_c: Some(inc / 0.25 * 0.99),
            ..AuditOptions::default()
        };
        let inp = input(Regime::Exact, &recs);
        assert_eq!(audit_propositions(&inp, &ok).line("lyapunov step").unwrap().status, AuditStatus::Pass);
        assert_eq!(audit_propositions(&inp, &bad).line("lyapunov step").unwrap().status, AuditStatus::Fail);
    }

    #[test]
    fn audit_is_pure() {
        let recs: Vec<_> = (0..4)
            .map(|k| {
                let n = ErrorNorms {
                    e_q: 1.0 / (1.0 + k as f64),
                    p_x: 0.1,
                    p_vhat: 0.2,
                    r_x: 0.3,
                    ..ErrorNorms::default()
                };
                record(k, k as f64 * 0.5, n)
            })
            .collect();
        let inp = input(Regime::Exact, &recs);
        let a = audit_propositions(&inp, &AuditOptions::default());
        let b = audit_propositions(&inp, &AuditOptions::default());
        assert_eq!(a.to_string(), b.to_string());
    }
}
