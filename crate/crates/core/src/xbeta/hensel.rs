//! Hensel lifting certificates for candidate points on the quadric pair.
//!
//! A witness with residual level m and a 2x2 Jacobian minor of valuation t
//! with m > 2t lifts to an exact F0-point by Newton iteration in the two
//! minor coordinates (the remaining coordinates stay fixed at an exact
//! representative of their digits).

use super::{QuadricPairSystem, Witness};
use crate::padic::{BaseElement, PrimeConfig, Valuation};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct HenselCertificate {
    /// Column indices of the certifying 2x2 minor of the 2x6 Jacobian.
    pub minor_cols: (usize, usize),
    /// Valuation t of that minor.
    pub minor_valuation: i64,
    /// Residual level m of the witness; the certificate asserts m > 2t.
    pub residual_level: i64,
}

/// Valuation of an element, treating full cancellation as "at least the
/// known precision".
fn val_or_level(e: &BaseElement) -> Option<i64> {
    match e {
        BaseElement::Zero => None,
        BaseElement::Unknown { level } => Some(*level),
        BaseElement::Finite { val, .. } => Some(*val),
    }
}

/// Check a witness: compute the 2x6 Jacobian of the primitive forms at the
/// point, find the minimum-valuation 2x2 minor, and accept iff the residual
/// level exceeds twice that valuation.
pub fn hensel_check(
    cfg: &PrimeConfig,
    sys: &QuadricPairSystem,
    w: &Witness,
) -> Result<HenselCertificate, Error> {
    if w.residual_level < 1 {
        return Err(Error::HypothesisViolated("witness has no residual accuracy".into()));
    }
    // the forms really do vanish to the claimed level
    for which in [1, 2] {
        let v = sys.eval_primitive(cfg, which, &w.point);
        let ok = match v.valuation() {
            Ok(Valuation::Infinite) => true,
            Ok(Valuation::Finite(t)) => t >= w.residual_level,
            Err(_) => val_or_level(&v).map(|l| l >= w.residual_level).unwrap_or(false),
        };
        if !ok {
            return Err(Error::HypothesisViolated(format!(
                "form {which} does not vanish to level {}",
                w.residual_level
            )));
        }
    }
    let g1 = sys.gradient_primitive(cfg, 1, &w.point);
    let g2 = sys.gradient_primitive(cfg, 2, &w.point);
    let mut best: Option<(i64, (usize, usize))> = None;
    for i in 0..6 {
        for j in (i + 1)..6 {
            let minor = g1[i].mul(cfg, &g2[j]).sub(cfg, &g1[j].mul(cfg, &g2[i]));
            if let Ok(Valuation::Finite(t)) = minor.valuation() {
                if best.map(|(bt, _)| t < bt).unwrap_or(true) {
                    best = Some((t, (i, j)));
                }
            }
        }
    }
    let (t, cols) = best.ok_or_else(|| {
        Error::NoSolution("all Jacobian minors vanish to working precision".into())
    })?;
    if w.residual_level > 2 * t {
        Ok(HenselCertificate { minor_cols: cols, minor_valuation: t, residual_level: w.residual_level })
    } else {
        Err(Error::NoSolution(format!(
            "certificate fails: residual level {} does not exceed twice the minor valuation {t}",
            w.residual_level
        )))
    }
}

/// Refine a certified witness to an exact point at full working precision by
/// Newton iteration on the two minor coordinates; the other coordinates are
/// fixed at the exact representative of their known digits. Re-verifies that
/// both primitive forms vanish to working precision on the result.
pub fn newton_lift(
    cfg: &PrimeConfig,
    sys: &QuadricPairSystem,
    w: &Witness,
    cert: &HenselCertificate,
) -> Result<[BaseElement; 6], Error> {
    let (c0, c1) = cert.minor_cols;
    // pad every coordinate to an exact element with the witnessed digits
    let mut x: [BaseElement; 6] = Default::default();
    for (i, e) in w.point.iter().enumerate() {
        x[i] = match e {
            BaseElement::Zero => BaseElement::Zero,
            BaseElement::Unknown { .. } => BaseElement::Zero,
            BaseElement::Finite { val, unit, .. } => {
                if *val < 0 {
                    return Err(Error::HypothesisViolated("witness coordinates must be integral".into()));
                }
                BaseElement::from_unit_and_val(cfg, unit, *val)
            }
        };
    }
    for iter in 0..64 {
        let f1 = sys.eval_primitive(cfg, 1, &x);
        let f2 = sys.eval_primitive(cfg, 2, &x);
        if f1.is_zero_to_precision() && f2.is_zero_to_precision() {
            return Ok(x);
        }
        if iter == 63 {
            break;
        }
        let g1 = sys.gradient_primitive(cfg, 1, &x);
        let g2 = sys.gradient_primitive(cfg, 2, &x);
        // solve [g1[c0] g1[c1]; g2[c0] g2[c1]] * delta = -(f1, f2)
        let det = g1[c0].mul(cfg, &g2[c1]).sub(cfg, &g1[c1].mul(cfg, &g2[c0]));
        let det_inv = det.inv(cfg)?;
        let d0 = f1
            .mul(cfg, &g2[c1])
            .sub(cfg, &f2.mul(cfg, &g1[c1]))
            .mul(cfg, &det_inv)
            .neg(cfg);
        let d1 = f2
            .mul(cfg, &g1[c0])
            .sub(cfg, &f1.mul(cfg, &g2[c0]))
            .mul(cfg, &det_inv)
            .neg(cfg);
        x[c0] = x[c0].add(cfg, &d0);
        x[c1] = x[c1].add(cfg, &d1);
    }
    Err(Error::Internal("Newton iteration failed to converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xbeta::{brute_search, SearchOutcome, SearchParams};

    fn ucfg() -> PrimeConfig {
        PrimeConfig::new(5, false, 2, 24).unwrap()
    }

    fn split_system(cfg: &PrimeConfig) -> QuadricPairSystem {
        // Q1 = u0^2 - u2^2, Q2 = u0^2 - u4^2: common zeros with all three
        // coordinates units exist, e.g. (1, ., 1, ., 1, .)
        let mut q1: [[BaseElement; 6]; 6] = Default::default();
        q1[0][0] = BaseElement::one(cfg);
        q1[2][2] = BaseElement::from_i64(cfg, -1);
        let mut q2: [[BaseElement; 6]; 6] = Default::default();
        q2[0][0] = BaseElement::one(cfg);
        q2[4][4] = BaseElement::from_i64(cfg, -1);
        QuadricPairSystem { q1, q2, prim_shift: (0, 0) }
    }

    #[test]
    fn certify_and_lift_smooth_point() {
        let cfg = ucfg();
        let sys = split_system(&cfg);
        let out = brute_search(&cfg, &sys, &SearchParams { depth: 6, node_budget: 100_000 });
        let w = match out {
            SearchOutcome::Found(w) => w,
            other => panic!("expected witness, got {other:?}"),
        };
        let cert = hensel_check(&cfg, &sys, &w).unwrap();
        assert_eq!(cert.minor_valuation, 0);
        let lifted = newton_lift(&cfg, &sys, &w, &cert).unwrap();
        for which in [1, 2] {
            let v = sys.eval_primitive(&cfg, which, &lifted);
            assert!(v.is_zero_to_precision());
        }
    }

    #[test]
    fn threshold_is_strict() {
        let cfg = ucfg();
        let sys = split_system(&cfg);
        // fabricate a witness with m = 2 on a point where the minor valuation
        // is 1: x = (5, 0, 5, 0, 5, 0) kills the forms mod 25 only... the
        // gradients all have valuation 1, so t >= 2 for minors; m = 2 <= 2t
        let p5 = BaseElement::pi0_pow(&cfg, 1);
        let w = Witness {
            point: [
                p5.clone(),
                BaseElement::zero(),
                p5.clone(),
                BaseElement::zero(),
                p5,
                BaseElement::zero(),
            ],
            residual_level: 2,
            pinned: 0,
        };
        assert!(hensel_check(&cfg, &sys, &w).is_err());
    }
}
