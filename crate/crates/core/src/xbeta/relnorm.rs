//! The raw non-emptiness criterion for a 1+2 field splitting, evaluated by
//! brute enumeration of relative norms.
//!
//! The plane V2 is one-dimensional over the quadratic extension E = F[beta2];
//! h restricts to an E-valued hermitian form h' with h = lambda o h' for the
//! sigma_h-equivariant functional lambda with lambda(1) = 1 and
//! lambda(beta2) = beta1. Writing d1 = h'(v, v) for a block generator v and
//! d2 for the line constant, the variety is non-empty iff -d1 d2^{-1} is a
//! relative norm from E to its sigma_h-fixed subfield. Membership is decided
//! here by enumerating x sigma_h(x) over leading-digit representatives in a
//! valuation window and comparing classes modulo 1 + p_E (which consists of
//! norms since p is odd).

use crate::padic::{BaseElement, ExtElement, PrimeConfig, Valuation};
use crate::strata::{Stratum, TypeTag};
use crate::Error;

/// Element x0 + x1*beta2 of E = F[beta2] in coordinates over F.
#[derive(Clone, Debug)]
struct ECoord {
    x0: ExtElement,
    x1: ExtElement,
}

struct EArith<'a> {
    cfg: &'a PrimeConfig,
    /// trace and determinant of the 2x2 block: beta2^2 = t beta2 - det
    t: ExtElement,
    det: ExtElement,
    /// nu_E(beta2) in the normalised valuation of E
    nu_beta: i64,
    /// nu_E(w) = scale * nu_F(w) for w in F
    scale: i64,
}

impl EArith<'_> {
    fn mul(&self, a: &ECoord, b: &ECoord) -> ECoord {
        let cfg = self.cfg;
        // (a0 + a1 B)(b0 + b1 B) = a0 b0 - a1 b1 det + (a0 b1 + a1 b0 + a1 b1 t) B
        let a1b1 = a.x1.mul(cfg, &b.x1);
        let x0 = a.x0.mul(cfg, &b.x0).sub(cfg, &a1b1.mul(cfg, &self.det));
        let x1 = a
            .x0
            .mul(cfg, &b.x1)
            .add(cfg, &a.x1.mul(cfg, &b.x0))
            .add(cfg, &a1b1.mul(cfg, &self.t));
        ECoord { x0, x1 }
    }

    /// Galois conjugate over F: beta2 -> t - beta2.
    fn conj_over_f(&self, a: &ECoord) -> ECoord {
        let cfg = self.cfg;
        ECoord {
            x0: a.x0.add(cfg, &a.x1.mul(cfg, &self.t)),
            x1: a.x1.neg(cfg),
        }
    }

    fn inv(&self, a: &ECoord) -> Result<ECoord, Error> {
        let cfg = self.cfg;
        let ac = self.conj_over_f(a);
        let n = self.mul(a, &ac);
        if !n.x1.is_zero_to_precision() {
            return Err(Error::Internal("norm to F has a beta2-component".into()));
        }
        let ninv = n.x0.inv(cfg)?;
        Ok(ECoord { x0: ac.x0.mul(cfg, &ninv), x1: ac.x1.mul(cfg, &ninv) })
    }

    /// sigma_h on E: fixes F0, negates beta2.
    fn sigma_h(&self, a: &ECoord) -> ECoord {
        ECoord { x0: a.x0.conj(self.cfg), x1: a.x1.conj(self.cfg).neg(self.cfg) }
    }

    /// Relative norm x sigma_h(x).
    fn rel_norm(&self, a: &ECoord) -> ECoord {
        self.mul(a, &self.sigma_h(a))
    }

    /// Exact normalised E-valuation via the basis (1, beta2): the two terms
    /// never fully cancel at their common level, so the minimum is exact.
    fn nu_e(&self, a: &ECoord) -> Result<Option<i64>, Error> {
        let v0 = match a.x0.val_f(self.cfg)? {
            Valuation::Infinite => None,
            Valuation::Finite(v) => Some(self.scale * v),
        };
        let v1 = match a.x1.val_f(self.cfg)? {
            Valuation::Infinite => None,
            Valuation::Finite(v) => Some(self.scale * v + self.nu_beta),
        };
        Ok(match (v0, v1) {
            (None, None) => None,
            (Some(v), None) | (None, Some(v)) => Some(v),
            (Some(a), Some(b)) => Some(a.min(b)),
        })
    }

    /// Lower bound for the E-valuation of an F-coordinate, treating a full
    /// cancellation window as its precision level.
    fn coord_lower_bound(&self, x: &crate::padic::ExtElement, shift: i64) -> Option<i64> {
        let f_bound = |b: &BaseElement, extra: i64| -> Option<i64> {
            match b {
                BaseElement::Zero => None,
                BaseElement::Unknown { level } => Some(self.cfg.e() * level + extra),
                BaseElement::Finite { val, .. } => Some(self.cfg.e() * val + extra),
            }
        };
        let va = f_bound(&x.a, 0);
        let vb = f_bound(&x.b, self.cfg.e() - 1);
        let vf = match (va, vb) {
            (None, None) => return None,
            (Some(v), None) | (None, Some(v)) => v,
            (Some(a), Some(b)) => a.min(b),
        };
        Some(self.scale * vf + shift)
    }

    /// Is z in 1 + p_E? Uses valuation lower bounds so that exact hits
    /// (full-precision cancellation) count as membership.
    fn is_one_plus_p(&self, z: &ECoord) -> bool {
        let cfg = self.cfg;
        let shifted = z.x0.sub(cfg, &ExtElement::one(cfg));
        let b0 = self.coord_lower_bound(&shifted, 0);
        let b1 = self.coord_lower_bound(&z.x1, self.nu_beta);
        match (b0, b1) {
            (None, None) => true,
            (Some(v), None) | (None, Some(v)) => v >= 1,
            (Some(a), Some(b)) => a.min(b) >= 1,
        }
    }
}

/// Evaluate the relative-norm criterion for a 1+2 field splitting by
/// enumeration, using the given valuation window for the sweep (in nu_F
/// units on each coordinate).
pub fn relative_norm_test_with_window(s: &Stratum, window: i64) -> Result<bool, Error> {
    if s.tag != TypeTag::B {
        return Err(Error::UnsupportedConfiguration("relative-norm test needs a 1+2 field splitting".into()));
    }
    let cfg = &s.cfg;
    let block = s
        .beta_block
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("missing 2x2 block".into()))?;
    let t = block[0][0].add(cfg, &block[1][1]);
    let det = block[0][0].mul(cfg, &block[1][1]).sub(cfg, &block[0][1].mul(cfg, &block[1][0]));
    let qi = s.q_invariants()?;
    let e = EArith {
        cfg,
        t: t.clone(),
        det: det.clone(),
        nu_beta: -qi.q[1] / 2,
        scale: if cfg.ramified { 1 } else { 2 }, // nu_E extends nu_F with index e(E/F)
    };
    // NOTE on scale: for unramified F/F0 the extension E/F is ramified, so
    // nu_E(w) = 2 nu_F(w); for ramified F/F0 it is unramified, nu_E = nu_F.

    // d1 = h'(v, v) = s0 + s1 beta2 from
    //   s0 + beta1 s1 = h(v, v)
    //   beta1 s0 + (t beta1 - det) s1 = h(beta2 v, v)
    let space = s.space()?;
    let beta = s.beta_matrix()?;
    let coords = s.block_coords();
    let v2c = &coords[1];
    let v = crate::hermitian::Vector::basis(cfg, 3, v2c[0]);
    let bv = beta.apply(cfg, &v);
    let hvv = space.h_eval(cfg, &v, &v);
    let hbv = space.h_eval(cfg, &bv, &v);
    let b1 = &s.beta1;
    // 2x2 solve over F
    let m00 = ExtElement::one(cfg);
    let m01 = b1.clone();
    let m10 = b1.clone();
    let m11 = t.mul(cfg, b1).sub(cfg, &det);
    let dm = m00.mul(cfg, &m11).sub(cfg, &m01.mul(cfg, &m10));
    let dm_inv = dm.inv(cfg)?;
    let s0 = hvv.mul(cfg, &m11).sub(cfg, &hbv.mul(cfg, &m01)).mul(cfg, &dm_inv);
    let s1 = hbv.mul(cfg, &m00).sub(cfg, &hvv.mul(cfg, &m10)).mul(cfg, &dm_inv);
    let d1 = ECoord { x0: s0, x1: s1 };

    let d2 = s
        .lambdas
        .first()
        .cloned()
        .unwrap_or_else(|| BaseElement::one(cfg));
    let d2_inv = ExtElement::from_base(d2).inv(cfg)?;
    let y = ECoord {
        x0: d1.x0.mul(cfg, &d2_inv).neg(cfg),
        x1: d1.x1.mul(cfg, &d2_inv).neg(cfg),
    };
    let y_inv = e.inv(&y)?;
    let nu_y = e.nu_e(&y)?.ok_or(Error::IndeterminateValuation)?;

    // sweep x = a + b beta2 over leading digits and uniformizer shifts
    let pi = ExtElement::uniformizer(cfg);
    let mut pi_pows = Vec::new();
    for k in -window..=window {
        let mut acc = ExtElement::one(cfg);
        let inv = pi.inv(cfg)?;
        for _ in 0..k.unsigned_abs() {
            acc = if k >= 0 { acc.mul(cfg, &pi) } else { acc.mul(cfg, &inv) };
        }
        pi_pows.push(acc);
    }
    let digit = |d0: u64, d1: u64| -> ExtElement {
        ExtElement::new(
            BaseElement::from_i64(cfg, d0 as i64),
            BaseElement::from_i64(cfg, d1 as i64),
        )
    };
    let p = cfg.p;
    for a_shift in &pi_pows {
        for b_shift in &pi_pows {
            for a0 in 0..p {
                for a1 in 0..p {
                    for b0 in 0..p {
                        for b1 in 0..p {
                            if a0 == 0 && a1 == 0 && b0 == 0 && b1 == 0 {
                                continue;
                            }
                            let a = digit(a0, a1).mul(cfg, a_shift);
                            let b = digit(b0, b1).mul(cfg, b_shift);
                            let x = ECoord { x0: a, x1: b };
                            let n = e.rel_norm(&x);
                            let z = e.mul(&n, &y_inv);
                            if e.is_one_plus_p(&z) {
                                return Ok(true);
                            }
                        }
                    }
                }
            }
        }
    }
    // Conclusive failure needs the sweep to have covered the valuation of a
    // potential solution: nu_E(x) = nu_y / 2, and the sweep reaches
    // |nu_E| <= scale * window - |nu_beta|.
    let reach = e.scale * window - e.nu_beta.abs();
    if nu_y.abs() / 2 + 1 <= reach {
        Ok(false)
    } else {
        Err(Error::InconclusiveEnumeration(format!(
            "window {window} too small for target valuation {nu_y}"
        )))
    }
}

/// The relative-norm criterion with automatic window widening.
pub fn relative_norm_test(s: &Stratum) -> Result<bool, Error> {
    let mut window = 2;
    loop {
        match relative_norm_test_with_window(s, window) {
            Err(Error::InconclusiveEnumeration(_)) if window < 12 => window += 2,
            other => return other,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xbeta::{criterion_status, XbetaStatus};

    fn ucfg() -> PrimeConfig {
        PrimeConfig::new(5, false, 2, 24).unwrap()
    }

    fn b_iso(cfg: &PrimeConfig, m1: i64, m2: i64) -> Stratum {
        let b = ExtElement::delta_times(cfg, BaseElement::pi0_pow(cfg, -(m2 + 1)));
        let c = ExtElement::delta_times(cfg, BaseElement::pi0_pow(cfg, -m2));
        Stratum {
            cfg: cfg.clone(),
            tag: TypeTag::B,
            v2_isotropic: true,
            lambdas: vec![BaseElement::one(cfg)],
            beta1: ExtElement::delta_times(cfg, BaseElement::pi0_pow(cfg, -m1)),
            beta2: ExtElement::zero(),
            beta3: ExtElement::zero(),
            beta_block: Some([[ExtElement::zero(), b], [c, ExtElement::zero()]]),
            beta_full: None,
            lattice_kind: None,
        }
    }

    #[test]
    fn agrees_with_criterion_on_isotropic_plane() {
        let cfg = ucfg();
        // q1 = 4 m1, q2 = 4 m2 + 2
        for (m1, m2) in [(1i64, 0i64), (2, 0), (1, 1), (0, 1), (1, 2)] {
            let s = b_iso(&cfg, m1, m2);
            assert!(s.validate().is_empty(), "m1={m1} m2={m2}: {:?}", s.validate());
            let (st, _) = criterion_status(&s).unwrap();
            let by_norms = relative_norm_test(&s).unwrap();
            assert_eq!(
                by_norms,
                st == XbetaStatus::NonEmpty,
                "m1={m1} m2={m2}: criterion {st:?}, norms {by_norms}"
            );
        }
    }
}
