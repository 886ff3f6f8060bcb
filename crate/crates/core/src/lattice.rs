//! Periodic self-dual lattice sequences in diagonal form, their duals and
//! affine reindexings, the endomorphism filtration a~_n and its induced
//! levels on the derived unipotent subgroup.
//!
//! A sequence is stored by its exponent vectors: Lambda(n) = (+) p_F^{c_i(n)} b_i
//! in a distinguished basis, with c_i(n + e) = c_i(n) + 1. Duality is taken
//! with respect to the Gram data of that basis: a Witt basis pairs coordinates
//! 1 <-> 3 (with the middle one self-paired), an orthogonal basis pairs each
//! coordinate with itself through its diagonal constant.

use crate::hermitian::{BasisKind, Matrix};
use crate::padic::{PrimeConfig, Valuation};
use crate::Error;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeSequence {
    /// Period e(Lambda); always even here.
    pub period: usize,
    /// Exponent vectors for n = 0..period.
    pub exps: Vec<[i64; 3]>,
    /// Basis the exponents refer to.
    pub basis_kind: BasisKind,
    /// nu_F of the diagonal Gram constants (0 for the hyperbolic pairing
    /// entries of a Witt basis; index 1 holds nu_F(h(e0,e0))).
    pub gram_vals: [i64; 3],
}

/// Entrywise minimal p_F-exponents of the lattice a~_n(Lambda).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationMatrix {
    pub n: i64,
    pub vals: [[i64; 3]; 3],
}

impl LatticeSequence {
    pub fn new(
        period: usize,
        exps: Vec<[i64; 3]>,
        basis_kind: BasisKind,
        gram_vals: [i64; 3],
    ) -> Result<Self, Error> {
        if period == 0 || period % 2 != 0 || exps.len() != period {
            return Err(Error::InvalidConfig("period must be even and match the table".into()));
        }
        let seq = LatticeSequence { period, exps, basis_kind, gram_vals };
        for n in 0..period as i64 {
            for i in 0..3 {
                if seq.exp(i, n + 1) < seq.exp(i, n) {
                    return Err(Error::ConstraintViolated(format!(
                        "sequence not decreasing at coordinate {i}, index {n}"
                    )));
                }
                if seq.exp(i, n + period as i64) != seq.exp(i, n) + 1 {
                    return Err(Error::ConstraintViolated("periodicity failure".into()));
                }
            }
        }
        Ok(seq)
    }

    /// Exponent c_i(n).
    pub fn exp(&self, i: usize, n: i64) -> i64 {
        let e = self.period as i64;
        let q = n.div_euclid(e);
        let r = n.rem_euclid(e) as usize;
        self.exps[r][i] + q
    }

    /// Dual sequence Lambda#(n) = (Lambda(-n))#.
    pub fn dual(&self) -> LatticeSequence {
        let pairing: [usize; 3] = match self.basis_kind {
            BasisKind::Witt => [2, 1, 0],
            BasisKind::Orthogonal => [0, 1, 2],
        };
        let e = self.period as i64;
        let mut exps = Vec::with_capacity(self.period);
        for n in 0..e {
            let mut row = [0i64; 3];
            for (i, slot) in row.iter_mut().enumerate() {
                let j = pairing[i];
                *slot = 1 - self.exp(j, -n) - self.gram_vals[j];
            }
            exps.push(row);
        }
        LatticeSequence {
            period: self.period,
            exps,
            basis_kind: self.basis_kind,
            gram_vals: self.gram_vals,
        }
    }

    /// Affine reindexing (a*Lambda + b)(n) = Lambda(ceil((n - b)/a)).
    pub fn affine(&self, a: u32, b: i64) -> LatticeSequence {
        assert!(a >= 1);
        let a = a as i64;
        let new_period = (self.period as i64 * a) as usize;
        let mut exps = Vec::with_capacity(new_period);
        for n in 0..new_period as i64 {
            let idx = div_ceil(n - b, a);
            exps.push([self.exp(0, idx), self.exp(1, idx), self.exp(2, idx)]);
        }
        LatticeSequence {
            period: new_period,
            exps,
            basis_kind: self.basis_kind,
            gram_vals: self.gram_vals,
        }
    }

    /// Offset b with Lambda# = Lambda + b (i.e. Lambda#(n) = Lambda(n - b)),
    /// if the sequence is self-dual. The fixed normalisation is b = -1.
    pub fn duality_offset(&self) -> Option<i64> {
        let d = self.dual();
        let e = self.period as i64;
        'outer: for b in -(2 * e)..=(2 * e) {
            for n in 0..e {
                for i in 0..3 {
                    if d.exp(i, n) != self.exp(i, n - b) {
                        continue 'outer;
                    }
                }
            }
            return Some(b);
        }
        None
    }

    pub fn is_normalized_self_dual(&self) -> bool {
        self.duality_offset() == Some(-1)
    }

    /// vals[i][j] = max_k ( c_i(k+n) - c_j(k) ): the minimal exponent allowed
    /// in entry (i,j) of an endomorphism carrying Lambda(k) into Lambda(k+n).
    pub fn hom_filtration(&self, n: i64) -> FiltrationMatrix {
        let e = self.period as i64;
        let mut vals = [[0i64; 3]; 3];
        for (i, row) in vals.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = (0..e)
                    .map(|k| self.exp(i, k + n) - self.exp(j, k))
                    .max()
                    .expect("nonempty period");
            }
        }
        FiltrationMatrix { n, vals }
    }

    /// nu_Lambda(T): the largest k with T in a~_k(Lambda).
    pub fn nu_lambda(&self, cfg: &PrimeConfig, t: &Matrix) -> Result<i64, Error> {
        let mut entry_vals = [[None::<i64>; 3]; 3];
        let mut any = false;
        for i in 0..3 {
            for j in 0..3 {
                match t.0[i][j].val_f(cfg)? {
                    Valuation::Infinite => {}
                    Valuation::Finite(v) => {
                        entry_vals[i][j] = Some(v);
                        any = true;
                    }
                }
            }
        }
        if !any {
            return Err(Error::IndeterminateValuation);
        }
        let e = self.period as i64;
        let lo: i64 = entry_vals.iter().flatten().flatten().map(|v| v * e).min().unwrap() - 2 * e;
        let hi = entry_vals.iter().flatten().flatten().map(|v| v * e).max().unwrap() + 2 * e;
        let fits = |n: i64| -> bool {
            let f = self.hom_filtration(n);
            (0..3).all(|i| {
                (0..3).all(|j| match entry_vals[i][j] {
                    None => true,
                    Some(v) => v >= f.vals[i][j],
                })
            })
        };
        if !fits(lo) {
            return Err(Error::Internal("nu_lambda scan window too small".into()));
        }
        let mut best = lo;
        for n in lo..=hi {
            if fits(n) {
                best = n;
            } else {
                break;
            }
        }
        Ok(best)
    }

    /// The level r with U_der intersect a_n(Lambda) = U_der(r), where
    /// U_der(r) = { u(0, d y) : y in p_{F0}^r }. Requires a Witt basis.
    pub fn uder_level(&self, cfg: &PrimeConfig, n: i64) -> Result<i64, Error> {
        if self.basis_kind != BasisKind::Witt {
            return Err(Error::UnsupportedConfiguration(
                "derived-group levels need a Witt basis".into(),
            ));
        }
        let bound = self.hom_filtration(n).vals[0][2];
        // u(0, d y) - 1 = d y E_13 with nu_F(d y) = nu_F(d) + e * nu_0(y)
        if cfg.ramified {
            // 1 + 2r >= bound  <=>  r = ceil((bound - 1)/2)
            Ok(div_ceil(bound - 1, 2))
        } else {
            Ok(bound)
        }
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    -((-a).div_euclid(b))
}

/// The catalogued self-dual sequences used throughout: two period-2 shapes
/// and the period-4 Iwahori shape, in a Witt basis with unit middle constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Catalogued {
    L1,
    L2,
    L3,
}

impl Catalogued {
    pub fn name(&self) -> &'static str {
        match self {
            Catalogued::L1 => "L1",
            Catalogued::L2 => "L2",
            Catalogued::L3 => "L3",
        }
    }

    pub fn parse(s: &str) -> Option<Catalogued> {
        match s.to_ascii_uppercase().as_str() {
            "L1" | "LAMBDA1" => Some(Catalogued::L1),
            "L2" | "LAMBDA2" => Some(Catalogued::L2),
            "L3" | "LAMBDA3" => Some(Catalogued::L3),
            _ => None,
        }
    }

    /// The sequence itself. L3 exists only for unramified F/F0; the period-6
    /// shape that would complete the list is never needed and is not
    /// catalogued.
    pub fn sequence(&self, cfg: &PrimeConfig) -> Result<LatticeSequence, Error> {
        let seq = match self {
            Catalogued::L1 => {
                LatticeSequence::new(2, vec![[0, 0, 0], [1, 1, 1]], BasisKind::Witt, [0, 0, 0])?
            }
            Catalogued::L2 => {
                LatticeSequence::new(2, vec![[0, 0, 1], [0, 1, 1]], BasisKind::Witt, [0, 0, 0])?
            }
            Catalogued::L3 => {
                if cfg.ramified {
                    return Err(Error::UnsupportedConfiguration(
                        "the period-4 shape is catalogued only for unramified F/F0".into(),
                    ));
                }
                LatticeSequence::new(
                    4,
                    vec![[0, 0, 1], [0, 1, 1], [1, 1, 1], [1, 1, 1]],
                    BasisKind::Witt,
                    [0, 0, 0],
                )?
            }
        };
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::BaseElement;
    use crate::ExtElement;

    fn ucfg() -> PrimeConfig {
        PrimeConfig::new(5, false, 2, 24).unwrap()
    }
    fn rcfg() -> PrimeConfig {
        PrimeConfig::new(5, true, 2, 24).unwrap()
    }

    #[test]
    fn catalogued_are_normalized_self_dual() {
        let u = ucfg();
        let r = rcfg();
        for l in [Catalogued::L1, Catalogued::L2, Catalogued::L3] {
            let seq = l.sequence(&u).unwrap();
            assert_eq!(seq.duality_offset(), Some(-1), "{:?}", l);
        }
        for l in [Catalogued::L1, Catalogued::L2] {
            let seq = l.sequence(&r).unwrap();
            assert_eq!(seq.duality_offset(), Some(-1), "{:?} ram", l);
        }
        assert!(Catalogued::L3.sequence(&r).is_err());
    }

    #[test]
    fn dual_is_involutive() {
        let u = ucfg();
        let seq = Catalogued::L3.sequence(&u).unwrap();
        let dd = seq.dual().dual();
        for n in -6..6 {
            for i in 0..3 {
                assert_eq!(dd.exp(i, n), seq.exp(i, n));
            }
        }
    }

    #[test]
    fn affine_identities() {
        let u = ucfg();
        let seq = Catalogued::L2.sequence(&u).unwrap();
        let same = seq.affine(1, 0);
        for n in -6..6 {
            for i in 0..3 {
                assert_eq!(same.exp(i, n), seq.exp(i, n));
            }
        }
        let sh = seq.affine(1, 2);
        for n in -6..6 {
            for i in 0..3 {
                assert_eq!(sh.exp(i, n), seq.exp(i, n - 2));
            }
        }
        let dbl = seq.affine(2, 0);
        assert_eq!(dbl.period, 4);
        for k in -4..4 {
            for i in 0..3 {
                assert_eq!(dbl.exp(i, 2 * k + 1), seq.exp(i, k + 1));
            }
        }
    }

    #[test]
    fn filtration_monotone_and_periodic() {
        let u = ucfg();
        for l in [Catalogued::L1, Catalogued::L2, Catalogued::L3] {
            let seq = l.sequence(&u).unwrap();
            let e = seq.period as i64;
            for n in -8..8 {
                let a = seq.hom_filtration(n);
                let b = seq.hom_filtration(n + e);
                for i in 0..3 {
                    for j in 0..3 {
                        assert_eq!(b.vals[i][j], a.vals[i][j] + 1);
                    }
                }
            }
        }
    }

    #[test]
    fn nu_lambda_of_scalars() {
        let u = ucfg();
        let seq = Catalogued::L2.sequence(&u).unwrap();
        let id = Matrix::identity(&u, 3);
        assert_eq!(seq.nu_lambda(&u, &id).unwrap(), 0);
        let r = rcfg();
        let seqr = Catalogued::L1.sequence(&r).unwrap();
        let pi = Matrix::identity(&r, 3).scale(&r, &ExtElement::delta(&r));
        assert_eq!(seqr.nu_lambda(&r, &pi).unwrap(), 2);
        let zero = Matrix::zero(3);
        assert!(seqr.nu_lambda(&r, &zero).is_err());
    }

    #[test]
    fn nu_lambda_additive_under_scaling() {
        let u = ucfg();
        let seq = Catalogued::L3.sequence(&u).unwrap();
        let mut t = Matrix::zero(3);
        t.0[0][2] = ExtElement::from_base(BaseElement::pi0_pow(&u, -1));
        t.0[1][1] = ExtElement::one(&u);
        let base = seq.nu_lambda(&u, &t).unwrap();
        let shifted = t.scale(&u, &ExtElement::from_base(BaseElement::pi0_pow(&u, 1)));
        assert_eq!(seq.nu_lambda(&u, &shifted).unwrap(), base + 4);
    }
}
