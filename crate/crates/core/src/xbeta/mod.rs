//! The flag variety cut out by the pair of F0-valued quadrics
//! h(v, v) = 0 and h(v, beta v)/d = 0 in P^5 over F0, together with:
//! criterion-based emptiness decisions per stratum shape, an independent
//! brute-force point search with digit-by-digit refinement, and Hensel
//! lifting certificates for found points.

mod hensel;
mod relnorm;
mod search;

pub use hensel::{hensel_check, newton_lift, HenselCertificate};
pub use relnorm::relative_norm_test;
pub use search::{brute_search, SearchOutcome, SearchParams};

use crate::hermitian::Matrix;
use crate::padic::{is_norm_class, BaseElement, ExtElement, PrimeConfig, Valuation};
use crate::strata::{Stratum, TypeTag};
use crate::Error;

/// One consulted rule in a decision trace.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize, PartialEq, Eq)]
pub struct CaseStep {
    pub rule: String,
    pub inputs: String,
    pub outcome: String,
}

impl CaseStep {
    pub fn new(rule: &str, inputs: impl Into<String>, outcome: impl Into<String>) -> Self {
        CaseStep { rule: rule.into(), inputs: inputs.into(), outcome: outcome.into() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum XbetaStatus {
    Empty,
    NonEmpty,
}

/// The two quadratic forms over F0 in the six coordinates
/// (x1, y1, x2, y2, x3, y3) of v = sum (x_i + y_i d) b_i, stored as exact
/// symmetric matrices: Q1 <-> h(v,v), Q2 <-> h(v, beta v)/d.
///
/// `prim_shift` records the p-powers that make each form integral and
/// primitive: p^{prim_shift.i} * Q_i has coefficient valuations >= 0 with 0
/// attained. Residual levels of witnesses refer to the primitive forms.
#[derive(Clone, Debug)]
pub struct QuadricPairSystem {
    pub q1: [[BaseElement; 6]; 6],
    pub q2: [[BaseElement; 6]; 6],
    pub prim_shift: (i64, i64),
}

/// A candidate projective point with one coordinate a unit; the forms vanish
/// modulo p^residual_level on it (primitive normalisation).
#[derive(Clone, Debug)]
pub struct Witness {
    pub point: [BaseElement; 6],
    pub residual_level: i64,
    /// Which coordinate was pinned to 1 and the candidate-order key of the
    /// search, for deterministic reporting.
    pub pinned: usize,
}

impl QuadricPairSystem {
    pub fn eval(&self, cfg: &PrimeConfig, which: usize, u: &[BaseElement; 6]) -> BaseElement {
        let m = if which == 1 { &self.q1 } else { &self.q2 };
        let mut acc = BaseElement::zero();
        for i in 0..6 {
            for j in 0..6 {
                let t = m[i][j].mul(cfg, &u[i]).mul(cfg, &u[j]);
                acc = acc.add(cfg, &t);
            }
        }
        acc
    }

    /// Value of the primitive (integrally rescaled) form.
    pub fn eval_primitive(&self, cfg: &PrimeConfig, which: usize, u: &[BaseElement; 6]) -> BaseElement {
        let s = if which == 1 { self.prim_shift.0 } else { self.prim_shift.1 };
        self.eval(cfg, which, u).shift(s)
    }

    /// Gradient of the primitive form: 2 * p^s * Q u.
    pub fn gradient_primitive(&self, cfg: &PrimeConfig, which: usize, u: &[BaseElement; 6]) -> [BaseElement; 6] {
        let m = if which == 1 { &self.q1 } else { &self.q2 };
        let s = if which == 1 { self.prim_shift.0 } else { self.prim_shift.1 };
        let mut out: [BaseElement; 6] = Default::default();
        for i in 0..6 {
            let mut acc = BaseElement::zero();
            for j in 0..6 {
                acc = acc.add(cfg, &m[i][j].mul(cfg, &u[j]));
            }
            out[i] = acc.add(cfg, &acc).shift(s);
        }
        out
    }
}

/// Decompose an F-matrix entrywise into its F0 parts: M = P + d*Q.
fn split_parts(m: &Matrix) -> (Vec<Vec<BaseElement>>, Vec<Vec<BaseElement>>) {
    let n = m.dim();
    let mut p = vec![vec![BaseElement::zero(); n]; n];
    let mut q = vec![vec![BaseElement::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = m.0[i][j].a.clone();
            q[i][j] = m.0[i][j].b.clone();
        }
    }
    (p, q)
}

/// Build the quadric pair from a validated stratum. The coordinates are the
/// restriction of scalars of the distinguished basis: index 2i for x_i and
/// 2i+1 for y_i.
pub fn assemble_system(s: &Stratum) -> Result<QuadricPairSystem, Error> {
    let cfg = &s.cfg;
    let space = s.space()?;
    let beta = s.beta_matrix()?;
    let g = space.gram_matrix();
    // h(v, w) = v^T G sigma(w); h(v, beta v) = v^T (G sigma(beta)) sigma(v)
    let bconj = {
        let mut b = Matrix::zero(3);
        for i in 0..3 {
            for j in 0..3 {
                b.0[i][j] = beta.0[i][j].conj(cfg);
            }
        }
        b
    };
    let gb = g.mul(cfg, &bconj);
    let d2 = cfg.delta_sq();

    // bilinear coefficient: z_i sigma(z_j) = (x_i x_j - d^2 y_i y_j) + d (y_i x_j - x_i y_j)
    let accumulate = |p: &Vec<Vec<BaseElement>>, q: &Vec<Vec<BaseElement>>| -> [[BaseElement; 6]; 6] {
        // target form: sum_ij [ p_ij (x_i x_j - d^2 y_i y_j) + d^2 * q'...
        // built by the caller's choice of which part survives
        let mut c: [[BaseElement; 6]; 6] = Default::default();
        for i in 0..3 {
            for j in 0..3 {
                // p part multiplies (x_i x_j - d^2 y_i y_j)
                c[2 * i][2 * j] = c[2 * i][2 * j].add(cfg, &p[i][j]);
                let t = d2.mul(cfg, &p[i][j]).neg(cfg);
                c[2 * i + 1][2 * j + 1] = c[2 * i + 1][2 * j + 1].add(cfg, &t);
                // q part multiplies (y_i x_j - x_i y_j)
                c[2 * i + 1][2 * j] = c[2 * i + 1][2 * j].add(cfg, &q[i][j]);
                c[2 * i][2 * j + 1] = c[2 * i][2 * j + 1].sub(cfg, &q[i][j]);
            }
        }
        // symmetrise
        let mut sym: [[BaseElement; 6]; 6] = Default::default();
        for i in 0..6 {
            for j in 0..6 {
                sym[i][j] = c[i][j].add(cfg, &c[j][i]).half(cfg);
            }
        }
        sym
    };

    // Q1: F0-part of h(v,v): G = A + dB gives A(x_i x_j - d^2 y_i y_j) + d^2 B (y_i x_j - x_i y_j)
    let (ga, gbpart) = split_parts(&g);
    let gb2: Vec<Vec<BaseElement>> = gbpart
        .iter()
        .map(|row| row.iter().map(|e| d2.mul(cfg, e)).collect())
        .collect();
    let q1 = accumulate(&ga, &gb2);

    // Q2: d-part of h(v, beta v): M = P + dQ gives Q(x_i x_j - d^2 y_i y_j) + P (y_i x_j - x_i y_j)
    let (mp, mq) = split_parts(&gb);
    let q2 = accumulate(&mq, &mp);

    let min_val = |m: &[[BaseElement; 6]; 6]| -> i64 {
        m.iter()
            .flatten()
            .filter_map(|e| e.valuation().ok().and_then(|v| v.finite()))
            .min()
            .unwrap_or(0)
    };
    let s1 = -min_val(&q1);
    let s2 = -min_val(&q2);
    Ok(QuadricPairSystem { q1, q2, prim_shift: (s1, s2) })
}

/// Shorthand: 1 - x/y as an exact F0 element (both skew scalars, y nonzero);
/// x may be exactly zero.
fn one_minus_ratio(cfg: &PrimeConfig, x: &ExtElement, y: &ExtElement) -> Result<BaseElement, Error> {
    if x.is_zero_to_precision() {
        return Ok(BaseElement::one(cfg));
    }
    let r = x.div(cfg, y)?;
    if !r.is_in_base() {
        return Err(Error::Internal("ratio of skew scalars must lie in F0".into()));
    }
    Ok(BaseElement::one(cfg).sub(cfg, &r.a))
}

/// The resolved decision table for the non-emptiness of the variety, with a
/// rationale trace naming each consulted rule.
pub fn criterion_status(s: &Stratum) -> Result<(XbetaStatus, Vec<CaseStep>), Error> {
    let cfg = &s.cfg;
    let mut steps = Vec::new();
    let status = match s.tag {
        TypeTag::A => {
            steps.push(CaseStep::new(
                "cubic-field-nonempty",
                "F[beta] a cubic field",
                "the flag variety always has a rational point",
            ));
            XbetaStatus::NonEmpty
        }
        TypeTag::B => {
            let qi = s.q_invariants()?;
            let (q1, q2) = (qi.q[0], qi.q[1]);
            let nonempty = if s.v2_isotropic { q1 > q2 } else { q2 > q1 };
            steps.push(CaseStep::new(
                "field-plane-q-comparison",
                format!("V2 {}, q1 = {q1}, q2 = {q2}", iso_str(s.v2_isotropic)),
                format!(
                    "nonempty iff {}: {}",
                    if s.v2_isotropic { "q1 > q2" } else { "q2 > q1" },
                    nonempty
                ),
            ));
            if nonempty { XbetaStatus::NonEmpty } else { XbetaStatus::Empty }
        }
        TypeTag::C => {
            steps.push(CaseStep::new(
                "scalar-plane-isotropy",
                format!("V2 {}", iso_str(s.v2_isotropic)),
                format!("nonempty iff V2 isotropic: {}", s.v2_isotropic),
            ));
            if s.v2_isotropic { XbetaStatus::NonEmpty } else { XbetaStatus::Empty }
        }
        TypeTag::D => {
            if !cfg.ramified {
                let (all_iso, v1, v2) = d_unram_parity_data(s)?;
                let diff_parity = (v1 - v2).rem_euclid(2);
                let nonempty = if all_iso {
                    diff_parity == 0
                } else {
                    let lv = lambda_vals(s)?;
                    lv == [0, 1, 1] && diff_parity == 1
                };
                steps.push(CaseStep::new(
                    if all_iso { "three-line-parity-even" } else { "three-line-parity-odd" },
                    format!(
                        "planes {}, nu_F(beta1) = {v1}, nu_F(beta2) = {v2}",
                        if all_iso { "all isotropic" } else { "not all isotropic" }
                    ),
                    format!(
                        "nonempty iff nu_F(beta1) - nu_F(beta2) is {}: {}",
                        if all_iso { "even" } else { "odd (with constants (0,1,1))" },
                        nonempty
                    ),
                ));
                if nonempty { XbetaStatus::NonEmpty } else { XbetaStatus::Empty }
            } else {
                // two norm conditions: with r_ij = 1 - beta_i/beta_j,
                //   A = -r21 * r31^{-1} * l2/l3,   B = l3/l1 * (beta2/beta1) * r32 * r21^{-1}
                let (a_cond, b_cond) = d_ram_norm_conditions(s)?;
                steps.push(CaseStep::new(
                    "three-line-norm-pair",
                    format!("A in Nr: {a_cond}, B in Nr: {b_cond}"),
                    format!("nonempty iff both: {}", a_cond && b_cond),
                ));
                if a_cond && b_cond { XbetaStatus::NonEmpty } else { XbetaStatus::Empty }
            }
        }
    };
    Ok((status, steps))
}

fn iso_str(b: bool) -> &'static str {
    if b { "isotropic" } else { "anisotropic" }
}

fn lambda_vals(s: &Stratum) -> Result<[i64; 3], Error> {
    let mut out = [0i64; 3];
    for (i, l) in s.lambdas.iter().enumerate().take(3) {
        out[i] = l
            .valuation()?
            .finite()
            .ok_or(Error::IndeterminateValuation)?;
    }
    Ok(out)
}

fn d_unram_parity_data(s: &Stratum) -> Result<(bool, i64, i64), Error> {
    let cfg = &s.cfg;
    let lv = lambda_vals(s)?;
    let all_iso = lv[0] == lv[1] && lv[1] == lv[2];
    let v1 = match s.beta1.val_f(cfg)? {
        Valuation::Finite(v) => v,
        Valuation::Infinite => return Err(Error::IndeterminateValuation),
    };
    let v2 = match s.beta2.val_f(cfg)? {
        Valuation::Finite(v) => v,
        Valuation::Infinite => return Err(Error::IndeterminateValuation),
    };
    Ok((all_iso, v1, v2))
}

/// The two norm-group conditions deciding the ramified three-line case.
pub fn d_ram_norm_conditions(s: &Stratum) -> Result<(bool, bool), Error> {
    let cfg = &s.cfg;
    let r21 = one_minus_ratio(cfg, &s.beta2, &s.beta1)?;
    let r31 = one_minus_ratio(cfg, &s.beta3, &s.beta1)?;
    let r32 = one_minus_ratio(cfg, &s.beta3, &s.beta2)?;
    let l = &s.lambdas;
    let a_val = r21
        .mul(cfg, &r31.inv(cfg)?)
        .mul(cfg, &l[1])
        .mul(cfg, &l[2].inv(cfg)?)
        .neg(cfg);
    let ratio21 = s.beta2.div(cfg, &s.beta1)?;
    if !ratio21.is_in_base() {
        return Err(Error::Internal("beta2/beta1 must lie in F0".into()));
    }
    let b_val = l[2]
        .mul(cfg, &l[0].inv(cfg)?)
        .mul(cfg, &ratio21.a)
        .mul(cfg, &r32)
        .mul(cfg, &r21.inv(cfg)?);
    Ok((is_norm_class(cfg, &a_val)?, is_norm_class(cfg, &b_val)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::Vector;
    use crate::strata::Stratum;
    use rand::Rng;
    use rand::SeedableRng;

    fn ucfg() -> PrimeConfig {
        PrimeConfig::new(5, false, 2, 24).unwrap()
    }

    fn skew(cfg: &PrimeConfig, k: i64, u: i64) -> ExtElement {
        ExtElement::delta_times(
            cfg,
            BaseElement::from_i64(cfg, u).mul(cfg, &BaseElement::pi0_pow(cfg, k)),
        )
    }

    fn d_stratum(cfg: &PrimeConfig, ks: [i64; 3], us: [i64; 3], lambdas: [i64; 3]) -> Stratum {
        Stratum {
            cfg: cfg.clone(),
            tag: TypeTag::D,
            v2_isotropic: true,
            lambdas: lambdas.map(|l| BaseElement::from_i64(cfg, l)).to_vec(),
            beta1: skew(cfg, ks[0], us[0]),
            beta2: skew(cfg, ks[1], us[1]),
            beta3: skew(cfg, ks[2], us[2]),
            beta_block: None,
            beta_full: None,
            lattice_kind: None,
        }
    }

    #[test]
    fn round_trip_against_h_eval() {
        let cfg = ucfg();
        let s = d_stratum(&cfg, [-3, -1, -1], [1, 1, 2], [1, 1, 1]);
        assert!(s.validate().is_empty());
        let sys = assemble_system(&s).unwrap();
        let space = s.space().unwrap();
        let beta = s.beta_matrix().unwrap();
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..100 {
            let coords: Vec<i64> = (0..6).map(|_| rng.gen_range(-50..50)).collect();
            let u: [BaseElement; 6] =
                std::array::from_fn(|i| BaseElement::from_i64(&cfg, coords[i]));
            let v = Vector(vec![
                ExtElement::new(u[0].clone(), u[1].clone()),
                ExtElement::new(u[2].clone(), u[3].clone()),
                ExtElement::new(u[4].clone(), u[5].clone()),
            ]);
            // Q1(u) = h(v, v)
            let q1v = sys.eval(&cfg, 1, &u);
            let hv = space.h_eval(&cfg, &v, &v);
            assert!(hv.b.is_zero_to_precision());
            assert!(q1v.sub(&cfg, &hv.a).is_zero_to_precision());
            // d * Q2(u) = h(v, beta v)
            let q2v = sys.eval(&cfg, 2, &u);
            let bv = beta.apply(&cfg, &v);
            let hbv = space.h_eval(&cfg, &v, &bv);
            assert!(hbv.a.is_zero_to_precision());
            assert!(q2v.sub(&cfg, &hbv.b).is_zero_to_precision());
        }
    }

    #[test]
    fn criterion_d_unram_parity() {
        let cfg = ucfg();
        // all-unit constants, nu_F(beta1) = -3, nu_F(beta2) = -1: even difference
        let s = d_stratum(&cfg, [-3, -1, -1], [1, 1, 2], [1, 1, 1]);
        let (st, _) = criterion_status(&s).unwrap();
        assert_eq!(st, XbetaStatus::NonEmpty);
        // odd difference
        let s = d_stratum(&cfg, [-2, -1, -1], [1, 1, 2], [1, 1, 1]);
        let (st, _) = criterion_status(&s).unwrap();
        assert_eq!(st, XbetaStatus::Empty);
        // constants (0,1,1): nonempty needs odd difference
        let s = d_stratum(&cfg, [-2, -1, -1], [1, 1, 2], [1, 5, 5]);
        let (st, _) = criterion_status(&s).unwrap();
        assert_eq!(st, XbetaStatus::NonEmpty);
        let s = d_stratum(&cfg, [-3, -1, -1], [1, 1, 2], [1, 5, 5]);
        let (st, _) = criterion_status(&s).unwrap();
        assert_eq!(st, XbetaStatus::Empty);
    }

    #[test]
    fn criterion_d_ram_norm_pair_consistent_with_unram_shape() {
        // in the ramified case the two norm conditions decide; check the
        // criterion agrees with a brute-force search on a couple of instances
        let cfg = PrimeConfig::new(5, true, 2, 24).unwrap();
        let mk = |k1: i64, u2: i64| {
            Stratum {
                cfg: cfg.clone(),
                tag: TypeTag::D,
                v2_isotropic: true,
                lambdas: vec![
                    BaseElement::one(&cfg),
                    BaseElement::one(&cfg),
                    BaseElement::from_i64(&cfg, 4),
                ],
                beta1: skew(&cfg, k1, 1),
                beta2: skew(&cfg, -1, u2),
                beta3: ExtElement::zero(),
                beta_block: None,
                beta_full: None,
                lattice_kind: None,
            }
        };
        for (k1, u2) in [(-2i64, 1i64), (-2, 2), (-3, 1), (-3, 3)] {
            let s = mk(k1, u2);
            assert!(s.validate().is_empty(), "{:?}", s.validate());
            let (st, _) = criterion_status(&s).unwrap();
            let sys = assemble_system(&s).unwrap();
            let out = brute_search(&cfg, &sys, &SearchParams { depth: 8, node_budget: 2_000_000 });
            match (st, out) {
                (XbetaStatus::NonEmpty, SearchOutcome::Found(_)) => {}
                (XbetaStatus::Empty, SearchOutcome::NotFound { .. }) => {}
                (st, out) => panic!("criterion {st:?} vs search {out:?} for k1={k1} u2={u2}"),
            }
        }
    }
}
