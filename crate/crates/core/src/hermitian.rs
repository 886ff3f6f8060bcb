//! Hermitian spaces (V, h) of dimension <= 3 over F, Witt bases, isotropy
//! tests, determinant classes, and the explicit unipotent/torus elements of
//! U(2,1).
//!
//! Convention from the sesquilinear identity h(xv, yw) = x sigma(y) sigma(h(w,v)):
//! h is linear in the first slot, and with Gram matrix G_ij = h(b_i, b_j),
//! h(v, w) = v^T G sigma(w). The adjoint anti-involution is
//! sigma_h(X) = sigma(G^{-1} X^T G).

use crate::padic::{is_norm_class, solve_norm, BaseElement, ExtElement, PrimeConfig};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Orthogonal,
    Witt,
}

#[derive(Clone, Debug)]
pub struct HermitianSpace {
    pub dim: usize,
    pub gram: Vec<Vec<ExtElement>>,
    pub basis_kind: BasisKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vector(pub Vec<ExtElement>);

/// 3x3 matrix over F acting on V.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix(pub Vec<Vec<ExtElement>>);

/// Element of the unitary group, stored as its matrix in the fixed basis.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement(pub Matrix);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeylElement {
    Id,
    W,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetClass {
    Trivial,
    NonTrivial,
}

impl Matrix {
    pub fn zero(n: usize) -> Self {
        Matrix(vec![vec![ExtElement::zero(); n]; n])
    }

    pub fn identity(cfg: &PrimeConfig, n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.0[i][i] = ExtElement::one(cfg);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn mul(&self, cfg: &PrimeConfig, o: &Matrix) -> Matrix {
        let n = self.dim();
        let mut r = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = ExtElement::zero();
                for k in 0..n {
                    acc = acc.add(cfg, &self.0[i][k].mul(cfg, &o.0[k][j]));
                }
                r.0[i][j] = acc;
            }
        }
        r
    }

    pub fn add(&self, cfg: &PrimeConfig, o: &Matrix) -> Matrix {
        let n = self.dim();
        let mut r = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                r.0[i][j] = self.0[i][j].add(cfg, &o.0[i][j]);
            }
        }
        r
    }

    pub fn sub(&self, cfg: &PrimeConfig, o: &Matrix) -> Matrix {
        let n = self.dim();
        let mut r = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                r.0[i][j] = self.0[i][j].sub(cfg, &o.0[i][j]);
            }
        }
        r
    }

    pub fn scale(&self, cfg: &PrimeConfig, s: &ExtElement) -> Matrix {
        let n = self.dim();
        let mut r = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                r.0[i][j] = self.0[i][j].mul(cfg, s);
            }
        }
        r
    }

    pub fn conj_transpose(&self, cfg: &PrimeConfig) -> Matrix {
        let n = self.dim();
        let mut r = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                r.0[i][j] = self.0[j][i].conj(cfg);
            }
        }
        r
    }

    pub fn apply(&self, cfg: &PrimeConfig, v: &Vector) -> Vector {
        let n = self.dim();
        let mut out = vec![ExtElement::zero(); n];
        for (i, row) in self.0.iter().enumerate() {
            let mut acc = ExtElement::zero();
            for (k, e) in row.iter().enumerate() {
                acc = acc.add(cfg, &e.mul(cfg, &v.0[k]));
            }
            out[i] = acc;
        }
        let _ = n;
        Vector(out)
    }

    pub fn trace(&self, cfg: &PrimeConfig) -> ExtElement {
        let mut acc = ExtElement::zero();
        for i in 0..self.dim() {
            acc = acc.add(cfg, &self.0[i][i]);
        }
        acc
    }

    pub fn det(&self, cfg: &PrimeConfig) -> ExtElement {
        match self.dim() {
            1 => self.0[0][0].clone(),
            2 => {
                let a = self.0[0][0].mul(cfg, &self.0[1][1]);
                let b = self.0[0][1].mul(cfg, &self.0[1][0]);
                a.sub(cfg, &b)
            }
            3 => {
                let m = &self.0;
                let mut acc = ExtElement::zero();
                let cof = |i: usize, j: usize| -> (usize, usize, usize, usize) {
                    let r: Vec<usize> = (0..3).filter(|&x| x != i).collect();
                    let c: Vec<usize> = (0..3).filter(|&x| x != j).collect();
                    (r[0], r[1], c[0], c[1])
                };
                for j in 0..3 {
                    let (r0, r1, c0, c1) = cof(0, j);
                    let minor = m[r0][c0].mul(cfg, &m[r1][c1]).sub(cfg, &m[r0][c1].mul(cfg, &m[r1][c0]));
                    let term = m[0][j].mul(cfg, &minor);
                    acc = if j == 1 { acc.sub(cfg, &term) } else { acc.add(cfg, &term) };
                }
                acc
            }
            n => panic!("unsupported matrix dimension {n}"),
        }
    }

    /// Inverse via the adjugate; errors if the determinant is zero to precision.
    pub fn inv(&self, cfg: &PrimeConfig) -> Result<Matrix, Error> {
        let n = self.dim();
        let d = self.det(cfg);
        let dinv = d.inv(cfg)?;
        let mut adj = Matrix::zero(n);
        match n {
            1 => adj.0[0][0] = ExtElement::one(cfg),
            2 => {
                adj.0[0][0] = self.0[1][1].clone();
                adj.0[0][1] = self.0[0][1].neg(cfg);
                adj.0[1][0] = self.0[1][0].neg(cfg);
                adj.0[1][1] = self.0[0][0].clone();
            }
            3 => {
                for i in 0..3 {
                    for j in 0..3 {
                        let r: Vec<usize> = (0..3).filter(|&x| x != j).collect();
                        let c: Vec<usize> = (0..3).filter(|&x| x != i).collect();
                        let m = &self.0;
                        let minor = m[r[0]][c[0]]
                            .mul(cfg, &m[r[1]][c[1]])
                            .sub(cfg, &m[r[0]][c[1]].mul(cfg, &m[r[1]][c[0]]));
                        adj.0[i][j] = if (i + j) % 2 == 0 { minor } else { minor.neg(cfg) };
                    }
                }
            }
            _ => return Err(Error::UnsupportedConfiguration(format!("dim {n}"))),
        }
        Ok(adj.scale(cfg, &dinv))
    }

    pub fn is_zero_to_precision(&self) -> bool {
        self.0.iter().all(|row| row.iter().all(|e| e.is_zero_to_precision()))
    }
}

impl Vector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn scale(&self, cfg: &PrimeConfig, s: &ExtElement) -> Vector {
        Vector(self.0.iter().map(|e| e.mul(cfg, s)).collect())
    }

    pub fn add(&self, cfg: &PrimeConfig, o: &Vector) -> Vector {
        Vector(self.0.iter().zip(&o.0).map(|(a, b)| a.add(cfg, b)).collect())
    }

    pub fn basis(cfg: &PrimeConfig, n: usize, i: usize) -> Vector {
        let mut v = vec![ExtElement::zero(); n];
        v[i] = ExtElement::one(cfg);
        Vector(v)
    }
}

impl HermitianSpace {
    pub fn new(gram: Vec<Vec<ExtElement>>, basis_kind: BasisKind, cfg: &PrimeConfig) -> Result<Self, Error> {
        let dim = gram.len();
        if dim == 0 || dim > 3 || gram.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidConfig("gram must be square of dimension 1..3".into()));
        }
        // conjugate symmetry: gram[j][i] = sigma(gram[i][j])
        for i in 0..dim {
            for j in 0..dim {
                let diff = gram[j][i].sub(cfg, &gram[i][j].conj(cfg));
                if !diff.is_zero_to_precision() {
                    return Err(Error::ConstraintViolated(format!(
                        "gram not conjugate-symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let space = HermitianSpace { dim, gram, basis_kind };
        if space.gram_matrix().det(cfg).is_zero_to_precision() {
            return Err(Error::ConstraintViolated("gram is degenerate to precision".into()));
        }
        Ok(space)
    }

    /// Standard Witt 3-space: basis (e1, e0, e-1) with h(e1,e-1) = 1,
    /// h(e0,e0) = 1, isotropic e1, e-1.
    pub fn standard_witt(cfg: &PrimeConfig) -> Self {
        let one = ExtElement::one(cfg);
        let zero = ExtElement::zero();
        HermitianSpace {
            dim: 3,
            gram: vec![
                vec![zero.clone(), zero.clone(), one.clone()],
                vec![zero.clone(), one.clone(), zero.clone()],
                vec![one, zero.clone(), zero],
            ],
            basis_kind: BasisKind::Witt,
        }
    }

    /// Orthogonal space diag(lambda_1, .., lambda_n) with F0-constants.
    pub fn diagonal(cfg: &PrimeConfig, lambdas: &[BaseElement]) -> Self {
        let n = lambdas.len();
        let mut gram = vec![vec![ExtElement::zero(); n]; n];
        for (i, l) in lambdas.iter().enumerate() {
            gram[i][i] = ExtElement::from_base(l.clone());
        }
        let _ = cfg;
        HermitianSpace { dim: n, gram, basis_kind: BasisKind::Orthogonal }
    }

    pub fn gram_matrix(&self) -> Matrix {
        Matrix(self.gram.clone())
    }

    /// h(v, w) = sum_ij v_i sigma(w_j) gram[i][j].
    pub fn h_eval(&self, cfg: &PrimeConfig, v: &Vector, w: &Vector) -> ExtElement {
        assert_eq!(v.dim(), self.dim);
        assert_eq!(w.dim(), self.dim);
        let mut acc = ExtElement::zero();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let t = v.0[i].mul(cfg, &w.0[j].conj(cfg)).mul(cfg, &self.gram[i][j]);
                acc = acc.add(cfg, &t);
            }
        }
        acc
    }

    /// Adjoint anti-involution sigma_h(X) = sigma(G^{-1} X^T G).
    pub fn sigma_h(&self, cfg: &PrimeConfig, x: &Matrix) -> Result<Matrix, Error> {
        let g = self.gram_matrix();
        let ginv = g.inv(cfg)?;
        let n = x.dim();
        let mut xt = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                xt.0[i][j] = x.0[j][i].clone();
            }
        }
        let m = ginv.mul(cfg, &xt).mul(cfg, &g);
        // entrywise sigma
        let mut out = Matrix::zero(n);
        for i in 0..n {
            for j in 0..n {
                out.0[i][j] = m.0[i][j].conj(cfg);
            }
        }
        Ok(out)
    }

    pub fn is_skew(&self, cfg: &PrimeConfig, x: &Matrix) -> Result<bool, Error> {
        let s = self.sigma_h(cfg, x)?;
        Ok(s.add(cfg, x).is_zero_to_precision())
    }

    pub fn is_unitary(&self, cfg: &PrimeConfig, g: &Matrix) -> Result<bool, Error> {
        let s = self.sigma_h(cfg, g)?;
        let prod = s.mul(cfg, g).sub(cfg, &Matrix::identity(cfg, g.dim()));
        Ok(prod.is_zero_to_precision())
    }

    /// Class of det(gram) in F0^x / Nr(F^x). The determinant of a
    /// conjugate-symmetric Gram matrix lies in F0.
    pub fn det_class(&self, cfg: &PrimeConfig) -> Result<DetClass, Error> {
        let d = self.gram_matrix().det(cfg);
        if !d.is_in_base() {
            return Err(Error::Internal("hermitian determinant has a d-component".into()));
        }
        if is_norm_class(cfg, &d.a)? {
            Ok(DetClass::Trivial)
        } else {
            Ok(DetClass::NonTrivial)
        }
    }
}

/// Does lambda_1 N(a) + lambda_2 N(b) = 0 admit a nonzero solution?
/// Equivalent to -lambda_1 lambda_2 being a norm.
pub fn is_isotropic_binary(
    cfg: &PrimeConfig,
    l1: &ExtElement,
    l2: &ExtElement,
) -> Result<bool, Error> {
    if !l1.is_in_base() || !l2.is_in_base() {
        return Err(Error::ConstraintViolated("diagonal constants must lie in F0".into()));
    }
    let prod = l1.a.mul(cfg, &l2.a).neg(cfg);
    is_norm_class(cfg, &prod)
}

/// Witt pair for an isotropic binary space <v1, v3> with diagonal constants,
/// following the explicit constructions used for the period-2 and period-4
/// lattice splittings.
///
/// `unram` mode expects h(v1,v1) = h(v3,v3) = p0 and solves eps sigma(eps) = -1,
/// returning e1 = (eps v1 + v3)/2 and e-1 = (-eps v1 + v3)/p0, so that
/// o v1 + o v3 = o e1 + p e-1.
///
/// `ram` mode expects unit constants and solves eps sigma(eps) = -l3/l1,
/// returning e1 = (eps v1 + v3)/2 and e-1 = (-eps v1 + v3)/l3, so that
/// o v1 + o v3 = o e1 + o e-1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WittMode {
    Unram,
    Ram,
}

pub fn witt_from_anisotropic_pair(
    cfg: &PrimeConfig,
    space2: &HermitianSpace,
    mode: WittMode,
) -> Result<(Vector, Vector), Error> {
    if space2.dim != 2 || space2.basis_kind != BasisKind::Orthogonal {
        return Err(Error::ConstraintViolated("expected an orthogonal binary space".into()));
    }
    let l1 = &space2.gram[0][0];
    let l3 = &space2.gram[1][1];
    if !l1.is_in_base() || !l3.is_in_base() {
        return Err(Error::ConstraintViolated("diagonal constants must lie in F0".into()));
    }
    let (target, scale_back): (BaseElement, BaseElement) = match mode {
        WittMode::Unram => {
            if cfg.ramified {
                return Err(Error::UnsupportedConfiguration("unram mode on a ramified field".into()));
            }
            for l in [l1, l3] {
                let v = l.a.valuation()?.finite().ok_or(Error::IndeterminateValuation)?;
                if v != 1 {
                    return Err(Error::ConstraintViolated(
                        "unram mode expects constants of valuation 1".into(),
                    ));
                }
            }
            (BaseElement::from_i64(cfg, -1), BaseElement::pi0_pow(cfg, 1))
        }
        WittMode::Ram => {
            let t = l3.a.mul(cfg, &l1.a.inv(cfg)?).neg(cfg);
            (t, l3.a.clone())
        }
    };
    let eps_f = solve_norm(cfg, &target)
        .map_err(|_| Error::NoSolution("eps sigma(eps) = -l3/l1 unsolvable: pair is anisotropic".into()))?;
    // e1 = (eps v1 + v3)/2, e-1 = (-eps v1 + v3)/scale
    let half = BaseElement::from_i64(cfg, 2).inv(cfg)?;
    let e1 = Vector(vec![eps_f.mul_base(cfg, &half), ExtElement::from_base(half.clone())]);
    let sinv = scale_back.inv(cfg)?;
    let em1 = Vector(vec![eps_f.neg(cfg).mul_base(cfg, &sinv), ExtElement::from_base(sinv.clone())]);
    // sanity: Witt identities
    let z1 = space2.h_eval(cfg, &e1, &e1);
    let z2 = space2.h_eval(cfg, &em1, &em1);
    let z3 = space2.h_eval(cfg, &e1, &em1).sub(cfg, &ExtElement::one(cfg));
    if !(z1.is_zero_to_precision() && z2.is_zero_to_precision() && z3.is_zero_to_precision()) {
        return Err(Error::Internal("constructed pair fails the Witt identities".into()));
    }
    Ok((e1, em1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnipotentSide {
    Upper,
    Lower,
}

/// u(c, d) or ubar(c, d) in the Witt basis, subject to c sigma(c) + d + sigma(d) = 0.
pub fn make_unipotent(
    cfg: &PrimeConfig,
    c: &ExtElement,
    d: &ExtElement,
    side: UnipotentSide,
) -> Result<GroupElement, Error> {
    let n = c.mul(cfg, &c.conj(cfg));
    let t = d.add(cfg, &d.conj(cfg)).add(cfg, &n);
    if !t.is_zero_to_precision() {
        return Err(Error::ConstraintViolated(
            "c sigma(c) + d + sigma(d) = 0 fails to precision".into(),
        ));
    }
    let one = ExtElement::one(cfg);
    let zero = ExtElement::zero();
    let mc = c.conj(cfg).neg(cfg);
    let m = match side {
        UnipotentSide::Upper => vec![
            vec![one.clone(), c.clone(), d.clone()],
            vec![zero.clone(), one.clone(), mc],
            vec![zero.clone(), zero.clone(), one],
        ],
        UnipotentSide::Lower => vec![
            vec![one.clone(), zero.clone(), zero.clone()],
            vec![c.clone(), one.clone(), zero],
            vec![d.clone(), mc, one],
        ],
    };
    Ok(GroupElement(Matrix(m)))
}

/// Given c, complete it to a valid (c, d) pair: d = -c sigma(c)/2 + t*delta.
pub fn unipotent_d(cfg: &PrimeConfig, c: &ExtElement, t: &BaseElement) -> ExtElement {
    let n = c.mul(cfg, &c.conj(cfg));
    let a = n.a.neg(cfg).half(cfg);
    ExtElement::new(a, t.clone())
}

/// diag(z, z', sigma(z)^{-1}) with z' sigma(z') = 1.
pub fn make_torus(cfg: &PrimeConfig, z: &ExtElement, z1: &ExtElement) -> Result<GroupElement, Error> {
    let n = z1.mul(cfg, &z1.conj(cfg)).sub(cfg, &ExtElement::one(cfg));
    if !n.is_zero_to_precision() {
        return Err(Error::ConstraintViolated("z' sigma(z') = 1 fails to precision".into()));
    }
    let zi = z.conj(cfg).inv(cfg)?;
    let mut m = Matrix::zero(3);
    m.0[0][0] = z.clone();
    m.0[1][1] = z1.clone();
    m.0[2][2] = zi;
    Ok(GroupElement(m))
}

impl WeylElement {
    pub fn matrix(&self, cfg: &PrimeConfig) -> Matrix {
        match self {
            WeylElement::Id => Matrix::identity(cfg, 3),
            WeylElement::W => {
                let mut m = Matrix::zero(3);
                m.0[0][2] = ExtElement::one(cfg);
                m.0[1][1] = ExtElement::one(cfg);
                m.0[2][0] = ExtElement::one(cfg);
                m
            }
        }
    }

    pub fn all() -> [WeylElement; 2] {
        [WeylElement::Id, WeylElement::W]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::HalfInt;

    fn ucfg() -> PrimeConfig {
        PrimeConfig::new(5, false, 2, 24).unwrap()
    }
    fn rcfg() -> PrimeConfig {
        PrimeConfig::new(5, true, 2, 24).unwrap()
    }

    #[test]
    fn witt_basics() {
        let cfg = ucfg();
        let sp = HermitianSpace::standard_witt(&cfg);
        let e1 = Vector::basis(&cfg, 3, 0);
        let em1 = Vector::basis(&cfg, 3, 2);
        let h = sp.h_eval(&cfg, &e1, &em1);
        assert!(h.sub(&cfg, &ExtElement::one(&cfg)).is_zero_to_precision());
        assert!(sp.h_eval(&cfg, &e1, &e1).is_zero_to_precision());
        // linearity in the first slot
        let x = ExtElement::new(BaseElement::from_i64(&cfg, 3), BaseElement::from_i64(&cfg, 2));
        let lhs = sp.h_eval(&cfg, &e1.scale(&cfg, &x), &em1);
        assert!(lhs.sub(&cfg, &x).is_zero_to_precision());
    }

    #[test]
    fn h_eval_self_lands_in_base() {
        for cfg in [ucfg(), rcfg()] {
            let sp = HermitianSpace::standard_witt(&cfg);
            let v = Vector(vec![
                ExtElement::new(BaseElement::from_i64(&cfg, 2), BaseElement::from_i64(&cfg, 3)),
                ExtElement::new(BaseElement::from_i64(&cfg, -1), BaseElement::from_i64(&cfg, 4)),
                ExtElement::new(BaseElement::from_i64(&cfg, 7), BaseElement::from_i64(&cfg, 1)),
            ]);
            let h = sp.h_eval(&cfg, &v, &v);
            assert!(h.is_in_base());
        }
    }

    #[test]
    fn unipotent_constraint_and_unitarity() {
        for cfg in [ucfg(), rcfg()] {
            let sp = HermitianSpace::standard_witt(&cfg);
            let c = ExtElement::new(BaseElement::from_i64(&cfg, 1), BaseElement::from_i64(&cfg, 2));
            let d = unipotent_d(&cfg, &c, &BaseElement::from_i64(&cfg, 3));
            let u = make_unipotent(&cfg, &c, &d, UnipotentSide::Upper).unwrap();
            assert!(sp.is_unitary(&cfg, &u.0).unwrap());
            let ub = make_unipotent(&cfg, &c, &d, UnipotentSide::Lower).unwrap();
            assert!(sp.is_unitary(&cfg, &ub.0).unwrap());
            // identity
            let id = make_unipotent(&cfg, &ExtElement::zero(), &ExtElement::zero(), UnipotentSide::Upper)
                .unwrap();
            assert_eq!(id.0, Matrix::identity(&cfg, 3));
            // bad constraint
            let bad = make_unipotent(&cfg, &ExtElement::one(&cfg), &ExtElement::zero(), UnipotentSide::Upper);
            assert!(bad.is_err());
        }
    }

    #[test]
    fn torus_and_weyl_are_unitary() {
        let cfg = ucfg();
        let sp = HermitianSpace::standard_witt(&cfg);
        let z = ExtElement::new(BaseElement::from_i64(&cfg, 3), BaseElement::from_i64(&cfg, 1));
        // z' = mu / sigma(mu) has norm 1
        let mu = ExtElement::new(BaseElement::from_i64(&cfg, 2), BaseElement::from_i64(&cfg, -1));
        let z1 = mu.div(&cfg, &mu.conj(&cfg)).unwrap();
        let t = make_torus(&cfg, &z, &z1).unwrap();
        assert!(sp.is_unitary(&cfg, &t.0).unwrap());
        let w = WeylElement::W.matrix(&cfg);
        assert!(sp.is_unitary(&cfg, &w).unwrap());
    }

    #[test]
    fn isotropy_binary_rules() {
        let cfg = ucfg();
        let one = ExtElement::one(&cfg);
        let m1 = ExtElement::from_i64(&cfg, -1);
        assert!(is_isotropic_binary(&cfg, &one, &m1).unwrap());
        let p0 = ExtElement::from_base(BaseElement::pi0_pow(&cfg, 1));
        assert!(!is_isotropic_binary(&cfg, &one, &p0).unwrap());

        // ramified p=5: (1, 2) isotropic iff -2 is a residue mod 5; -2 = 3 is not
        let cfg = rcfg();
        let two = ExtElement::from_i64(&cfg, 2);
        assert!(!is_isotropic_binary(&cfg, &ExtElement::one(&cfg), &two).unwrap());
        // (1, -1) always isotropic
        assert!(is_isotropic_binary(&cfg, &ExtElement::one(&cfg), &ExtElement::from_i64(&cfg, -1)).unwrap());
    }

    #[test]
    fn witt_pair_unram() {
        let cfg = ucfg();
        let p0 = BaseElement::pi0_pow(&cfg, 1);
        let sp = HermitianSpace::diagonal(&cfg, &[p0.clone(), p0.clone()]);
        let (e1, em1) = witt_from_anisotropic_pair(&cfg, &sp, WittMode::Unram).unwrap();
        assert!(sp.h_eval(&cfg, &e1, &e1).is_zero_to_precision());
        assert!(sp.h_eval(&cfg, &em1, &em1).is_zero_to_precision());
        let pair = sp.h_eval(&cfg, &e1, &em1);
        assert!(pair.sub(&cfg, &ExtElement::one(&cfg)).is_zero_to_precision());
    }

    #[test]
    fn witt_pair_ram() {
        let cfg = rcfg();
        // -l3/l1 = 1 is a norm
        let sp = HermitianSpace::diagonal(
            &cfg,
            &[BaseElement::one(&cfg), BaseElement::from_i64(&cfg, -1)],
        );
        let (e1, em1) = witt_from_anisotropic_pair(&cfg, &sp, WittMode::Ram).unwrap();
        let pair = sp.h_eval(&cfg, &e1, &em1);
        assert!(pair.sub(&cfg, &ExtElement::one(&cfg)).is_zero_to_precision());
        // eps = 1 here: e1 = (v1 + v3)/2
        assert_eq!(e1.0[0].val_rel(&cfg).unwrap(), Some(HalfInt::from_int(0)));

        // anisotropic pair: no solution
        let sp = HermitianSpace::diagonal(
            &cfg,
            &[BaseElement::one(&cfg), BaseElement::from_i64(&cfg, 2)],
        );
        assert!(witt_from_anisotropic_pair(&cfg, &sp, WittMode::Ram).is_err());
    }

    #[test]
    fn det_classes() {
        let cfg = ucfg();
        let sp = HermitianSpace::diagonal(
            &cfg,
            &[BaseElement::one(&cfg), BaseElement::one(&cfg), BaseElement::one(&cfg)],
        );
        assert_eq!(sp.det_class(&cfg).unwrap(), DetClass::Trivial);
        let p0 = BaseElement::pi0_pow(&cfg, 1);
        let sp = HermitianSpace::diagonal(&cfg, &[p0.clone(), BaseElement::one(&cfg), p0]);
        assert_eq!(sp.det_class(&cfg).unwrap(), DetClass::Trivial);
        let sp = HermitianSpace::diagonal(
            &cfg,
            &[BaseElement::pi0_pow(&cfg, 1), BaseElement::one(&cfg), BaseElement::one(&cfg)],
        );
        assert_eq!(sp.det_class(&cfg).unwrap(), DetClass::NonTrivial);
        // Witt 2-space has determinant -1
        let cfgr = rcfg();
        let one = ExtElement::one(&cfgr);
        let zero = ExtElement::zero();
        let w2 = HermitianSpace::new(
            vec![vec![zero.clone(), one.clone()], vec![one, zero]],
            BasisKind::Witt,
            &cfgr,
        )
        .unwrap();
        // p = 5: -1 = 4 is a square residue, so trivial
        assert_eq!(w2.det_class(&cfgr).unwrap(), DetClass::Trivial);
    }

    #[test]
    fn skew_adjoint_works() {
        for cfg in [ucfg(), rcfg()] {
            let sp = HermitianSpace::standard_witt(&cfg);
            // beta = delta * E11 - delta * E33 pattern is skew for the Witt gram
            let d = ExtElement::delta(&cfg);
            let mut b = Matrix::zero(3);
            b.0[0][2] = d.clone();
            b.0[2][0] = d.clone();
            assert!(sp.is_skew(&cfg, &b).unwrap());
            let mut nb = Matrix::zero(3);
            nb.0[0][2] = ExtElement::one(&cfg);
            assert!(!sp.is_skew(&cfg, &nb).unwrap());
        }
    }
}
