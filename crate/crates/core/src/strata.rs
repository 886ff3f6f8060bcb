//! The stratum data model: orthogonal splittings, component elements beta_i,
//! the derived invariants n and q_i, type tagging, validity checks, and
//! attachment of the canonical self-dual lattice sequence for each shape.
//!
//! Types, by the shape of the algebra F[beta]:
//!   A: F[beta] a cubic field (one block),
//!   B: splitting 1 + 2 with F[beta_2] a quadratic field extension of F,
//!   C: splitting 1 + 2 with both components scalar,
//!   D: splitting 1 + 1 + 1.

use crate::hermitian::{BasisKind, HermitianSpace, Matrix};
use crate::lattice::{Catalogued, LatticeSequence};
use crate::padic::{is_norm_class, legendre, pow_mod, BaseElement, ExtElement, PrimeConfig, Valuation};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TypeTag {
    A,
    B,
    C,
    D,
}

impl TypeTag {
    pub fn name(&self) -> &'static str {
        match self {
            TypeTag::A => "A",
            TypeTag::B => "B",
            TypeTag::C => "C",
            TypeTag::D => "D",
        }
    }
}

/// A skew stratum candidate. Interpretation of the fields depends on the tag:
///
/// - A: `beta_full` is the skew 3x3 matrix in the standard Witt basis.
/// - B: `beta1` acts on the line V1, `beta_block` on the plane V2 in the
///   block basis. When `v2_isotropic`, the distinguished basis is a Witt
///   basis (e1, e0, e-1) with e1, e-1 in V2 and e0 in V1 of square `lambdas[0]`;
///   otherwise it is orthogonal (v1, v2, v3) with constants `lambdas` and
///   V2 = <v2, v3>.
/// - C: like B but with a scalar `beta2` on V2.
/// - D: three scalar components on the lines <v_i> with constants `lambdas`.
#[derive(Clone, Debug)]
pub struct Stratum {
    pub cfg: PrimeConfig,
    pub tag: TypeTag,
    pub v2_isotropic: bool,
    pub lambdas: Vec<BaseElement>,
    pub beta1: ExtElement,
    pub beta2: ExtElement,
    pub beta3: ExtElement,
    pub beta_block: Option<[[ExtElement; 2]; 2]>,
    pub beta_full: Option<Matrix>,
    /// Lattice shape selector where two shapes coexist (type C, unramified,
    /// isotropic V2).
    pub lattice_kind: Option<Catalogued>,
}

#[derive(Clone, Debug)]
pub struct QInvariants {
    pub n: i64,
    pub q: Vec<i64>,
    pub period: usize,
}

impl Stratum {
    /// Hermitian space in the distinguished basis of this shape.
    pub fn space(&self) -> Result<HermitianSpace, Error> {
        let cfg = &self.cfg;
        match (self.tag, self.v2_isotropic) {
            (TypeTag::A, _) => Ok(HermitianSpace::standard_witt(cfg)),
            (TypeTag::B | TypeTag::C, true) => {
                let l0 = self.lambdas.first().cloned().unwrap_or_else(|| BaseElement::one(cfg));
                let one = ExtElement::one(cfg);
                let zero = ExtElement::zero();
                HermitianSpace::new(
                    vec![
                        vec![zero.clone(), zero.clone(), one.clone()],
                        vec![zero.clone(), ExtElement::from_base(l0), zero.clone()],
                        vec![one, zero.clone(), zero],
                    ],
                    BasisKind::Witt,
                    cfg,
                )
            }
            (TypeTag::B | TypeTag::C, false) | (TypeTag::D, _) => {
                if self.lambdas.len() != 3 {
                    return Err(Error::InvalidConfig("need three diagonal constants".into()));
                }
                Ok(HermitianSpace::diagonal(cfg, &self.lambdas))
            }
        }
    }

    /// beta as a 3x3 matrix in the same distinguished basis as `space()`.
    pub fn beta_matrix(&self) -> Result<Matrix, Error> {
        let cfg = &self.cfg;
        let mut m = Matrix::zero(3);
        match self.tag {
            TypeTag::A => {
                return self
                    .beta_full
                    .clone()
                    .ok_or_else(|| Error::InvalidConfig("type A needs the full matrix".into()));
            }
            TypeTag::B => {
                let b = self
                    .beta_block
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("type B needs the 2x2 block".into()))?;
                if self.v2_isotropic {
                    // block on (e1, e-1) = coordinates {0, 2}; beta1 on e0
                    m.0[0][0] = b[0][0].clone();
                    m.0[0][2] = b[0][1].clone();
                    m.0[2][0] = b[1][0].clone();
                    m.0[2][2] = b[1][1].clone();
                    m.0[1][1] = self.beta1.clone();
                } else {
                    // beta1 on v1; block on (v2, v3)
                    m.0[0][0] = self.beta1.clone();
                    m.0[1][1] = b[0][0].clone();
                    m.0[1][2] = b[0][1].clone();
                    m.0[2][1] = b[1][0].clone();
                    m.0[2][2] = b[1][1].clone();
                }
            }
            TypeTag::C => {
                if self.v2_isotropic {
                    // e1, e-1 span V2 (scalar beta2), e0 spans V1 (beta1)
                    m.0[0][0] = self.beta2.clone();
                    m.0[1][1] = self.beta1.clone();
                    m.0[2][2] = self.beta2.clone();
                } else {
                    m.0[0][0] = self.beta1.clone();
                    m.0[1][1] = self.beta2.clone();
                    m.0[2][2] = self.beta2.clone();
                }
            }
            TypeTag::D => {
                m.0[0][0] = self.beta1.clone();
                m.0[1][1] = self.beta2.clone();
                m.0[2][2] = self.beta3.clone();
            }
        }
        let _ = cfg;
        Ok(m)
    }

    /// Coordinate sets of the splitting blocks in the distinguished basis,
    /// block 1 first.
    pub fn block_coords(&self) -> Vec<Vec<usize>> {
        match (self.tag, self.v2_isotropic) {
            (TypeTag::A, _) => vec![vec![0, 1, 2]],
            (TypeTag::B | TypeTag::C, true) => vec![vec![1], vec![0, 2]],
            (TypeTag::B | TypeTag::C, false) => vec![vec![0], vec![1, 2]],
            (TypeTag::D, _) => vec![vec![0], vec![1], vec![2]],
        }
    }

    /// The canonical self-dual lattice sequence of the shape, in the
    /// distinguished basis. The cubic shape's period-6 chain is not
    /// catalogued.
    pub fn attach_lattice_sequence(&self) -> Result<LatticeSequence, Error> {
        let cfg = &self.cfg;
        match self.tag {
            TypeTag::A => Err(Error::UnsupportedConfiguration(
                "the period-6 chain of a cubic-field stratum is not catalogued".into(),
            )),
            TypeTag::B => {
                if self.v2_isotropic {
                    if cfg.ramified {
                        Catalogued::L2.sequence(cfg)
                    } else {
                        Catalogued::L3.sequence(cfg)
                    }
                } else if cfg.ramified {
                    // orthogonal units, duplicated o^3
                    LatticeSequence::new(
                        2,
                        vec![[0, 0, 0], [1, 1, 1]],
                        BasisKind::Orthogonal,
                        self.lambda_f_vals()?,
                    )
                } else {
                    // diag(p, 1, p) with the middle coordinate descending first
                    LatticeSequence::new(
                        2,
                        vec![[0, 0, 0], [0, 1, 0]],
                        BasisKind::Orthogonal,
                        self.lambda_f_vals()?,
                    )
                }
            }
            TypeTag::C => {
                if self.v2_isotropic {
                    let kind = if cfg.ramified {
                        Catalogued::L2
                    } else {
                        self.lattice_kind.unwrap_or(Catalogued::L2)
                    };
                    if kind == Catalogued::L3 {
                        return Err(Error::UnsupportedConfiguration(
                            "period-4 shape does not occur for scalar splittings".into(),
                        ));
                    }
                    kind.sequence(cfg)
                } else if cfg.ramified {
                    LatticeSequence::new(
                        2,
                        vec![[0, 0, 0], [1, 1, 1]],
                        BasisKind::Orthogonal,
                        self.lambda_f_vals()?,
                    )
                } else {
                    LatticeSequence::new(
                        2,
                        vec![[0, 0, 0], [0, 1, 0]],
                        BasisKind::Orthogonal,
                        self.lambda_f_vals()?,
                    )
                }
            }
            TypeTag::D => {
                let lv = self.lambda_f_vals()?;
                let mut exps = vec![[0i64; 3], [0i64; 3]];
                for i in 0..3 {
                    // nu_F(lambda) = 0: o at (-1, 0), descending at 1
                    // nu_F(lambda) = 2 (unramified p-level): o at (0, 1)
                    if lv[i] == 0 {
                        exps[1][i] = 1;
                    }
                }
                LatticeSequence::new(2, exps, BasisKind::Orthogonal, lv)
            }
        }
    }

    fn lambda_f_vals(&self) -> Result<[i64; 3], Error> {
        let mut out = [0i64; 3];
        for (i, l) in self.lambdas.iter().enumerate().take(3) {
            match l.valuation()? {
                Valuation::Infinite => {
                    return Err(Error::ConstraintViolated("zero diagonal constant".into()))
                }
                Valuation::Finite(v) => out[i] = self.cfg.e() * v,
            }
        }
        Ok(out)
    }

    /// n and the per-block q_i = -nu_{Lambda_i}(beta_i), computed against the
    /// attached sequence.
    pub fn q_invariants(&self) -> Result<QInvariants, Error> {
        let cfg = &self.cfg;
        let seq = self.attach_lattice_sequence()?;
        let beta = self.beta_matrix()?;
        let mut q = Vec::new();
        for coords in self.block_coords() {
            let mut embedded = Matrix::zero(3);
            let mut zero_block = true;
            for &i in &coords {
                for &j in &coords {
                    embedded.0[i][j] = beta.0[i][j].clone();
                    if !embedded.0[i][j].is_zero_to_precision() {
                        zero_block = false;
                    }
                }
            }
            if zero_block {
                q.push(0);
            } else {
                q.push(-seq.nu_lambda(cfg, &embedded)?);
            }
        }
        let n = *q.iter().max().expect("at least one block");
        Ok(QInvariants { n, q, period: seq.period })
    }

    /// Check every structural clause; an empty list means the stratum is a
    /// valid skew semisimple stratum of its tag (with the minimality and
    /// parity normalisations enforced, not performed).
    pub fn validate(&self) -> Vec<String> {
        match self.validate_inner() {
            Ok(v) => v,
            Err(e) => vec![format!("structural error: {e}")],
        }
    }

    fn validate_inner(&self) -> Result<Vec<String>, Error> {
        let cfg = &self.cfg;
        let mut bad = Vec::new();
        let space = match self.space() {
            Ok(s) => s,
            Err(e) => return Ok(vec![format!("space: {e}")]),
        };
        let beta = match self.beta_matrix() {
            Ok(b) => b,
            Err(e) => return Ok(vec![format!("beta: {e}")]),
        };

        // ambient determinant: class of -det must be trivial so that the
        // space admits a Witt basis with a unit middle vector
        let det = space.gram_matrix().det(cfg);
        if !det.is_in_base() {
            bad.push("gram determinant has a d-component".into());
        } else {
            match is_norm_class(cfg, &det.a.neg(cfg)) {
                Ok(true) => {}
                Ok(false) => bad.push("ambient determinant class violated".into()),
                Err(_) => bad.push("ambient determinant indeterminate".into()),
            }
        }

        match space.is_skew(cfg, &beta) {
            Ok(true) => {}
            Ok(false) => bad.push("skewness violated: sigma_h(beta) != -beta".into()),
            Err(e) => bad.push(format!("skewness check failed: {e}")),
        }

        match self.tag {
            TypeTag::A => self.validate_cubic(&mut bad),
            TypeTag::B => self.validate_b(&mut bad),
            TypeTag::C => self.validate_c(&mut bad),
            TypeTag::D => self.validate_d(&mut bad),
        }

        // depth: nu_Lambda(beta) = -n with n > 0
        if self.tag != TypeTag::A {
            match self.q_invariants() {
                Ok(qi) => {
                    if qi.n <= 0 {
                        bad.push("depth must be positive: nu_Lambda(beta) = -n with n > 0".into());
                    }
                }
                Err(e) => bad.push(format!("q-invariants: {e}")),
            }
        }
        Ok(bad)
    }

    fn validate_cubic(&self, bad: &mut Vec<String>) {
        let cfg = &self.cfg;
        let beta = match &self.beta_full {
            Some(b) => b,
            None => {
                bad.push("cubic stratum needs the full matrix".into());
                return;
            }
        };
        // Certify that the characteristic polynomial is irreducible over F:
        // either a totally ramified Newton polygon (single slope -q/3 with
        // gcd(q,3) = 1) or an irreducible unit-level reduction.
        let tr = beta.trace(cfg);
        let det = beta.det(cfg);
        // second symmetric function
        let mut e2 = ExtElement::zero();
        for i in 0..3 {
            for j in (i + 1)..3 {
                let t = beta.0[i][i]
                    .mul(cfg, &beta.0[j][j])
                    .sub(cfg, &beta.0[i][j].mul(cfg, &beta.0[j][i]));
                e2 = e2.add(cfg, &t);
            }
        }
        // X^3 - tr X^2 + e2 X - det
        let c = [det.neg(cfg), e2, tr.neg(cfg)]; // c0net + c1 X + c2 X^2 + X^3
        let vals: Vec<Option<i64>> = c
            .iter()
            .map(|x| x.val_f(cfg).ok().and_then(|v| v.finite()))
            .collect();
        let v0 = match vals[0] {
            Some(v) => v,
            None => {
                bad.push("cubic certificate: constant term vanishes to precision".into());
                return;
            }
        };
        // Eisenstein-style slope test: polygon is one segment of slope v0/3
        // iff 3*v_i >= (3 - i)*v0 for i = 1, 2, and gcd(v0, 3) = 1.
        let slope_ok = v0.rem_euclid(3) != 0
            && (1..3).all(|i| match vals[i] {
                None => true,
                Some(vi) => 3 * vi >= (3 - i as i64) * v0,
            });
        if !slope_ok {
            bad.push("cannot certify that the cubic block generates a field".into());
        }
    }

    fn validate_b(&self, bad: &mut Vec<String>) {
        let cfg = &self.cfg;
        let block = match &self.beta_block {
            Some(b) => b,
            None => {
                bad.push("type B needs a 2x2 block".into());
                return;
            }
        };
        if !self.beta1.is_skew() {
            bad.push("component on V1 must be skew".into());
        }
        // quadratic field generated by the block: disc = tr^2 - 4 det
        let t = block[0][0].add(cfg, &block[1][1]);
        let det = block[0][0].mul(cfg, &block[1][1]).sub(cfg, &block[0][1].mul(cfg, &block[1][0]));
        let disc = t.mul(cfg, &t).sub(cfg, &det.mul(cfg, &ExtElement::from_i64(cfg, 4)));
        match square_class_in_f(cfg, &disc) {
            Ok(SquareClass::Square) => {
                bad.push("block does not generate a field: split characteristic polynomial".into())
            }
            Ok(SquareClass::NonSquareEvenVal) => {
                if !cfg.ramified {
                    bad.push("quadratic block must generate a ramified extension of F".into());
                }
            }
            Ok(SquareClass::OddVal) => {
                if cfg.ramified {
                    bad.push("quadratic block must generate an unramified extension of F".into());
                }
            }
            Err(_) => bad.push("block discriminant indeterminate".into()),
        }
        // lambda patterns
        if self.v2_isotropic {
            if let Some(l0) = self.lambdas.first() {
                match is_norm_class(cfg, l0) {
                    Ok(true) => {}
                    _ => bad.push("middle-vector constant must be a norm".into()),
                }
            }
        } else if !cfg.ramified {
            match self.lambda_f_vals() {
                Ok(lv) => {
                    if lv != [1, 0, 1] {
                        bad.push(
                            "anisotropic unramified shape needs constants of valuation (1,0,1)"
                                .into(),
                        );
                    }
                }
                Err(e) => bad.push(format!("constants: {e}")),
            }
        } else {
            match self.lambda_f_vals() {
                Ok(lv) => {
                    if lv != [0, 0, 0] {
                        bad.push("anisotropic ramified shape needs unit constants".into());
                    } else {
                        let aniso = matches!(
                            crate::hermitian::is_isotropic_binary(
                                cfg,
                                &ExtElement::from_base(self.lambdas[1].clone()),
                                &ExtElement::from_base(self.lambdas[2].clone()),
                            ),
                            Ok(false)
                        );
                        if !aniso {
                            bad.push("plane <v2, v3> must be anisotropic".into());
                        }
                        let pair_iso = matches!(
                            crate::hermitian::is_isotropic_binary(
                                cfg,
                                &ExtElement::from_base(self.lambdas[0].clone()),
                                &ExtElement::from_base(self.lambdas[2].clone()),
                            ),
                            Ok(true)
                        );
                        if !pair_iso {
                            bad.push("pair <v1, v3> must be isotropic (reorder v2, v3)".into());
                        }
                    }
                }
                Err(e) => bad.push(format!("constants: {e}")),
            }
        }
        // parity constraints on (q1, q2)
        if let Ok(qi) = self.q_invariants() {
            let (q1, q2) = (qi.q[0], qi.q[1]);
            if q1 == q2 {
                bad.push("q1 = q2 is impossible for a 1+2 field splitting".into());
            }
            let ok = if self.v2_isotropic && !cfg.ramified {
                q2.rem_euclid(4) == 2 && q1.rem_euclid(4) == 0
            } else if !self.v2_isotropic && !cfg.ramified {
                q2.rem_euclid(2) == 1 && q1.rem_euclid(2) == 0
            } else {
                q2.rem_euclid(4) == 0 && q1.rem_euclid(4) == 2
            };
            if !ok {
                bad.push(format!("parity constraint on (q1, q2) = ({q1}, {q2}) violated"));
            }
        }
    }

    fn validate_c(&self, bad: &mut Vec<String>) {
        let cfg = &self.cfg;
        for (name, b) in [("beta1", &self.beta1), ("beta2", &self.beta2)] {
            if !b.is_skew() {
                bad.push(format!("{name} must lie in d*F0"));
            }
        }
        if self.beta1.is_zero_to_precision() && self.beta2.is_zero_to_precision() {
            bad.push("both components vanish: zero stratum".into());
        }
        if !distinct_with_unit_difference(cfg, &self.beta1, &self.beta2) {
            bad.push("components not separated: 1 - beta2/beta1 must be a unit".into());
        }
        for (i, b) in [&self.beta1, &self.beta2].into_iter().enumerate() {
            if !b.is_zero_to_precision() {
                if let Ok(Some(v)) = b.val_rel(cfg) {
                    if v.double() >= 0 {
                        bad.push(format!(
                            "component beta{} has level q = 0; twist-normalise first",
                            i + 1
                        ));
                    }
                }
            }
        }
        if self.v2_isotropic {
            if let Some(l0) = self.lambdas.first() {
                if !matches!(is_norm_class(cfg, l0), Ok(true)) {
                    bad.push("middle-vector constant must be a norm".into());
                }
            }
            if !cfg.ramified {
                if let Some(k) = self.lattice_kind {
                    if k == Catalogued::L3 {
                        bad.push("lattice shape must be L1 or L2 for scalar splittings".into());
                    }
                }
            } else if self.lattice_kind.is_some() && self.lattice_kind != Some(Catalogued::L2) {
                bad.push("ramified isotropic shape forces the L2 lattice".into());
            }
        } else if !cfg.ramified {
            if let Ok(lv) = self.lambda_f_vals() {
                if lv != [1, 0, 1] {
                    bad.push(
                        "anisotropic unramified shape needs constants of valuation (1,0,1)".into(),
                    );
                }
            }
        } else if let Ok(lv) = self.lambda_f_vals() {
            if lv != [0, 0, 0] {
                bad.push("anisotropic ramified shape needs unit constants".into());
            } else {
                let aniso = matches!(
                    crate::hermitian::is_isotropic_binary(
                        cfg,
                        &ExtElement::from_base(self.lambdas[1].clone()),
                        &ExtElement::from_base(self.lambdas[2].clone()),
                    ),
                    Ok(false)
                );
                if !aniso {
                    bad.push("plane <v2, v3> must be anisotropic".into());
                }
                let pair_iso = matches!(
                    crate::hermitian::is_isotropic_binary(
                        cfg,
                        &ExtElement::from_base(self.lambdas[0].clone()),
                        &ExtElement::from_base(self.lambdas[2].clone()),
                    ),
                    Ok(true)
                );
                if !pair_iso {
                    bad.push("pair <v1, v3> must be isotropic (reorder v2, v3)".into());
                }
            }
        }
    }

    fn validate_d(&self, bad: &mut Vec<String>) {
        let cfg = &self.cfg;
        let betas = [&self.beta1, &self.beta2, &self.beta3];
        for (i, b) in betas.iter().enumerate() {
            if !b.is_skew() {
                bad.push(format!("beta{} must lie in d*F0", i + 1));
            }
        }
        let zeros = betas.iter().filter(|b| b.is_zero_to_precision()).count();
        if zeros > 1 {
            bad.push("at most one component may vanish".into());
        }
        if self.beta1.is_zero_to_precision() || self.beta2.is_zero_to_precision() {
            bad.push("components must be ordered with beta1, beta2 nonzero".into());
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                if !betas[i].is_zero_to_precision() && !betas[j].is_zero_to_precision()
                    && !distinct_with_unit_difference(cfg, betas[i], betas[j])
                {
                    bad.push(format!(
                        "components beta{}, beta{} not separated: 1 - beta_i/beta_j must be a unit",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        // ordering -n = nu_L1(beta1) <= nu_L2(beta2) <= nu_L3(beta3) <= 0
        if let Ok(qi) = self.q_invariants() {
            if !(qi.q[0] >= qi.q[1] && qi.q[1] >= qi.q[2] && qi.q[2] >= 0) {
                bad.push(format!(
                    "ordering violated: need q1 >= q2 >= q3 >= 0, got {:?}",
                    qi.q
                ));
            }
            if qi.q[1] <= 0 {
                bad.push("second component must have positive level".into());
            }
        }
        // lambda patterns
        match self.lambda_f_vals() {
            Ok(lv) => {
                if cfg.ramified {
                    if lv != [0, 0, 0] {
                        bad.push("ramified shape needs unit constants".into());
                    }
                } else if !lv.iter().all(|&v| v == 0 || v == 1) {
                    bad.push("constants must have valuation 0 or 1".into());
                }
            }
            Err(e) => bad.push(format!("constants: {e}")),
        }
    }

    /// Is the plane W1 = V2 + V3 isotropic (splitting 1+1+1), or V2 (1+2)?
    pub fn plane_isotropic(&self) -> Result<bool, Error> {
        let cfg = &self.cfg;
        match self.tag {
            TypeTag::B | TypeTag::C => Ok(self.v2_isotropic),
            TypeTag::D => crate::hermitian::is_isotropic_binary(
                cfg,
                &ExtElement::from_base(self.lambdas[1].clone()),
                &ExtElement::from_base(self.lambdas[2].clone()),
            ),
            TypeTag::A => Err(Error::UnsupportedConfiguration("no splitting plane".into())),
        }
    }

    /// Realise the stratum in a Witt basis (e1, e0, e-1): returns the space,
    /// beta, the catalogued lattice shape, and the change of basis C whose
    /// columns are the Witt basis vectors in the distinguished basis.
    ///
    /// For the isotropic shapes this is the identity; for orthogonal shapes
    /// the hyperbolic pair is built inside the isotropic plane of the
    /// relevant construction.
    pub fn witt_model(&self) -> Result<WittModel, Error> {
        let cfg = &self.cfg;
        let space = self.space()?;
        let beta = self.beta_matrix()?;
        match (self.tag, self.v2_isotropic) {
            (TypeTag::A, _) | (TypeTag::B | TypeTag::C, true) => {
                let shape = match self.tag {
                    TypeTag::A => None,
                    _ => Some(self.witt_shape()?),
                };
                Ok(WittModel {
                    space,
                    beta,
                    shape,
                    change: Matrix::identity(cfg, 3),
                })
            }
            (TypeTag::B | TypeTag::C, false) | (TypeTag::D, _) => {
                // choose the hyperbolic pair indices and the middle vector
                let (i1, i3, mid) = match self.tag {
                    TypeTag::B | TypeTag::C => (0usize, 2usize, 1usize),
                    TypeTag::D => {
                        if self.plane_isotropic()? {
                            (1, 2, 0)
                        } else {
                            // pair v1 with whichever of v2, v3 makes an
                            // isotropic plane
                            let l = &self.lambdas;
                            let pick = |j: usize| -> Result<bool, Error> {
                                crate::hermitian::is_isotropic_binary(
                                    cfg,
                                    &ExtElement::from_base(l[0].clone()),
                                    &ExtElement::from_base(l[j].clone()),
                                )
                            };
                            if pick(2)? {
                                (0, 2, 1)
                            } else if pick(1)? {
                                (0, 1, 2)
                            } else {
                                return Err(Error::UnsupportedConfiguration(
                                    "no isotropic coordinate plane through v1".into(),
                                ));
                            }
                        }
                    }
                    TypeTag::A => unreachable!(),
                };
                let l1 = &self.lambdas[i1];
                let l3 = &self.lambdas[i3];
                let pair = HermitianSpace::diagonal(cfg, &[l1.clone(), l3.clone()]);
                let v1f = l1.valuation()?.finite().ok_or(Error::IndeterminateValuation)?;
                let mode = if !cfg.ramified && v1f == 1 {
                    crate::hermitian::WittMode::Unram
                } else {
                    crate::hermitian::WittMode::Ram
                };
                let (e1, em1) = crate::hermitian::witt_from_anisotropic_pair(cfg, &pair, mode)?;
                // columns of C: e1, e_mid, e-1 in the distinguished basis
                let mut c = Matrix::zero(3);
                c.0[i1][0] = e1.0[0].clone();
                c.0[i3][0] = e1.0[1].clone();
                c.0[mid][1] = ExtElement::one(cfg);
                c.0[i1][2] = em1.0[0].clone();
                c.0[i3][2] = em1.0[1].clone();
                let cinv = c.inv(cfg)?;
                let new_beta = cinv.mul(cfg, &beta).mul(cfg, &c);
                // gram in the new basis: antidiag(1, lambda_mid, 1)
                let one = ExtElement::one(cfg);
                let zero = ExtElement::zero();
                let new_space = HermitianSpace::new(
                    vec![
                        vec![zero.clone(), zero.clone(), one.clone()],
                        vec![zero.clone(), ExtElement::from_base(self.lambdas[mid].clone()), zero.clone()],
                        vec![one, zero.clone(), zero],
                    ],
                    BasisKind::Witt,
                    cfg,
                )?;
                Ok(WittModel {
                    space: new_space,
                    beta: new_beta,
                    shape: Some(self.witt_shape()?),
                    change: c,
                })
            }
        }
    }

    /// Catalogued shape of the attached sequence seen in the Witt basis.
    pub fn witt_shape(&self) -> Result<Catalogued, Error> {
        let cfg = &self.cfg;
        match (self.tag, self.v2_isotropic, cfg.ramified) {
            (TypeTag::A, ..) => Err(Error::UnsupportedConfiguration(
                "cubic shape has no catalogued sequence".into(),
            )),
            (TypeTag::B, true, false) => Ok(Catalogued::L3),
            (TypeTag::B, true, true) => Ok(Catalogued::L2),
            (TypeTag::B | TypeTag::C, false, false) => Ok(Catalogued::L2),
            (TypeTag::B | TypeTag::C, false, true) => Ok(Catalogued::L1),
            (TypeTag::C, true, false) => Ok(self.lattice_kind.unwrap_or(Catalogued::L2)),
            (TypeTag::C, true, true) => Ok(Catalogued::L2),
            (TypeTag::D, _, true) => Ok(Catalogued::L1),
            (TypeTag::D, _, false) => {
                // unit pair -> L1 (duplicated o^3), p-level pair -> L2
                let lv = self.lambda_f_vals()?;
                if self.plane_isotropic()? {
                    Ok(if lv[1] == 0 { Catalogued::L1 } else { Catalogued::L2 })
                } else {
                    Ok(Catalogued::L2)
                }
            }
        }
    }
}

/// A stratum re-expressed in a Witt basis.
#[derive(Clone, Debug)]
pub struct WittModel {
    pub space: HermitianSpace,
    pub beta: Matrix,
    pub shape: Option<Catalogued>,
    pub change: Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SquareClass {
    Square,
    NonSquareEvenVal,
    OddVal,
}

/// Square class of a nonzero element of F: used to recognise the extension
/// F[sqrt(x)] as split / unramified / ramified.
pub fn square_class_in_f(cfg: &PrimeConfig, x: &ExtElement) -> Result<SquareClass, Error> {
    let v = match x.val_f(cfg)? {
        Valuation::Infinite => return Err(Error::IndeterminateValuation),
        Valuation::Finite(v) => v,
    };
    if v.rem_euclid(2) == 1 {
        return Ok(SquareClass::OddVal);
    }
    // reduce to a unit and test the residue in k_F
    let unit = if cfg.ramified {
        let mut y = x.clone();
        let pi_inv = ExtElement::delta(cfg).inv(cfg)?;
        for _ in 0..v.unsigned_abs() {
            y = if v >= 0 { y.mul(cfg, &pi_inv) } else { y.mul(cfg, &ExtElement::delta(cfg)) };
        }
        y
    } else {
        x.mul_base(cfg, &BaseElement::pi0_pow(cfg, -v))
    };
    if cfg.ramified {
        // k_F = F_p via the first coordinate
        let r = unit.a.unit_residue(cfg)?;
        let va = unit.a.valuation()?.finite().ok_or(Error::IndeterminateValuation)?;
        if va != 0 {
            return Err(Error::Internal("unit normalisation failed".into()));
        }
        Ok(if legendre(r, cfg.p) == 1 { SquareClass::Square } else { SquareClass::NonSquareEvenVal })
    } else {
        // k_F = F_{p^2} = F_p[dbar], dbar^2 = w
        let p = cfg.p;
        let ra = residue_of(cfg, &unit.a)?;
        let rb = residue_of(cfg, &unit.b)?;
        if ra == 0 && rb == 0 {
            return Err(Error::Internal("unit normalisation failed".into()));
        }
        Ok(if fp2_is_square(p, cfg.nonsquare_unit, ra, rb) {
            SquareClass::Square
        } else {
            SquareClass::NonSquareEvenVal
        })
    }
}

fn residue_of(cfg: &PrimeConfig, x: &BaseElement) -> Result<u64, Error> {
    match x.valuation() {
        Ok(Valuation::Infinite) => Ok(0),
        Ok(Valuation::Finite(v)) => {
            if v > 0 {
                Ok(0)
            } else if v == 0 {
                x.unit_residue(cfg)
            } else {
                Err(Error::Internal("negative valuation residue".into()))
            }
        }
        Err(e) => Err(e),
    }
}

/// Squareness of a + b*dbar in F_{p^2} with dbar^2 = w: since
/// z^(p+1) = Nr(z), z is a square iff Nr(z) = a^2 - w b^2 is one in F_p.
fn fp2_is_square(p: u64, w: u64, a: u64, b: u64) -> bool {
    let aa = (a as u128 * a as u128 % p as u128) as u64;
    let wb2 = (w as u128 * b as u128 % p as u128 * b as u128 % p as u128) as u64;
    let norm = (aa + p - wb2) % p;
    if norm == 0 {
        return a % p == 0 && b % p == 0;
    }
    pow_mod(norm, (p - 1) / 2, p) == 1
}

/// beta_i != beta_j with nu(beta_i - beta_j) = min(nu beta_i, nu beta_j):
/// the residues at the common level differ, i.e. 1 - beta_i beta_j^{-1} is a
/// unit whenever the valuations agree.
pub fn distinct_with_unit_difference(cfg: &PrimeConfig, x: &ExtElement, y: &ExtElement) -> bool {
    if x.is_zero_to_precision() && y.is_zero_to_precision() {
        return false;
    }
    if x.is_zero_to_precision() || y.is_zero_to_precision() {
        return true;
    }
    let (vx, vy) = match (x.val_f(cfg), y.val_f(cfg)) {
        (Ok(Valuation::Finite(a)), Ok(Valuation::Finite(b))) => (a, b),
        _ => return false,
    };
    if vx != vy {
        return true;
    }
    match x.sub(cfg, y).val_f(cfg) {
        Ok(Valuation::Finite(v)) => v == vx,
        _ => false,
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

    fn skew(cfg: &PrimeConfig, k: i64, u: i64) -> ExtElement {
        // d * u * p^k
        ExtElement::delta_times(cfg, BaseElement::from_i64(cfg, u).mul(cfg, &BaseElement::pi0_pow(cfg, k)))
    }

    pub(crate) fn sample_type_d_unram(cfg: &PrimeConfig) -> Stratum {
        Stratum {
            cfg: cfg.clone(),
            tag: TypeTag::D,
            v2_isotropic: true,
            lambdas: vec![
                BaseElement::one(cfg),
                BaseElement::one(cfg),
                BaseElement::one(cfg),
            ],
            beta1: skew(cfg, -3, 1),
            beta2: skew(cfg, -1, 1),
            beta3: skew(cfg, -1, 2),
            beta_block: None,
            beta_full: None,
            lattice_kind: None,
        }
    }

    #[test]
    fn valid_type_d() {
        let cfg = ucfg();
        let s = sample_type_d_unram(&cfg);
        assert!(s.validate().is_empty(), "{:?}", s.validate());
        let qi = s.q_invariants().unwrap();
        assert_eq!(qi.q, vec![6, 2, 2]);
        assert_eq!(qi.n, 6);
    }

    #[test]
    fn type_d_rejects_equal_components() {
        let cfg = ucfg();
        let mut s = sample_type_d_unram(&cfg);
        s.beta3 = s.beta2.clone();
        let v = s.validate();
        assert!(v.iter().any(|m| m.contains("not separated")), "{v:?}");
    }

    #[test]
    fn type_d_rejects_non_skew() {
        let cfg = ucfg();
        let mut s = sample_type_d_unram(&cfg);
        s.beta1 = ExtElement::from_i64(&cfg, 3);
        let v = s.validate();
        assert!(v.iter().any(|m| m.contains("d*F0") || m.contains("skewness")), "{v:?}");
    }

    #[test]
    fn type_d_ramified_q_pattern() {
        let cfg = rcfg();
        // beta_i = d * u * p^k: nu_F = 1 + 2k odd, q = -2 nu_F = 4|k|... check 2 mod 4
        let s = Stratum {
            cfg: cfg.clone(),
            tag: TypeTag::D,
            v2_isotropic: true,
            lambdas: vec![
                BaseElement::one(&cfg),
                BaseElement::one(&cfg),
                BaseElement::from_i64(&cfg, 4),
            ],
            beta1: skew(&cfg, -2, 1),
            beta2: skew(&cfg, -1, 1),
            beta3: skew(&cfg, -1, 2),
            beta_block: None,
            beta_full: None,
            lattice_kind: None,
        };
        let qi = s.q_invariants().unwrap();
        // nu_F(beta1) = 1 - 4 = -3, q1 = 6; nu_F(beta2) = -1, q2 = 2
        assert_eq!(qi.q, vec![6, 2, 2]);
        assert!(s.validate().is_empty(), "{:?}", s.validate());
    }

    pub(crate) fn sample_type_b_unram_iso(cfg: &PrimeConfig, m1: i64, m2: i64) -> Stratum {
        // q1 = 4 m1 (scalar on e0), q2 = 4 m2 + 2 (Witt-pair block)
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
            beta_block: Some([
                [ExtElement::zero(), b],
                [c, ExtElement::zero()],
            ]),
            beta_full: None,
            lattice_kind: None,
        }
    }

    #[test]
    fn type_b_unram_iso_q_values() {
        let cfg = ucfg();
        let s = sample_type_b_unram_iso(&cfg, 1, 1);
        assert!(s.validate().is_empty(), "{:?}", s.validate());
        let qi = s.q_invariants().unwrap();
        assert_eq!(qi.q, vec![4, 6]);
        assert_eq!(qi.n, 6);
        assert_eq!(qi.period, 4);
    }

    #[test]
    fn type_b_parity_enforced() {
        let cfg = ucfg();
        // shift the block so q2 = 4 m2 (wrong parity for the isotropic shape)
        let mut s = sample_type_b_unram_iso(&cfg, 1, 1);
        s.beta_block = Some([
            [ExtElement::zero(), ExtElement::delta_times(&cfg, BaseElement::pi0_pow(&cfg, -1))],
            [ExtElement::delta_times(&cfg, BaseElement::pi0_pow(&cfg, -1)), ExtElement::zero()],
        ]);
        let v = s.validate();
        assert!(!v.is_empty());
    }

    #[test]
    fn type_c_level_zero_flagged() {
        let cfg = ucfg();
        let s = Stratum {
            cfg: cfg.clone(),
            tag: TypeTag::C,
            v2_isotropic: true,
            lambdas: vec![BaseElement::one(&cfg)],
            beta1: skew(&cfg, -2, 1),
            beta2: skew(&cfg, 0, 1), // unit level: q2 = 0
            beta3: ExtElement::zero(),
            beta_block: None,
            beta_full: None,
            lattice_kind: None,
        };
        let v = s.validate();
        assert!(v.iter().any(|m| m.contains("q = 0")), "{v:?}");
    }

    #[test]
    fn cubic_certificate() {
        let cfg = ucfg();
        // beta: e1 -> c e-1 (lower left), e0 -> a..; cyclic shape with
        // beta^3 = -N(a) c, nu_F = -1: single slope, gcd(1,3) = 1
        let mut m = Matrix::zero(3);
        m.0[1][0] = ExtElement::one(&cfg); // column e1 -> e0
        m.0[2][1] = ExtElement::one(&cfg).neg(&cfg); // e0 -> -e-1 (sigma-adjusted)
        m.0[0][2] = ExtElement::delta_times(&cfg, BaseElement::pi0_pow(&cfg, -1));
        let s = Stratum {
            cfg: cfg.clone(),
            tag: TypeTag::A,
            v2_isotropic: true,
            lambdas: vec![],
            beta1: ExtElement::zero(),
            beta2: ExtElement::zero(),
            beta3: ExtElement::zero(),
            beta_block: None,
            beta_full: Some(m),
            lattice_kind: None,
        };
        let v = s.validate();
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn d_block_valuations_via_sequence() {
        let cfg = rcfg();
        let s = Stratum {
            cfg: cfg.clone(),
            tag: TypeTag::D,
            v2_isotropic: true,
            lambdas: vec![BaseElement::one(&cfg), BaseElement::one(&cfg), BaseElement::one(&cfg)],
            beta1: skew(&cfg, -1, 1),
            beta2: skew(&cfg, 0, 1),
            beta3: ExtElement::zero(),
            beta_block: None,
            beta_full: None,
            lattice_kind: None,
        };
        // nu_{F/F0}(beta1) = -1/2, e(L1) = 2 => q1 = 2
        assert_eq!(s.beta1.val_rel(&cfg).unwrap(), Some(HalfInt(-1)));
        let qi = s.q_invariants().unwrap();
        assert_eq!(qi.q[0], 2);
    }
}
