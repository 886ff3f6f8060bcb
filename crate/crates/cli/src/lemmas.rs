//! The lemma-verification suites behind `verify-lemmas`: exercises the exact
//! identities and inequalities on randomly sampled inputs and sweeps the
//! depth-inequality case tables. Returns a list of counterexample
//! descriptions; an empty list means every suite passed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use unitary_strata::classifier::{
    char_nontrivial, claim_inequalities, conjugation_identity, random_group_element,
    shallowness, shallowness_stable, sweep_depth_inequalities, valuation_separation,
};
use unitary_strata::fuzz::{sample_isotropic_coords, sample_stratum};
use unitary_strata::hermitian::{UnipotentSide, Vector, WeylElement};
use unitary_strata::padic::{char_level, BaseElement, ExtElement, PrimeConfig};
use unitary_strata::strata::TypeTag;
use unitary_strata::xbeta::{criterion_status, XbetaStatus};
use unitary_strata::Error;

pub fn run_all(seed: u64, trials: u64) -> Vec<String> {
    let mut failures = Vec::new();
    failures.extend(conjugation_suite(seed, trials));
    failures.extend(char_identity_suite(seed, trials));
    failures.extend(separation_suite(seed, trials));
    failures.extend(depth_suite(seed, trials));
    let sweep = sweep_depth_inequalities(8, 10);
    if !sweep.is_empty() {
        failures.extend(sweep.into_iter().take(5).map(|s| format!("depth sweep: {s}")));
    }
    failures
}

fn configs() -> Vec<PrimeConfig> {
    let mut out = Vec::new();
    for p in [3u64, 5, 7] {
        for ram in [false, true] {
            out.push(if ram {
                PrimeConfig::ramified(p, 24).unwrap()
            } else {
                PrimeConfig::unramified(p, 24).unwrap()
            });
        }
    }
    out
}

fn conjugation_suite(seed: u64, trials: u64) -> Vec<String> {
    let mut bad = Vec::new();
    for cfg in configs() {
        let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xc0de);
        for t in 0..trials {
            let x = ExtElement::new(
                BaseElement::from_i64(&cfg, rng.gen_range(-30..30)),
                BaseElement::from_i64(&cfg, rng.gen_range(-30..30)),
            );
            let y = unitary_strata::hermitian::unipotent_d(
                &cfg,
                &x,
                &BaseElement::from_i64(&cfg, rng.gen_range(-30..30)),
            );
            let a = ExtElement::delta_times(&cfg, BaseElement::from_i64(&cfg, rng.gen_range(-30..30)));
            if let Err(e) = conjugation_identity(&cfg, &x, &y, &a) {
                bad.push(format!(
                    "conjugation identity failed (p={}, ramified={}, trial {t}): {e}",
                    cfg.p, cfg.ramified
                ));
            }
        }
    }
    bad
}

fn char_identity_suite(seed: u64, trials: u64) -> Vec<String> {
    let mut bad = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xabcd);
    let mut done = 0u64;
    while done < trials {
        let p = [3u64, 5, 7][rng.gen_range(0..3)];
        let ram = rng.gen_bool(0.5);
        let tag = [TypeTag::B, TypeTag::C, TypeTag::D][rng.gen_range(0..3)];
        let s = sample_stratum(&mut rng, p, ram, tag);
        if s.witt_model().is_err() {
            continue;
        }
        let g = random_group_element(&s.cfg, &mut rng, rng.gen_range(1..4));
        let side = if rng.gen_bool(0.5) { UnipotentSide::Upper } else { UnipotentSide::Lower };
        // compute the exact threshold and probe both sides of it
        let model = s.witt_model().unwrap();
        let e = Vector::basis(&s.cfg, 3, if side == UnipotentSide::Upper { 0 } else { 2 });
        let ge = g.0.apply(&s.cfg, &e);
        let bge = model.beta.apply(&s.cfg, &ge);
        let h = model.space.h_eval(&s.cfg, &ge, &bge);
        let dh = ExtElement::delta(&s.cfg).mul(&s.cfg, &h);
        if dh.is_zero_to_precision() {
            continue;
        }
        let level = match char_level(&dh.a) {
            Ok(l) => l,
            Err(_) => continue,
        };
        match (
            char_nontrivial(&g, &s, level, side),
            char_nontrivial(&g, &s, level + 1, side),
        ) {
            (Ok(true), Ok(false)) => {}
            (a, b) => bad.push(format!(
                "character threshold mismatch (p={p}, ramified={ram}, {tag:?}): at level {level} got {a:?}/{b:?}"
            )),
        }
        done += 1;
    }
    bad
}

fn separation_suite(seed: u64, trials: u64) -> Vec<String> {
    let mut bad = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5e9a);
    let mut done = 0u64;
    let mut attempts = 0u64;
    while done < trials && attempts < trials * 200 {
        attempts += 1;
        let p = [3u64, 5, 7][rng.gen_range(0..3)];
        let ram = rng.gen_bool(0.5);
        let s = sample_stratum(&mut rng, p, ram, TypeTag::D);
        match criterion_status(&s) {
            Ok((XbetaStatus::Empty, _)) => {}
            _ => continue,
        }
        let Some((a, b, c)) = sample_isotropic_coords(&mut rng, &s) else { continue };
        match valuation_separation(&s, (&a, &b, &c)) {
            Ok((lhs, rhs)) => {
                if lhs != rhs {
                    bad.push(format!(
                        "separation mismatch (p={p}, ramified={ram}): lhs {lhs} != min {rhs}"
                    ));
                }
                done += 1;
            }
            Err(Error::HypothesisViolated(_)) => continue,
            Err(e) => bad.push(format!("separation error (p={p}, ramified={ram}): {e}")),
        }
    }
    if done < trials {
        bad.push(format!("separation suite: only {done}/{trials} tuples sampled"));
    }
    bad
}

fn depth_suite(seed: u64, trials: u64) -> Vec<String> {
    let mut bad = Vec::new();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xdeed);
    let mut done = 0u64;
    let mut attempts = 0u64;
    while done < trials && attempts < trials * 300 {
        attempts += 1;
        let p = [3u64, 5, 7][rng.gen_range(0..3)];
        let ram = rng.gen_bool(0.5);
        let tag = if rng.gen_bool(0.5) { TypeTag::C } else { TypeTag::D };
        let s = sample_stratum(&mut rng, p, ram, tag);
        if !s.plane_isotropic().unwrap_or(false) {
            continue;
        }
        if tag == TypeTag::D {
            match criterion_status(&s) {
                Ok((XbetaStatus::Empty, _)) => {}
                _ => continue,
            }
        }
        let w = if rng.gen_bool(0.5) { WeylElement::Id } else { WeylElement::W };
        let k = rng.gen_range(0..=5);
        let x = ExtElement::new(
            BaseElement::from_i64(&s.cfg, rng.gen_range(1..p as i64)),
            BaseElement::zero(),
        )
        .mul_base(&s.cfg, &BaseElement::pi0_pow(&s.cfg, k));
        let (d, stable) = match (shallowness(&s, w, &x), shallowness_stable(&s, w)) {
            (Ok(d), Ok(st)) => (d, st),
            _ => continue,
        };
        if tag == TypeTag::C && d <= stable {
            continue;
        }
        match claim_inequalities(&s, w, &x) {
            Ok((lhs, rhs)) => {
                if lhs > rhs {
                    bad.push(format!(
                        "depth inequality violated (p={p}, ramified={ram}, {tag:?}, w={w:?}): {lhs} > {rhs}"
                    ));
                }
                done += 1;
            }
            Err(Error::HypothesisViolated(_)) => continue,
            Err(e) => bad.push(format!("depth inequality error (p={p}, ramified={ram}): {e}")),
        }
    }
    if done < trials {
        bad.push(format!("depth suite: only {done}/{trials} instances sampled"));
    }
    bad
}
