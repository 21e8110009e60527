//! Metric scenes: a domain, a curvature measure and a harmonic term, possibly
//! wrapped by affine or polynomial changes of coordinates.

use crate::error::{Error, Result};
use crate::harmonic::{ComplexPoly, HarmonicPoly};
use crate::measure::{Domain, SignedMeasure};
use crate::potential::potential_eval;
use crate::Point;
use std::f64::consts::PI;

/// A change of coordinates `g` with `λ'(z) = c |g'(z)|² λ(g(z))`.
#[derive(Debug, Clone, PartialEq)]
pub enum Derivation {
    /// `g(z) = a z + b`, extra constant factor `factor`.
    Affine { a: Point, b: Point, factor: f64 },
    /// `g = f` for a complex polynomial `f`.
    Conformal { f: ComplexPoly },
}

impl Derivation {
    fn map(&self, z: Point) -> Point {
        match self {
            Derivation::Affine { a, b, .. } => a * z + b,
            Derivation::Conformal { f } => f.eval(z),
        }
    }

    fn log_factor(&self, z: Point) -> f64 {
        match self {
            Derivation::Affine { a, factor, .. } => (factor * a.norm_sqr()).ln(),
            Derivation::Conformal { f } => {
                let d = f.eval_with_derivative(z).1.norm_sqr();
                d.ln()
            }
        }
    }

    fn preimages(&self, w: Point) -> Vec<Point> {
        match self {
            Derivation::Affine { a, b, .. } => vec![(w - b) / a],
            Derivation::Conformal { f } => f.solve(w),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointClass {
    Finite,
    Infinity,
    Ambiguous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricScene {
    pub domain: Domain,
    pub measure: SignedMeasure,
    pub harmonic: HarmonicPoly,
    derivations: Vec<Derivation>,
    // Atoms pulled back to the current coordinates: (position, weight).
    singular: Vec<(Point, f64)>,
}

impl MetricScene {
    pub fn new(domain: Domain, measure: SignedMeasure, harmonic: HarmonicPoly) -> Result<Self> {
        for c in &harmonic.poly.coeffs {
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::InvalidInput("harmonic coefficients must be finite".into()));
            }
        }
        let singular = measure.atoms().iter().map(|a| (a.pos, a.weight)).collect();
        Ok(Self {
            domain,
            measure,
            harmonic,
            derivations: Vec::new(),
            singular,
        })
    }

    /// Flat scene `λ ≡ 1` on the given domain.
    pub fn flat(domain: Domain) -> Self {
        Self::new(domain, SignedMeasure::empty(), HarmonicPoly::zero()).expect("flat scene is valid")
    }

    /// Wrap `self` by a further change of coordinates; `domain` is the
    /// domain of the new coordinates.
    pub fn derive(&self, derivation: Derivation, domain: Domain) -> Result<Self> {
        if let Derivation::Affine { a, factor, .. } = &derivation {
            if a.norm() == 0.0 || !(*factor > 0.0 && factor.is_finite()) {
                return Err(Error::InvalidInput("affine derivation needs a != 0 and a positive factor".into()));
            }
        }
        let singular = self
            .singular
            .iter()
            .flat_map(|(p, w)| derivation.preimages(*p).into_iter().map(move |q| (q, *w)))
            .collect();
        let mut derivations = self.derivations.clone();
        derivations.push(derivation);
        Ok(Self {
            domain,
            measure: self.measure.clone(),
            harmonic: self.harmonic.clone(),
            derivations,
            singular,
        })
    }

    pub fn is_derived(&self) -> bool {
        !self.derivations.is_empty()
    }

    pub fn derivations(&self) -> &[Derivation] {
        &self.derivations
    }

    /// Atoms in the current coordinates as `(position, weight)`.
    pub fn singularities(&self) -> &[(Point, f64)] {
        &self.singular
    }

    /// Maps `z` to base coordinates, returning the accumulated `ln` of the
    /// Jacobian factors.
    pub fn to_base(&self, z: Point) -> (Point, f64) {
        let mut w = z;
        let mut log = 0.0;
        for d in self.derivations.iter().rev() {
            log += d.log_factor(w);
            w = d.map(w);
        }
        (w, log)
    }

    /// `p(ω) + h` in base coordinates.
    pub fn base_potential(&self, w: Point) -> f64 {
        potential_eval(w, &self.measure) + self.harmonic.h(w)
    }

    /// `ln λ(z)`; `+∞` at positive atoms, `-∞` at negative ones, NaN if undefined.
    pub fn log_lambda(&self, z: Point) -> f64 {
        let (w, log) = self.to_base(z);
        let p = self.base_potential(w);
        if log == f64::NEG_INFINITY {
            return if p == f64::NEG_INFINITY { f64::NAN } else { f64::NEG_INFINITY };
        }
        log - 2.0 * p
    }

    pub fn lambda(&self, z: Point) -> f64 {
        self.log_lambda(z).exp()
    }

    /// `sqrt(λ(z))`, the line-element density.
    pub fn sqrt_lambda(&self, z: Point) -> f64 {
        (0.5 * self.log_lambda(z)).exp()
    }

    /// Weight of the atom at `z` (current coordinates), 0 if none.
    pub fn atom_weight_at(&self, z: Point) -> f64 {
        let tol = 1e-12 * (1.0 + z.norm());
        self.singular
            .iter()
            .filter(|(p, _)| (p - z).norm() <= tol)
            .map(|(_, w)| *w)
            .sum()
    }

    /// Rewrite a scene whose derivations are all real-scale affine maps as an
    /// underived scene with the same factor. With `g(z) = a z + b`,
    /// `p(g(z); ω) = p(z; g⁻¹ω) + ω(C) ln a / 2π`, and the constants go into `h`.
    pub fn flatten(&self) -> Result<MetricScene> {
        let (mut a, mut b, mut log_c) = (1.0, Point::new(0.0, 0.0), 0.0);
        for d in &self.derivations {
            match d {
                Derivation::Affine { a: da, b: db, factor } if da.im == 0.0 && da.re > 0.0 => {
                    b += a * db;
                    a *= da.re;
                    log_c += factor.ln();
                }
                _ => {
                    return Err(Error::InvalidInput(
                        "only scenes derived by real positive affine maps can be flattened".into(),
                    ))
                }
            }
        }
        let measure = self.measure.pushed_forward_affine(b, a);
        let shift = self.measure.total_mass() * a.ln() / (2.0 * PI) - 0.5 * (log_c + 2.0 * a.ln());
        let harmonic = self.harmonic.compose_affine(Point::new(a, 0.0), b, shift);
        MetricScene::new(self.domain, measure, harmonic)
    }

    /// Finite / infinity / ambiguous classification of a point.
    pub fn classify_point(&self, z: Point) -> PointClass {
        let w = self.atom_weight_at(z);
        let two_pi = 2.0 * PI;
        let eq = (w - two_pi).abs() <= 1e-12 * two_pi;
        if w < two_pi && !eq {
            PointClass::Finite
        } else if !eq || self.measure.is_positive() {
            PointClass::Infinity
        } else {
            PointClass::Ambiguous
        }
    }
}

/// `λ(z) = exp(-2(p(z; ω) + h(z)))` through any derivation wrapper.
pub fn lambda_eval(z: Point, scene: &MetricScene) -> f64 {
    scene.lambda(z)
}

/// Conformal pullback `λ₁ = |f'|² λ ∘ f` onto `target_domain`.
///
/// Rejects `f` whose derivative vanishes on (a slight enlargement of) the
/// target domain, and spot-checks injectivity and that `f` maps the target
/// domain into the source domain.
pub fn pullback(scene: &MetricScene, f: &ComplexPoly, target_domain: Domain) -> Result<MetricScene> {
    if f.degree() == 0 {
        return Err(Error::InvalidInput("pullback needs a non-constant polynomial".into()));
    }
    let margin = 1.0 + 1e-3;
    for root in f.derivative().solve(Point::new(0.0, 0.0)) {
        if (root - target_domain.center).norm() < target_domain.radius * margin {
            return Err(Error::VanishingDerivative(root));
        }
    }
    let n = 12;
    for i in 0..n {
        for j in 0..(4 * n) {
            let r = target_domain.radius * (i as f64 + 0.5) / n as f64;
            let z = target_domain.center + Point::from_polar(r, 2.0 * PI * (j as f64 + 0.5) / (4 * n) as f64);
            let w = f.eval(z);
            if !scene.domain.contains(w) {
                return Err(Error::Precondition(format!(
                    "f maps ({}, {}) outside the source domain",
                    z.re, z.im
                )));
            }
            for other in f.solve(w) {
                if (other - z).norm() > 1e-8 * (1.0 + z.norm()) && target_domain.contains(other) {
                    return Err(Error::Precondition("f is not injective on the target domain".into()));
                }
            }
        }
    }
    scene.derive(Derivation::Conformal { f: f.clone() }, target_domain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{Atom, CircleDensity};

    fn c(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn dom() -> Domain {
        Domain::new(c(0.0, 0.0), 10.0).unwrap()
    }

    #[test]
    fn lambda_examples() {
        let flat = MetricScene::flat(dom());
        assert_eq!(flat.lambda(c(0.3, -2.0)), 1.0);
        let cone = MetricScene::new(dom(), SignedMeasure::atom(c(0.0, 0.0), 2.0 * PI).unwrap(), HarmonicPoly::zero()).unwrap();
        assert!((cone.lambda(c(2.0, 0.0)) - 0.25).abs() < 1e-15);
        assert_eq!(cone.lambda(c(0.0, 0.0)), f64::INFINITY);
        let neg = MetricScene::new(dom(), SignedMeasure::atom(c(0.0, 0.0), -2.0 * PI).unwrap(), HarmonicPoly::zero()).unwrap();
        assert_eq!(neg.lambda(c(0.0, 0.0)), 0.0);
    }

    #[test]
    fn cone_factor_is_power_of_distance() {
        let w0 = 1.3;
        let zeta = c(0.4, -0.2);
        let s = MetricScene::new(dom(), SignedMeasure::atom(zeta, w0).unwrap(), HarmonicPoly::zero()).unwrap();
        for z in [c(1.0, 1.0), c(-0.5, 0.1), c(0.41, -0.2)] {
            let expect = (z - zeta).norm().powf(-w0 / PI);
            assert!((s.lambda(z) / expect - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn jensen_upper_bound_for_negative_part() {
        // λ ≤ (2R)^{ω⁻(C)/π} e^{-2h} for purely negative measures supported
        // in a disc of radius R containing z.
        let m = SignedMeasure::from_atoms([(c(0.5, 0.0), -1.0), (c(-0.3, 0.4), -2.0)]).unwrap();
        let s = MetricScene::new(Domain::new(c(0.0, 0.0), 1.0).unwrap(), m.clone(), HarmonicPoly::zero()).unwrap();
        let bound = 2f64.powf(3.0 / PI);
        for z in [c(0.0, 0.0), c(0.9, 0.0), c(-0.5, -0.5), c(0.2, 0.7)] {
            assert!(s.lambda(z) <= bound);
        }
    }

    #[test]
    fn classify_examples() {
        let s = MetricScene::new(dom(), SignedMeasure::atom(c(0.0, 0.0), 3.0 * PI).unwrap(), HarmonicPoly::zero()).unwrap();
        assert_eq!(s.classify_point(c(0.0, 0.0)), PointClass::Infinity);
        let s = MetricScene::new(dom(), SignedMeasure::atom(c(0.0, 0.0), 2.0 * PI).unwrap(), HarmonicPoly::zero()).unwrap();
        assert_eq!(s.classify_point(c(0.0, 0.0)), PointClass::Infinity);
        assert_eq!(s.classify_point(c(1.0, 0.0)), PointClass::Finite);
        let signed = SignedMeasure::new(
            vec![Atom { pos: c(0.0, 0.0), weight: 2.0 * PI }],
            vec![],
            vec![CircleDensity { center: c(0.0, 0.0), radius: 1.0, mass: -1.0 }],
            vec![],
        )
        .unwrap();
        let s = MetricScene::new(dom(), signed, HarmonicPoly::zero()).unwrap();
        assert_eq!(s.classify_point(c(0.0, 0.0)), PointClass::Ambiguous);
    }

    #[test]
    fn affine_and_polynomial_pullbacks() {
        let flat = MetricScene::flat(dom());
        let f = ComplexPoly::new(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let p = pullback(&flat, &f, Domain::new(c(0.0, 0.0), 1.0).unwrap()).unwrap();
        assert!((p.lambda(c(0.3, 0.2)) - 4.0).abs() < 1e-14);

        let sq = ComplexPoly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            pullback(&flat, &sq, Domain::new(c(0.0, 0.0), 1.0).unwrap()),
            Err(Error::VanishingDerivative(_))
        ));
        let s = MetricScene::new(dom(), SignedMeasure::atom(c(0.0, 1.0), 1.0).unwrap(), HarmonicPoly::zero()).unwrap();
        let p = pullback(&s, &sq, Domain::new(c(1.0, 0.5), 0.4).unwrap()).unwrap();
        let z = c(0.9, 0.6);
        let expect = 4.0 * z.norm_sqr() * s.lambda(z * z);
        assert!((p.lambda(z) / expect - 1.0).abs() < 1e-13);
        // the atom at i pulls back to (1+i)/√2
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.atom_weight_at(c(r, r)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flatten_matches_affine_wrapper() {
        let m = SignedMeasure::new(
            vec![Atom { pos: c(0.3, 0.1), weight: 1.2 }, Atom { pos: c(-1.0, 2.0), weight: -0.7 }],
            vec![],
            vec![CircleDensity { center: c(1.0, -1.0), radius: 0.5, mass: 0.8 }],
            vec![],
        )
        .unwrap();
        let s = MetricScene::new(dom(), m, HarmonicPoly::new(vec![c(0.1, 0.0), c(0.2, -0.3), c(0.05, 0.02)])).unwrap();
        let d = s
            .derive(Derivation::Affine { a: c(0.5, 0.0), b: c(0.2, -0.4), factor: 3.0 }, Domain::new(c(0.0, 0.0), 4.0).unwrap())
            .unwrap()
            .derive(Derivation::Affine { a: c(2.5, 0.0), b: c(-0.1, 0.3), factor: 0.7 }, Domain::new(c(0.0, 0.0), 1.0).unwrap())
            .unwrap();
        let f = d.flatten().unwrap();
        assert!(!f.is_derived());
        for z in [c(0.1, 0.2), c(-0.5, 0.3), c(0.7, -0.6)] {
            assert!((f.log_lambda(z) - d.log_lambda(z)).abs() < 1e-12, "{z}");
        }
        let conformal = s.derive(Derivation::Conformal { f: ComplexPoly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]) }, dom()).unwrap();
        assert!(conformal.flatten().is_err());
    }
}
