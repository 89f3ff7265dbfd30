//! Exact third-order jets of scalar spacetime fields.
//!
//! A [`Jet`] stores the value of a field and all of its partial derivatives
//! with respect to `(t, x1, x2, x3)` up to order three at one point. Jets
//! form a differential algebra: sums, Leibniz products and chain-rule
//! composition are exact, so vector fields with non-constant coefficients
//! (`L_a`, `Omega_ab`, `L_0`, the good derivatives `G_a`, the
//! semi-hyperboloidal frame) can be applied without any discretization.

use core::ops::{Add, Mul, Neg, Sub};

use rand::Rng;

use crate::error::{Error, Result};
use crate::math;

/// A point `(t, x)` of Minkowski spacetime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub t: f64,
    pub x: [f64; 3],
}

impl SpacetimePoint {
    pub const fn new(t: f64, x: [f64; 3]) -> Self {
        Self { t, x }
    }

    pub fn r(&self) -> f64 {
        math::sqrt(self.x[0] * self.x[0] + self.x[1] * self.x[1] + self.x[2] * self.x[2])
    }

    /// Membership in `K = {t >= 2, t >= r + 1}`.
    pub fn in_cone(&self) -> bool {
        self.t >= 2.0 && self.t >= self.r() + 1.0
    }

    /// Hyperbolic time `s = sqrt(t^2 - r^2)`; `None` outside the light cone.
    pub fn hyperbolic_time(&self) -> Option<f64> {
        let r = self.r();
        if self.t > r {
            Some(math::sqrt(self.t * self.t - r * r))
        } else {
            None
        }
    }

    /// Coordinate `x^mu` with `mu = 0` the time.
    pub fn coord(&self, mu: usize) -> f64 {
        if mu == 0 {
            self.t
        } else {
            self.x[mu - 1]
        }
    }

    /// Seeded sample with `t` in `[2, 50]`, `r` in `[0.1, t - 1.05]` and a
    /// uniformly distributed direction.
    pub fn random_in_cone<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let t = rng.gen_range(2.0..50.0);
        let r = rng.gen_range(0.1..(t - 1.05));
        let n = random_direction(rng);
        Self::new(t, [r * n[0], r * n[1], r * n[2]])
    }
}

pub(crate) fn random_direction<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..(2.0 * math::PI));
    let rho = math::sqrt(1.0 - z * z);
    [rho * math::cos(phi), rho * math::sin(phi), z]
}

/// Value and derivatives of a scalar field up to order 3 at one point.
///
/// Index 0 is `t`, indices 1..=3 are the space coordinates. Derivative
/// tensors are stored fully (not packed) and are symmetric by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    order: u8,
    pub value: f64,
    pub d1: [f64; 4],
    pub d2: [[f64; 4]; 4],
    pub d3: [[[f64; 4]; 4]; 4],
}

impl Jet {
    pub fn constant(c: f64, order: u8) -> Self {
        Self {
            order: order.min(3),
            value: c,
            d1: [0.0; 4],
            d2: [[0.0; 4]; 4],
            d3: [[[0.0; 4]; 4]; 4],
        }
    }

    /// The coordinate function `x^mu` expanded at `p`.
    pub fn coordinate(mu: usize, p: &SpacetimePoint, order: u8) -> Self {
        let mut j = Self::constant(p.coord(mu), order);
        if j.order >= 1 {
            j.d1[mu] = 1.0;
        }
        j
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    /// Largest absolute entry over all stored derivatives (value included).
    pub fn magnitude(&self) -> f64 {
        let mut m = self.value.abs();
        for a in 0..4 {
            m = m.max(self.d1[a].abs());
            for b in 0..4 {
                m = m.max(self.d2[a][b].abs());
                for c in 0..4 {
                    m = m.max(self.d3[a][b][c].abs());
                }
            }
        }
        m
    }

    /// Drops derivatives above `order`.
    pub fn truncate(&self, order: u8) -> Self {
        let mut j = *self;
        j.order = order.min(self.order);
        if j.order < 3 {
            j.d3 = [[[0.0; 4]; 4]; 4];
        }
        if j.order < 2 {
            j.d2 = [[0.0; 4]; 4];
        }
        if j.order < 1 {
            j.d1 = [0.0; 4];
        }
        j
    }

    /// Jet of `partial_mu` of the field, one order shorter.
    pub fn partial(&self, mu: usize) -> Result<Self> {
        if self.order == 0 {
            return Err(Error::Arity { needed: 1, got: 0 });
        }
        let mut j = Self::constant(self.d1[mu], self.order - 1);
        for a in 0..4 {
            j.d1[a] = self.d2[mu][a];
            for b in 0..4 {
                j.d2[a][b] = self.d3[mu][a][b];
            }
        }
        Ok(j.truncate(self.order - 1))
    }

    /// `F(g)` given `F, F', F'', F'''` evaluated at `g.value` (Faa di Bruno).
    pub fn compose(&self, f: [f64; 4]) -> Self {
        let g = self;
        let mut h = Self::constant(f[0], g.order);
        for a in 0..4 {
            h.d1[a] = f[1] * g.d1[a];
            for b in 0..4 {
                h.d2[a][b] = f[2] * g.d1[a] * g.d1[b] + f[1] * g.d2[a][b];
                for c in 0..4 {
                    h.d3[a][b][c] = f[3] * g.d1[a] * g.d1[b] * g.d1[c]
                        + f[2] * (g.d2[a][b] * g.d1[c] + g.d2[a][c] * g.d1[b] + g.d2[b][c] * g.d1[a])
                        + f[1] * g.d3[a][b][c];
                }
            }
        }
        h.truncate(g.order)
    }

    pub fn exp(&self) -> Self {
        let e = math::exp(self.value);
        self.compose([e, e, e, e])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (math::sin(self.value), math::cos(self.value));
        self.compose([s, c, -s, -c])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (math::sin(self.value), math::cos(self.value));
        self.compose([c, -s, -c, s])
    }

    /// `g^p` for `g > 0`.
    pub fn powf(&self, p: f64) -> Self {
        let g = self.value;
        self.compose([
            math::powf(g, p),
            p * math::powf(g, p - 1.0),
            p * (p - 1.0) * math::powf(g, p - 2.0),
            p * (p - 1.0) * (p - 2.0) * math::powf(g, p - 3.0),
        ])
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }

    fn zip_order(&self, other: &Self) -> u8 {
        self.order.min(other.order)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut j = Jet::constant(self.value + o.value, self.zip_order(&o));
        for a in 0..4 {
            j.d1[a] = self.d1[a] + o.d1[a];
            for b in 0..4 {
                j.d2[a][b] = self.d2[a][b] + o.d2[a][b];
                for c in 0..4 {
                    j.d3[a][b][c] = self.d3[a][b][c] + o.d3[a][b][c];
                }
            }
        }
        j.truncate(j.order)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, c: f64) -> Jet {
        self.value *= c;
        for a in 0..4 {
            self.d1[a] *= c;
            for b in 0..4 {
                self.d2[a][b] *= c;
                for x in self.d3[a][b].iter_mut() {
                    *x *= c;
                }
            }
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, g: Jet) -> Jet {
        let f = self;
        let mut h = Jet::constant(f.value * g.value, f.zip_order(&g));
        for a in 0..4 {
            h.d1[a] = f.d1[a] * g.value + f.value * g.d1[a];
            for b in 0..4 {
                h.d2[a][b] = f.d2[a][b] * g.value + f.d1[a] * g.d1[b] + f.d1[b] * g.d1[a] + f.value * g.d2[a][b];
                for c in 0..4 {
                    h.d3[a][b][c] = f.d3[a][b][c] * g.value
                        + f.d2[a][b] * g.d1[c]
                        + f.d2[a][c] * g.d1[b]
                        + f.d2[b][c] * g.d1[a]
                        + f.d1[a] * g.d2[b][c]
                        + f.d1[b] * g.d2[a][c]
                        + f.d1[c] * g.d2[a][b]
                        + f.value * g.d3[a][b][c];
                }
            }
        }
        h.truncate(h.order)
    }
}

/// First-order differential operators used by the vector field method.
///
/// Space indices are 1-based (`1..=3`) to match coordinate labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VectorFieldKind {
    /// `partial_alpha`, `alpha` in `0..=3`.
    Partial(u8),
    /// Lorentz boost `L_a = x_a d_t + t d_a`.
    Boost(u8),
    /// Rotation `Omega_ab = x_a d_b - x_b d_a` with `a < b`.
    Rotation(u8, u8),
    /// Scaling `L_0 = t d_t + x^a d_a`.
    Scaling,
    /// Good derivative `G_a = (x_a / r) d_t + d_a`; needs `r > 0`.
    Good(u8),
    /// Semi-hyperboloidal frame `(x_a / t) d_t + d_a = L_a / t`; needs `t > 0`.
    SemiHyperboloidal(u8),
}

impl VectorFieldKind {
    /// The commuting family `{d_alpha, L_a, Omega_ab}`, ten fields.
    pub const COMMUTING: [VectorFieldKind; 10] = [
        VectorFieldKind::Partial(0),
        VectorFieldKind::Partial(1),
        VectorFieldKind::Partial(2),
        VectorFieldKind::Partial(3),
        VectorFieldKind::Boost(1),
        VectorFieldKind::Boost(2),
        VectorFieldKind::Boost(3),
        VectorFieldKind::Rotation(1, 2),
        VectorFieldKind::Rotation(1, 3),
        VectorFieldKind::Rotation(2, 3),
    ];

    fn validate(&self) -> Result<()> {
        let ok_space = |a: u8| (1..=3).contains(&a);
        let ok = match *self {
            VectorFieldKind::Partial(a) => a <= 3,
            VectorFieldKind::Boost(a) | VectorFieldKind::Good(a) | VectorFieldKind::SemiHyperboloidal(a) => ok_space(a),
            VectorFieldKind::Rotation(a, b) => ok_space(a) && ok_space(b) && a < b,
            VectorFieldKind::Scaling => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("vector field index out of range"))
        }
    }

    /// Coefficient jets `c^mu` such that the field equals `c^mu d_mu`.
    fn coefficients(&self, p: &SpacetimePoint, order: u8) -> Result<[Jet; 4]> {
        self.validate()?;
        let zero = Jet::constant(0.0, order);
        let one = Jet::constant(1.0, order);
        let x = |mu: usize| Jet::coordinate(mu, p, order);
        let mut c = [zero; 4];
        match *self {
            VectorFieldKind::Partial(a) => c[a as usize] = one,
            VectorFieldKind::Boost(a) => {
                c[0] = x(a as usize);
                c[a as usize] = x(0);
            }
            VectorFieldKind::Rotation(a, b) => {
                c[b as usize] = x(a as usize);
                c[a as usize] = -x(b as usize);
            }
            VectorFieldKind::Scaling => {
                for (mu, ci) in c.iter_mut().enumerate() {
                    *ci = x(mu);
                }
            }
            VectorFieldKind::Good(a) => {
                if !(p.r() > 0.0) {
                    return Err(Error::Domain("good derivative needs r > 0"));
                }
                let r2 = x(1) * x(1) + x(2) * x(2) + x(3) * x(3);
                c[0] = x(a as usize) * r2.powf(-0.5);
                c[a as usize] = one;
            }
            VectorFieldKind::SemiHyperboloidal(a) => {
                if !(p.t > 0.0) {
                    return Err(Error::Domain("semi-hyperboloidal frame needs t > 0"));
                }
                c[0] = x(a as usize) * x(0).recip();
                c[a as usize] = one;
            }
        }
        Ok(c)
    }
}

/// Applies a vector field to the jet of a field expanded at `p`.
///
/// The result is the jet of the new field, one order shorter.
pub fn apply_vf(kind: VectorFieldKind, jet: &Jet, p: &SpacetimePoint) -> Result<Jet> {
    if jet.order() == 0 {
        return Err(Error::Arity { needed: 1, got: 0 });
    }
    let order = jet.order() - 1;
    let coeffs = kind.coefficients(p, order)?;
    let mut out = Jet::constant(0.0, order);
    for (mu, c) in coeffs.iter().enumerate() {
        if c.magnitude() == 0.0 {
            continue;
        }
        out = out + *c * jet.partial(mu)?;
    }
    Ok(out)
}

/// `Box w = -d_t d_t w + Laplacian w`, two orders shorter.
pub fn dalembertian(jet: &Jet) -> Result<Jet> {
    if jet.order() < 2 {
        return Err(Error::Arity {
            needed: 2,
            got: jet.order(),
        });
    }
    let order = jet.order() - 2;
    let mut out = Jet::constant(0.0, order);
    out.value = -jet.d2[0][0] + jet.d2[1][1] + jet.d2[2][2] + jet.d2[3][3];
    if order >= 1 {
        for mu in 0..4 {
            out.d1[mu] = -jet.d3[0][0][mu] + jet.d3[1][1][mu] + jet.d3[2][2][mu] + jet.d3[3][3][mu];
        }
    }
    Ok(out)
}

/// Residuals of the two exact scaling identities
/// `(t^2 - r^2) d_t w = t L_0 w - x^a L_a w` and
/// `(t^2 - r^2) d_a w = t L_a w - x_a L_0 w + x^b Omega_ab w`.
pub fn scaling_identity_residual(jet: &Jet, p: &SpacetimePoint) -> Result<(f64, [f64; 3])> {
    let rr = p.x.iter().map(|x| x * x).sum::<f64>();
    let s2 = p.t * p.t - rr;
    let l0 = apply_vf(VectorFieldKind::Scaling, jet, p)?.value;
    let mut l = [0.0; 3];
    for (a, la) in l.iter_mut().enumerate() {
        *la = apply_vf(VectorFieldKind::Boost(a as u8 + 1), jet, p)?.value;
    }
    let res_t = s2 * jet.d1[0] - (p.t * l0 - (p.x[0] * l[0] + p.x[1] * l[1] + p.x[2] * l[2]));
    let mut res_a = [0.0; 3];
    for a in 0..3 {
        let mut rot = 0.0;
        for b in 0..3 {
            if a != b {
                rot += p.x[b] * rotation_value(jet, p, a as u8 + 1, b as u8 + 1)?;
            }
        }
        res_a[a] = s2 * jet.d1[a + 1] - (p.t * l[a] - p.x[a] * l0 + rot);
    }
    Ok((res_t, res_a))
}

/// `Omega_ab w` for any ordered pair, using `Omega_ba = -Omega_ab`.
fn rotation_value(jet: &Jet, p: &SpacetimePoint, a: u8, b: u8) -> Result<f64> {
    if a < b {
        Ok(apply_vf(VectorFieldKind::Rotation(a, b), jet, p)?.value)
    } else {
        Ok(-apply_vf(VectorFieldKind::Rotation(b, a), jet, p)?.value)
    }
}

/// Minkowski pairing `d_alpha u d^alpha v = -u_t v_t + sum_a u_a v_a`.
pub fn null_form(u: &Jet, v: &Jet) -> f64 {
    -u.d1[0] * v.d1[0] + u.d1[1] * v.d1[1] + u.d1[2] * v.d1[2] + u.d1[3] * v.d1[3]
}

/// Residuals of the good-derivative decompositions of the null forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullFormResiduals {
    /// `d_alpha u d^alpha v - (G_a u G^a v - G_a u (x^a/r) v_t - (x_a/r) u_t G^a v)`.
    pub null: f64,
    /// `(u_t v_a - v_t u_a) - (u_t G_a v - v_t G_a u)` for each `a`.
    pub time_space: [f64; 3],
    /// Residual of the `(u_a v_b - v_a u_b)` expansion, all `a, b`.
    pub space_space: [[f64; 3]; 3],
}

impl NullFormResiduals {
    pub fn max_abs(&self) -> f64 {
        let mut m = self.null.abs();
        for a in 0..3 {
            m = m.max(self.time_space[a].abs());
            for b in 0..3 {
                m = m.max(self.space_space[a][b].abs());
            }
        }
        m
    }
}

fn good_values(jet: &Jet, p: &SpacetimePoint) -> Result<[f64; 3]> {
    let mut g = [0.0; 3];
    for (a, ga) in g.iter_mut().enumerate() {
        *ga = apply_vf(VectorFieldKind::Good(a as u8 + 1), jet, p)?.value;
    }
    Ok(g)
}

/// Checks the flat (good-derivative) null-form identities at `p` (`r > 0`).
pub fn null_form_flat_residual(u: &Jet, v: &Jet, p: &SpacetimePoint) -> Result<NullFormResiduals> {
    let r = p.r();
    if !(r > 0.0) {
        return Err(Error::Domain("null-form decomposition needs r > 0"));
    }
    let n = [p.x[0] / r, p.x[1] / r, p.x[2] / r];
    let gu = good_values(u, p)?;
    let gv = good_values(v, p)?;
    let (ut, vt) = (u.d1[0], v.d1[0]);

    let mut rhs = 0.0;
    for a in 0..3 {
        rhs += gu[a] * gv[a] - gu[a] * n[a] * vt - n[a] * ut * gv[a];
    }
    let null = null_form(u, v) - rhs;

    let mut time_space = [0.0; 3];
    let mut space_space = [[0.0; 3]; 3];
    for a in 0..3 {
        let lhs = ut * v.d1[a + 1] - vt * u.d1[a + 1];
        time_space[a] = lhs - (ut * gv[a] - vt * gu[a]);
        for b in 0..3 {
            let lhs = u.d1[a + 1] * v.d1[b + 1] - v.d1[a + 1] * u.d1[b + 1];
            let rhs = gu[a] * gv[b] - gu[a] * n[b] * vt - n[a] * ut * gv[b] - gv[a] * gu[b]
                + gv[a] * n[b] * ut
                + n[a] * vt * gu[b];
            space_space[a][b] = lhs - rhs;
        }
    }
    Ok(NullFormResiduals {
        null,
        time_space,
        space_space,
    })
}

/// The semi-hyperboloidal frame decomposition of `d_alpha u d^alpha v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperboloidalNullForm {
    pub lhs: f64,
    /// `[-(s/t)^2 u_t v_t, sum_a ud_a u ud_a v, -(x^a/t)(u_t ud_a v + ud_a u v_t)]`.
    pub terms: [f64; 3],
    /// `sum_{alpha, beta} |u_alpha v_beta - v_alpha u_beta|`.
    pub antisymmetric: f64,
    /// Right-hand side of the null-form inequality with unit constant.
    pub bound: f64,
}

impl HyperboloidalNullForm {
    pub fn residual(&self) -> f64 {
        self.lhs - self.terms.iter().sum::<f64>()
    }
}

pub fn null_form_hyperboloidal(u: &Jet, v: &Jet, p: &SpacetimePoint) -> Result<HyperboloidalNullForm> {
    let r = p.r();
    if !(p.t > r) {
        return Err(Error::Domain("hyperboloidal frame needs t > r"));
    }
    let t = p.t;
    let s2_over_t2 = (t * t - r * r) / (t * t);
    let mut du = [0.0; 3];
    let mut dv = [0.0; 3];
    for a in 0..3 {
        let k = VectorFieldKind::SemiHyperboloidal(a as u8 + 1);
        du[a] = apply_vf(k, u, p)?.value;
        dv[a] = apply_vf(k, v, p)?.value;
    }
    let (ut, vt) = (u.d1[0], v.d1[0]);
    let mut frame = 0.0;
    let mut cross = 0.0;
    let mut bound = s2_over_t2 * (ut * vt).abs();
    for a in 0..3 {
        frame += du[a] * dv[a];
        cross -= p.x[a] / t * (ut * dv[a] + du[a] * vt);
        bound += (ut * dv[a]).abs() + (vt * du[a]).abs();
        for b in 0..3 {
            bound += (du[a] * dv[b]).abs();
        }
    }
    let mut antisymmetric = 0.0;
    for al in 0..4 {
        for be in 0..4 {
            antisymmetric += (u.d1[al] * v.d1[be] - v.d1[al] * u.d1[be]).abs();
        }
    }
    Ok(HyperboloidalNullForm {
        lhs: null_form(u, v),
        terms: [-s2_over_t2 * ut * vt, frame, cross],
        antisymmetric,
        bound,
    })
}

/// Residual of the commutator identities: `[Box, Gamma] = 0` for
/// `Gamma` in `{d_alpha, L_a, Omega_ab}` and `[Box, L_0] = 2 Box`.
pub fn commutator_residual(kind: VectorFieldKind, jet: &Jet, p: &SpacetimePoint) -> Result<f64> {
    if jet.order() < 3 {
        return Err(Error::Arity {
            needed: 3,
            got: jet.order(),
        });
    }
    let box_gamma = dalembertian(&apply_vf(kind, jet, p)?)?.value;
    let box_w = dalembertian(jet)?;
    let gamma_box = apply_vf(kind, &box_w, p)?.value;
    match kind {
        VectorFieldKind::Scaling => Ok(box_gamma - gamma_box - 2.0 * box_w.value),
        VectorFieldKind::Good(_) | VectorFieldKind::SemiHyperboloidal(_) => Err(Error::Domain(
            "commutator identity holds only for d, L_a, Omega_ab, L_0",
        )),
        _ => Ok(box_gamma - gamma_box),
    }
}

/// The three pointwise densities whose integrals over a hyperboloid define
/// the hyperboloidal energy.
pub fn hyperboloidal_densities(jet: &Jet, p: &SpacetimePoint, mass: f64) -> Result<[f64; 3]> {
    let t = p.t;
    let r = p.r();
    if !(t > r) {
        return Err(Error::Domain("hyperboloidal energy needs t > r"));
    }
    let st = (t * t - r * r) / (t * t);
    let d = &jet.d1;
    let m2 = mass * mass * jet.value * jet.value;

    let mut first = d[0] * d[0] + m2;
    for a in 1..4 {
        first += d[a] * d[a] + 2.0 * (p.x[a - 1] / t) * d[0] * d[a];
    }

    let mut second = st * d[0] * d[0] + m2;
    for a in 1..4 {
        let ud = p.x[a - 1] / t * d[0] + d[a];
        second += ud * ud;
    }

    let mut perp = d[0];
    for a in 1..4 {
        perp += p.x[a - 1] / t * d[a];
    }
    let mut third = perp * perp + m2;
    for a in 1..4 {
        third += st * d[a] * d[a];
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let om = (p.x[a] * d[b + 1] - p.x[b] * d[a + 1]) / t;
            third += om * om;
        }
    }
    Ok([first, second, third])
}

/// Closed-form test fields with exact derivatives to order 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AnalyticFamily {
    /// `A exp(-|x - c|^2 / sigma^2 - (t - t_c)^2 / tau^2)`.
    GaussianPacket {
        amplitude: f64,
        center: [f64; 4],
        width: f64,
        duration: f64,
    },
    /// `(1 + b . X + X^T C X) * exp(-|x - c|^2 / sigma^2)`, `X = (t, x) - center`.
    PolynomialGaussian {
        linear: [f64; 4],
        quadratic: [[f64; 4]; 4],
        center: [f64; 4],
        width: f64,
    },
    /// `A cos(k . (t, x) + phase) exp(-|x - c|^2 / sigma^2)`.
    PlaneModulated {
        amplitude: f64,
        wave: [f64; 4],
        phase: f64,
        center: [f64; 4],
        width: f64,
    },
}

impl AnalyticFamily {
    /// Expands the field at `p` to the requested order (at most 3).
    pub fn jet(&self, p: &SpacetimePoint, order: u8) -> Jet {
        let x = |mu: usize| Jet::coordinate(mu, p, order);
        let space_gauss = |center: &[f64; 4], width: f64| {
            let mut q = Jet::constant(0.0, order);
            for a in 1..4 {
                let d = x(a) - Jet::constant(center[a], order);
                q = q + d * d;
            }
            (q * (-1.0 / (width * width))).exp()
        };
        match self {
            AnalyticFamily::GaussianPacket {
                amplitude,
                center,
                width,
                duration,
            } => {
                let dt = x(0) - Jet::constant(center[0], order);
                let temporal = (dt * dt * (-1.0 / (duration * duration))).exp();
                space_gauss(center, *width) * temporal * *amplitude
            }
            AnalyticFamily::PolynomialGaussian {
                linear,
                quadratic,
                center,
                width,
            } => {
                let d: [Jet; 4] = core::array::from_fn(|mu| x(mu) - Jet::constant(center[mu], order));
                let mut poly = Jet::constant(1.0, order);
                for mu in 0..4 {
                    poly = poly + d[mu] * linear[mu];
                    for nu in 0..4 {
                        poly = poly + d[mu] * d[nu] * quadratic[mu][nu];
                    }
                }
                poly * space_gauss(center, *width)
            }
            AnalyticFamily::PlaneModulated {
                amplitude,
                wave,
                phase,
                center,
                width,
            } => {
                let mut arg = Jet::constant(*phase, order);
                for mu in 0..4 {
                    arg = arg + (x(mu) - Jet::constant(center[mu], order)) * wave[mu];
                }
                arg.cos() * space_gauss(center, *width) * *amplitude
            }
        }
    }

    /// A random member of the family `tag` (0, 1, 2) centered within unit
    /// distance of `p`, so derivatives at `p` are of order one.
    pub fn random_near<R: Rng + ?Sized>(rng: &mut R, tag: usize, p: &SpacetimePoint) -> Self {
        let mut center = [0.0; 4];
        for (mu, c) in center.iter_mut().enumerate() {
            *c = p.coord(mu) + rng.gen_range(-1.0..1.0);
        }
        let width = rng.gen_range(0.8..3.0);
        match tag % 3 {
            0 => AnalyticFamily::GaussianPacket {
                amplitude: rng.gen_range(0.5..2.0),
                center,
                width,
                duration: rng.gen_range(0.8..3.0),
            },
            1 => AnalyticFamily::PolynomialGaussian {
                linear: core::array::from_fn(|_| rng.gen_range(-1.0..1.0)),
                quadratic: {
                    let mut q = [[0.0; 4]; 4];
                    for mu in 0..4 {
                        for nu in mu..4 {
                            let v = rng.gen_range(-0.5..0.5);
                            q[mu][nu] = v;
                            q[nu][mu] = v;
                        }
                    }
                    q
                },
                center,
                width,
            },
            _ => AnalyticFamily::PlaneModulated {
                amplitude: rng.gen_range(0.5..2.0),
                wave: core::array::from_fn(|_| rng.gen_range(-2.0..2.0)),
                phase: rng.gen_range(0.0..(2.0 * math::PI)),
                center,
                width,
            },
        }
    }

    /// A radial member (`center` at the spatial origin, no modulation).
    pub fn radial_gaussian(amplitude: f64, width: f64, t_center: f64, duration: f64) -> Self {
        AnalyticFamily::GaussianPacket {
            amplitude,
            center: [t_center, 0.0, 0.0, 0.0],
            width,
            duration,
        }
    }
}
