use std::ops::Range;

use crate::ansatz::{EntangledPairSolution, SolitonSolution, Solution};
use crate::model::Variant;
use crate::scalar::{lit, Real};

/// Values and analytic derivatives of `R` and `S` at one point.
///
/// `lap[g]` is the phase Laplacian summed over the axes of group `g`;
/// `dlap[i]` and `d2lap[i]` are the first and second derivatives along axis
/// `i` of the Laplacian of the group containing `i`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Jet<T> {
    pub r: T,
    pub s: T,
    pub dr: Vec<T>,
    pub d2r: Vec<T>,
    pub ds: Vec<T>,
    pub d2s: Vec<T>,
    pub lap: Vec<T>,
    pub dlap: Vec<T>,
    pub d2lap: Vec<T>,
    pub dt_r2: T,
    pub dt_s: T,
    pub v: T,
}

impl<T: Real> Jet<T> {
    pub fn new(dims: usize, groups: usize) -> Self {
        Self {
            r: T::zero(),
            s: T::zero(),
            dr: vec![T::zero(); dims],
            d2r: vec![T::zero(); dims],
            ds: vec![T::zero(); dims],
            d2s: vec![T::zero(); dims],
            lap: vec![T::zero(); groups],
            dlap: vec![T::zero(); dims],
            d2lap: vec![T::zero(); dims],
            dt_r2: T::zero(),
            dt_s: T::zero(),
            v: T::zero(),
        }
    }

    pub fn density(&self) -> T {
        self.r * self.r
    }
}

/// A wave function `R exp(iS)` with closed-form derivatives.
pub trait WaveField<T: Real>: Sync {
    fn dims(&self) -> usize;
    fn hbar(&self) -> T;
    /// Mass attached to each axis.
    fn masses(&self) -> Vec<T>;
    /// Variant the field was constructed for.
    fn variant(&self) -> Variant;
    /// Axis ranges of each particle.
    fn particle_groups(&self) -> Vec<Range<usize>>;
    /// Coupling magnitude of each particle group.
    fn group_couplings(&self) -> Vec<T>;
    /// Coupling magnitude of the cross-coupled term.
    fn c_abs(&self) -> T;
    /// Density maximum at time `t`, per axis.
    fn centers(&self, t: T) -> Vec<T>;
    /// Half-width `w` of the density `∝ exp(−2x²/w²)` along each axis.
    fn widths(&self) -> Vec<T>;
    fn peak_density(&self, t: T) -> T;
    /// Fills `jet` at point `x` and time `t`, with Laplacians grouped by
    /// `groups`.
    fn jet_into(&self, x: &[T], t: T, groups: &[Range<usize>], jet: &mut Jet<T>);

    /// Grouping of phase Laplacians that the given variant's equations use.
    fn groups_for(&self, variant: Variant) -> Vec<Range<usize>> {
        match variant {
            Variant::CrossCoupled => vec![0..self.dims()],
            Variant::WeaklySeparable => self.particle_groups(),
        }
    }

    /// Coupling magnitude per group for the given variant.
    fn couplings_for(&self, variant: Variant) -> Vec<T> {
        match variant {
            Variant::CrossCoupled => vec![self.c_abs()],
            Variant::WeaklySeparable => self.group_couplings(),
        }
    }
}

fn group_of(groups: &[Range<usize>], axis: usize) -> usize {
    groups
        .iter()
        .position(|g| g.contains(&axis))
        .expect("groups partition the axes")
}

impl<T: Real> WaveField<T> for SolitonSolution<T> {
    fn dims(&self) -> usize {
        self.axes.len()
    }

    fn hbar(&self) -> T {
        self.hbar
    }

    fn masses(&self) -> Vec<T> {
        self.axes.iter().map(|ax| ax.m).collect()
    }

    fn variant(&self) -> Variant {
        self.variant
    }

    fn particle_groups(&self) -> Vec<Range<usize>> {
        SolitonSolution::particle_groups(self)
    }

    fn group_couplings(&self) -> Vec<T> {
        SolitonSolution::particle_groups(self)
            .into_iter()
            .map(|g| self.axes[g.start].c_abs)
            .collect()
    }

    fn c_abs(&self) -> T {
        self.c_abs
    }

    fn centers(&self, t: T) -> Vec<T> {
        self.axes.iter().map(|ax| ax.v * t).collect()
    }

    fn widths(&self) -> Vec<T> {
        self.axes.iter().map(|ax| ax.s).collect()
    }

    fn peak_density(&self, _t: T) -> T {
        let n = self.normalization();
        n * n
    }

    fn jet_into(&self, x: &[T], t: T, groups: &[Range<usize>], jet: &mut Jet<T>) {
        let two = lit::<T>(2.0);
        let four = lit::<T>(4.0);
        let mut exponent = T::zero();
        let mut phase = self.c0 + self.cdot * t;
        let mut dt_exp = T::zero();
        let mut dt_s = self.cdot;
        let mut v = T::zero();
        for (i, ax) in self.axes.iter().enumerate() {
            let xi = x[i] - ax.v * t;
            let s2 = ax.s_sq();
            exponent -= xi * xi / s2;
            phase += ax.a * xi * xi + ax.b * ax.v * x[i];
            dt_exp += two * xi * ax.v / s2;
            dt_s -= two * ax.a * xi * ax.v;
            v += ax.m * ax.omega * ax.omega * xi * xi / two;
            jet.ds[i] = two * ax.a * xi + ax.b * ax.v;
            jet.d2s[i] = two * ax.a;
            jet.dlap[i] = T::zero();
            jet.d2lap[i] = T::zero();
        }
        let r = self.normalization() * exponent.exp();
        for (i, ax) in self.axes.iter().enumerate() {
            let xi = x[i] - ax.v * t;
            let s2 = ax.s_sq();
            jet.dr[i] = -two * xi / s2 * r;
            jet.d2r[i] = (four * xi * xi / (s2 * s2) - two / s2) * r;
        }
        for (g, range) in groups.iter().enumerate() {
            jet.lap[g] = range.clone().map(|i| jet.d2s[i]).sum();
        }
        jet.r = r;
        jet.s = phase;
        jet.dt_r2 = two * r * r * dt_exp;
        jet.dt_s = dt_s;
        jet.v = v;
    }
}

impl<T: Real> WaveField<T> for EntangledPairSolution<T> {
    fn dims(&self) -> usize {
        2
    }

    fn hbar(&self) -> T {
        self.hbar
    }

    fn masses(&self) -> Vec<T> {
        vec![self.m, self.m]
    }

    fn variant(&self) -> Variant {
        Variant::CrossCoupled
    }

    fn particle_groups(&self) -> Vec<Range<usize>> {
        vec![0..1, 1..2]
    }

    fn group_couplings(&self) -> Vec<T> {
        vec![self.c_abs, self.c_abs]
    }

    fn c_abs(&self) -> T {
        self.c_abs
    }

    fn centers(&self, t: T) -> Vec<T> {
        let half = lit::<T>(0.5);
        let sigma = self.branch_sign();
        vec![
            self.v * t * (T::one() + sigma) * half,
            self.v * t * (sigma - T::one()) * half,
        ]
    }

    fn widths(&self) -> Vec<T> {
        let w = self.s / lit::<T>(2.0).sqrt();
        vec![w, w]
    }

    fn peak_density(&self, _t: T) -> T {
        let n = self.normalization();
        n * n
    }

    fn jet_into(&self, x: &[T], t: T, groups: &[Range<usize>], jet: &mut Jet<T>) {
        let two = lit::<T>(2.0);
        let four = lit::<T>(4.0);
        let sigma = self.branch_sign();
        let vt = self.v * t;
        let u = x[0] - x[1] - vt;
        let w = x[0] + x[1] - sigma * vt;
        let s2 = self.s * self.s;
        let r = self.normalization() * (-(u * u + w * w) / s2).exp();
        let ex = -two * (u + w) / s2;
        let ey = -two * (w - u) / s2;
        let exx = -four / s2;
        jet.r = r;
        jet.dr[0] = r * ex;
        jet.dr[1] = r * ey;
        jet.d2r[0] = r * (ex * ex + exx);
        jet.d2r[1] = r * (ey * ey + exx);
        let a = self.a;
        jet.s = a * (u * u + w * w)
            + self.v * (self.b_minus * (x[0] - x[1]) + self.b_plus * (x[0] + x[1]))
            + self.c0
            + self.cdot * t;
        jet.ds[0] = two * a * (u + w) + self.v * (self.b_minus + self.b_plus);
        jet.ds[1] = two * a * (w - u) + self.v * (self.b_plus - self.b_minus);
        jet.d2s[0] = four * a;
        jet.d2s[1] = four * a;
        for i in 0..2 {
            jet.dlap[i] = T::zero();
            jet.d2lap[i] = T::zero();
        }
        for (g, range) in groups.iter().enumerate() {
            jet.lap[g] = range.clone().map(|i| jet.d2s[i]).sum();
        }
        jet.dt_r2 = four * self.v * r * r * (u + sigma * w) / s2;
        jet.dt_s = -two * a * self.v * (u + sigma * w) + self.cdot;
        jet.v = T::zero();
    }
}

impl<T: Real> WaveField<T> for Solution<T> {
    fn dims(&self) -> usize {
        match self {
            Solution::Product(s) => s.dims(),
            Solution::Entangled(p) => WaveField::<T>::dims(p),
        }
    }

    fn hbar(&self) -> T {
        match self {
            Solution::Product(s) => s.hbar,
            Solution::Entangled(p) => p.hbar,
        }
    }

    fn masses(&self) -> Vec<T> {
        match self {
            Solution::Product(s) => WaveField::masses(s),
            Solution::Entangled(p) => WaveField::masses(p),
        }
    }

    fn variant(&self) -> Variant {
        match self {
            Solution::Product(s) => s.variant,
            Solution::Entangled(_) => Variant::CrossCoupled,
        }
    }

    fn particle_groups(&self) -> Vec<Range<usize>> {
        match self {
            Solution::Product(s) => WaveField::particle_groups(s),
            Solution::Entangled(p) => WaveField::particle_groups(p),
        }
    }

    fn group_couplings(&self) -> Vec<T> {
        match self {
            Solution::Product(s) => WaveField::group_couplings(s),
            Solution::Entangled(p) => WaveField::group_couplings(p),
        }
    }

    fn c_abs(&self) -> T {
        match self {
            Solution::Product(s) => s.c_abs,
            Solution::Entangled(p) => p.c_abs,
        }
    }

    fn centers(&self, t: T) -> Vec<T> {
        match self {
            Solution::Product(s) => WaveField::centers(s, t),
            Solution::Entangled(p) => WaveField::centers(p, t),
        }
    }

    fn widths(&self) -> Vec<T> {
        match self {
            Solution::Product(s) => WaveField::widths(s),
            Solution::Entangled(p) => WaveField::widths(p),
        }
    }

    fn peak_density(&self, t: T) -> T {
        match self {
            Solution::Product(s) => WaveField::peak_density(s, t),
            Solution::Entangled(p) => WaveField::peak_density(p, t),
        }
    }

    fn jet_into(&self, x: &[T], t: T, groups: &[Range<usize>], jet: &mut Jet<T>) {
        match self {
            Solution::Product(s) => s.jet_into(x, t, groups, jet),
            Solution::Entangled(p) => p.jet_into(x, t, groups, jet),
        }
    }
}

/// Index of the group that owns `axis`.
pub(crate) fn owning_group(groups: &[Range<usize>], axis: usize) -> usize {
    group_of(groups, axis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_entangled_pair, build_free_soliton};
    use crate::model::{validate, Branch, ParticleSpec, UniverseConfig};

    fn universe() -> crate::model::ValidatedUniverse<f64> {
        validate(UniverseConfig::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 0.0); 2],
        ))
        .unwrap()
    }

    fn fd_check<F: WaveField<f64>>(f: &F, x: &[f64], t: f64) {
        let groups = f.groups_for(Variant::CrossCoupled);
        let mut jet = Jet::new(f.dims(), groups.len());
        f.jet_into(x, t, &groups, &mut jet);
        let h = 1e-5;
        let eval = |x: &[f64], t: f64| {
            let mut j = Jet::new(f.dims(), groups.len());
            f.jet_into(x, t, &groups, &mut j);
            j
        };
        for i in 0..f.dims() {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            let (p, m) = (eval(&xp, t), eval(&xm, t));
            assert!(((p.r - m.r) / (2.0 * h) - jet.dr[i]).abs() < 1e-8);
            assert!(((p.s - m.s) / (2.0 * h) - jet.ds[i]).abs() < 1e-7);
            assert!(((p.dr[i] - m.dr[i]) / (2.0 * h) - jet.d2r[i]).abs() < 1e-7);
            assert!(((p.ds[i] - m.ds[i]) / (2.0 * h) - jet.d2s[i]).abs() < 1e-7);
        }
        let (p, m) = (eval(x, t + h), eval(x, t - h));
        assert!(((p.r * p.r - m.r * m.r) / (2.0 * h) - jet.dt_r2).abs() < 1e-7);
        assert!(((p.s - m.s) / (2.0 * h) - jet.dt_s).abs() < 1e-6);
    }

    #[test]
    fn product_jet_matches_finite_differences() {
        let u = validate(UniverseConfig::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 0.7)],
        ))
        .unwrap();
        let s = build_free_soliton(1.0, 0.7, &u).unwrap();
        fd_check(&s, &[0.3], 0.4);
    }

    #[test]
    fn entangled_jet_matches_finite_differences() {
        for branch in [Branch::Upper, Branch::Lower] {
            let p = build_entangled_pair(1.0, 0.8, branch, &universe()).unwrap();
            fd_check(&p, &[0.3, -0.2], 0.5);
        }
    }

    #[test]
    fn entangled_peak_tracks_branch() {
        let up = build_entangled_pair(1.0, 1.0, Branch::Upper, &universe()).unwrap();
        assert_eq!(WaveField::centers(&up, 2.0), vec![2.0, 0.0]);
        let low = build_entangled_pair(1.0, 1.0, Branch::Lower, &universe()).unwrap();
        assert_eq!(WaveField::centers(&low, 2.0), vec![0.0, -2.0]);
    }
}
