//! Interaction kernels, influence functions and the Morse pair potential.

use std::path::Path;

use crate::linalg::dist;
use crate::{Ensemble, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    Nonincreasing,
    /// Heterophilious kernels.
    Nondecreasing,
}

/// Piecewise-linear kernel through `(s, a(s))` samples, zero past the last
/// abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    s: Vec<f64>,
    a: Vec<f64>,
    pub monotonicity: Monotonicity,
}

impl Table {
    pub fn new(s: Vec<f64>, a: Vec<f64>, monotonicity: Monotonicity) -> Result<Self> {
        if s.len() != a.len() {
            return Err(Error::DimensionMismatch { expected: s.len(), found: a.len() });
        }
        if s.len() < 2 {
            return Err(Error::invalid("table", "needs at least two samples"));
        }
        if s[0] != 0.0 {
            return Err(Error::invalid("table", "first abscissa must be 0"));
        }
        if s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("table", "abscissae must be strictly increasing"));
        }
        if a.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("table", "values must be nonnegative"));
        }
        let ok = a.windows(2).all(|w| match monotonicity {
            Monotonicity::Nonincreasing => w[1] <= w[0],
            Monotonicity::Nondecreasing => w[1] >= w[0],
        });
        if !ok {
            return Err(Error::invalid("table", format!("values are not {monotonicity:?}")));
        }
        Ok(Self { s, a, monotonicity })
    }

    /// Two whitespace-separated columns `s a(s)`; `#` starts a comment.
    pub fn parse(text: &str, monotonicity: Monotonicity) -> Result<Self> {
        let mut s = Vec::new();
        let mut a = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("expected two columns, found {}", cols.len()),
                });
            }
            let num = |c: &str| c.parse::<f64>().map_err(|e| Error::Parse { line: ln + 1, message: e.to_string() });
            s.push(num(cols[0])?);
            a.push(num(cols[1])?);
        }
        Self::new(s, a, monotonicity)
    }

    pub fn read(path: &Path, monotonicity: Monotonicity) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?, monotonicity)
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().unwrap_or(&0.0)
    }

    pub fn value(&self, s: f64) -> f64 {
        if s > self.s_max() || s < 0.0 {
            return 0.0;
        }
        let k = self.s.partition_point(|&x| x <= s).clamp(1, self.s.len() - 1);
        let (s0, s1) = (self.s[k - 1], self.s[k]);
        let (a0, a1) = (self.a[k - 1], self.a[k]);
        a0 + (a1 - a0) * (s - s0) / (s1 - s0)
    }

    /// Exact integral of the interpolant over `[lo, s_max]`.
    fn integral_from(&self, lo: f64) -> f64 {
        let mut total = 0.0;
        for k in 1..self.s.len() {
            let (s0, s1) = (self.s[k - 1].max(lo), self.s[k]);
            if s1 <= s0 {
                continue;
            }
            total += 0.5 * (self.value(s0) + self.value(s1)) * (s1 - s0);
        }
        total
    }
}

/// Influence functions for the Jabin–Motsch model, as functions of the
/// squared distance.
#[derive(Debug, Clone, PartialEq)]
pub enum Influence {
    /// `φ(s) = (1 − s)₊^p`.
    Power {
        p: f64,
    },
    Table(Table),
}

impl Influence {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Influence::Power { p } => {
                if s >= 1.0 {
                    0.0
                } else {
                    (1.0 - s).powf(*p)
                }
            }
            Influence::Table(t) => t.value(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MorseSign {
    /// `C_r e^{−s/l_r} − C_a e^{−s/l_a}`: short-range repulsion, long-range
    /// attraction.
    #[default]
    Standard,
    /// Both exponentials with a plus sign.
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Morse {
    pub c_r: f64,
    pub c_a: f64,
    pub l_r: f64,
    pub l_a: f64,
    pub sign: MorseSign,
}

impl Morse {
    pub fn new(c_r: f64, c_a: f64, l_r: f64, l_a: f64) -> Result<Self> {
        for (name, v) in [("c_r", c_r), ("c_a", c_a), ("l_r", l_r), ("l_a", l_a)] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, format!("{v} is not positive")));
            }
        }
        Ok(Self { c_r, c_a, l_r, l_a, sign: MorseSign::Standard })
    }

    pub fn with_sign(mut self, sign: MorseSign) -> Self {
        self.sign = sign;
        self
    }

    fn attraction_sign(&self) -> f64 {
        match self.sign {
            MorseSign::Standard => -1.0,
            MorseSign::AsPrinted => 1.0,
        }
    }

    pub fn pair(&self, s: f64) -> f64 {
        self.c_r * (-s / self.l_r).exp() + self.attraction_sign() * self.c_a * (-s / self.l_a).exp()
    }

    pub fn pair_derivative(&self, s: f64) -> f64 {
        -(self.c_r / self.l_r) * (-s / self.l_r).exp()
            - self.attraction_sign() * (self.c_a / self.l_a) * (-s / self.l_a).exp()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialSpec {
    /// `a(s) = c / (1 + s²)^β`.
    PowerLaw {
        beta: f64,
        amplitude: f64,
    },
    /// `a(s) = 2 / (1 + s²)`.
    TwoAgentDemo,
    Constant(f64),
    Tabulated(Table),
    JabinMotsch(Influence),
    Morse(Morse),
}

impl PotentialSpec {
    pub fn power_law(beta: f64) -> Self {
        PotentialSpec::PowerLaw { beta, amplitude: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::PowerLaw { beta, amplitude } => {
                if !(*beta > 0.0) {
                    return Err(Error::invalid("beta", format!("{beta} is not positive")));
                }
                if !(*amplitude > 0.0) {
                    return Err(Error::invalid("amplitude", format!("{amplitude} is not positive")));
                }
                Ok(())
            }
            PotentialSpec::Constant(c) if !(*c >= 0.0) => Err(Error::invalid("constant", format!("{c} is negative"))),
            PotentialSpec::JabinMotsch(Influence::Power { p }) if !(*p > 0.0) => {
                Err(Error::invalid("p", format!("{p} is not positive")))
            }
            PotentialSpec::Morse(m) => Morse::new(m.c_r, m.c_a, m.l_r, m.l_a).map(|_| ()),
            _ => Ok(()),
        }
    }

    /// Kernel value without the sign check on `s`, for inner loops.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        match self {
            PotentialSpec::PowerLaw { beta, amplitude } => {
                let q = 1.0 + s * s;
                if *beta == 1.0 {
                    amplitude / q
                } else {
                    amplitude * q.powf(-beta)
                }
            }
            PotentialSpec::TwoAgentDemo => 2.0 / (1.0 + s * s),
            PotentialSpec::Constant(c) => *c,
            PotentialSpec::Tabulated(t) => t.value(s),
            PotentialSpec::JabinMotsch(phi) => phi.value(s),
            PotentialSpec::Morse(m) => m.pair(s),
        }
    }

    /// [`PotentialSpec::value`] at `s = √s2`, skipping the root where the
    /// kernel only needs `s²`.
    #[inline]
    pub fn value_sq(&self, s2: f64) -> f64 {
        match self {
            PotentialSpec::PowerLaw { beta, amplitude } => {
                if *beta == 1.0 {
                    amplitude / (1.0 + s2)
                } else {
                    amplitude * (1.0 + s2).powf(-beta)
                }
            }
            PotentialSpec::TwoAgentDemo => 2.0 / (1.0 + s2),
            PotentialSpec::Constant(c) => *c,
            _ => self.value(s2.sqrt()),
        }
    }

    pub fn evaluate(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(Error::invalid("s", format!("{s} is negative")));
        }
        if let PotentialSpec::Morse(_) = self {
            return Err(Error::Unsupported(
                "Morse is a signed pair potential, not a kernel; use its own methods".into(),
            ));
        }
        Ok(self.value(s))
    }
}

/// `∫_lower^∞ a(stretch · r) dr`. Divergent tails come back as `+∞`.
pub fn tail_integral(p: &PotentialSpec, lower: f64, stretch: f64) -> Result<f64> {
    if !(lower >= 0.0) {
        return Err(Error::invalid("lower", format!("{lower} is negative")));
    }
    if !(stretch > 0.0) {
        return Err(Error::invalid("stretch", format!("{stretch} is not positive")));
    }
    p.validate()?;
    // Substituting u = stretch·r gives (1/stretch) ∫_{stretch·lower}^∞ a(u) du.
    let u0 = stretch * lower;
    let inner = match p {
        PotentialSpec::PowerLaw { beta, amplitude } => amplitude * power_law_tail(*beta, u0),
        PotentialSpec::TwoAgentDemo => 2.0 * power_law_tail(1.0, u0),
        PotentialSpec::Constant(c) => {
            if *c == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        }
        PotentialSpec::Tabulated(t) => t.integral_from(u0),
        PotentialSpec::JabinMotsch(phi) => {
            if u0 >= 1.0 {
                0.0
            } else {
                integrate(|u| phi.value(u), u0, 1.0, 1e-13, 1e-11)
            }
        }
        PotentialSpec::Morse(_) => return Err(Error::Unsupported("tail integral of a Morse potential".into())),
    };
    Ok(inner / stretch)
}

/// Switch point between quadrature and the asymptotic series.
const SERIES_FROM: f64 = 10.0;

/// `∫_{u0}^∞ (1 + u²)^{−β} du`.
fn power_law_tail(beta: f64, u0: f64) -> f64 {
    if beta <= 0.5 {
        return f64::INFINITY;
    }
    if beta == 1.0 {
        return std::f64::consts::FRAC_PI_2 - u0.atan();
    }
    if u0 >= SERIES_FROM {
        return power_law_series(beta, u0);
    }
    let body = integrate(|u| (1.0 + u * u).powf(-beta), u0, SERIES_FROM, 1e-14, 1e-12);
    body + power_law_series(beta, SERIES_FROM)
}

/// `∫_L^∞ (1+u²)^{−β} du = Σ_k C(−β,k) L^{1−2β−2k} / (2β+2k−1)` for `L > 1`.
fn power_law_series(beta: f64, l: f64) -> f64 {
    let mut coef = 1.0; // C(−β, k)
    let mut total = 0.0;
    let inv_l2 = 1.0 / (l * l);
    let mut lp = l.powf(1.0 - 2.0 * beta);
    for k in 0..200 {
        let kf = k as f64;
        let term = coef * lp / (2.0 * beta + 2.0 * kf - 1.0);
        total += term;
        if term.abs() <= 1e-17 * total.abs() {
            break;
        }
        coef *= (-beta - kf) / (kf + 1.0);
        lp *= inv_l2;
    }
    total
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Globally adaptive Gauss–Kronrod quadrature on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    for _ in 0..2000 {
        let (total, err): (f64, f64) = parts.iter().fold((0.0, 0.0), |(t, e), p| (t + p.2 .0, e + p.2 .1));
        if err <= abs_tol.max(rel_tol * total.abs()) {
            break;
        }
        let worst =
            parts.iter().enumerate().max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1)).map(|(i, _)| i).unwrap_or(0);
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
    parts.iter().map(|p| p.2 .0).sum()
}

/// Outcome of the grid check of the Jabin–Motsch conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub admissible: bool,
    /// Smallest `C` with `|φ′|² ≤ Cφ` found on the grid.
    pub constant: Option<f64>,
    pub failure: Option<String>,
}

impl Admissibility {
    fn fail(reason: impl Into<String>) -> Self {
        Self { admissible: false, constant: None, failure: Some(reason.into()) }
    }
}

/// Check compact support in `[0, 1]`, positivity on `[0, 1 − ε]` and the
/// bound `|φ′|² ≤ Cφ` on a grid.
pub fn jm_admissible(p: &PotentialSpec) -> Result<Admissibility> {
    let phi = match p {
        PotentialSpec::JabinMotsch(phi) => phi,
        _ => return Err(Error::Unsupported("admissibility applies to Jabin–Motsch influences".into())),
    };
    p.validate()?;
    const GRID: usize = 20_000;
    const EPS: f64 = 1e-3;
    for k in 0..=GRID {
        let s = 1.0 + k as f64 / GRID as f64;
        if phi.value(s) != 0.0 {
            return Ok(Admissibility::fail(format!("φ({s}) ≠ 0: support not in [0,1]")));
        }
    }
    for k in 0..=GRID {
        let s = (1.0 - EPS) * k as f64 / GRID as f64;
        if !(phi.value(s) > 0.0) {
            return Ok(Admissibility::fail(format!("φ({s}) is not strictly positive")));
        }
    }
    match phi {
        Influence::Power { p } => {
            // φ′²/φ = p² (1−s)^{p−2}: bounded iff p ≥ 2, maximal at s = 0.
            if *p >= 2.0 {
                Ok(Admissibility { admissible: true, constant: Some(p * p), failure: None })
            } else {
                Ok(Admissibility::fail(format!("|φ′|²/φ is unbounded near 1 for p = {p}")))
            }
        }
        Influence::Table(t) => {
            // Judged at the table's own resolution: slope² over the mean
            // endpoint value on every cell inside the support.
            let mut c: f64 = 0.0;
            for k in 0..t.s.len() - 1 {
                if t.s[k] >= 1.0 {
                    break;
                }
                let h = t.s[k + 1] - t.s[k];
                let slope = (t.a[k + 1] - t.a[k]) / h;
                let mean = 0.5 * (t.a[k] + t.a[k + 1]);
                if mean > 0.0 {
                    c = c.max(slope * slope / mean);
                }
            }
            Ok(Admissibility { admissible: true, constant: Some(c), failure: None })
        }
    }
}

/// Total energy `Σ_{i<j} pair(‖xᵢ − xⱼ‖)` and per-agent gradients.
pub fn morse_energy_and_gradient(e: &Ensemble, m: &Morse) -> Result<(f64, Vec<f64>)> {
    let n = e.len();
    if n < 2 {
        return Err(Error::invalid("agents", "Morse energy needs at least two agents"));
    }
    let d = e.dim();
    let mut energy = 0.0;
    let mut grad = vec![0.0; n * d];
    for i in 0..n {
        for j in (i + 1)..n {
            let (xi, xj) = (e.position(i), e.position(j));
            let r = dist(xi, xj);
            if r == 0.0 {
                return Err(Error::Singular(format!("agents {i} and {j} coincide")));
            }
            energy += m.pair(r);
            let f = m.pair_derivative(r) / r;
            for k in 0..d {
                let g = f * (xi[k] - xj[k]);
                grad[i * d + k] += g;
                grad[j * d + k] -= g;
            }
        }
    }
    Ok((energy, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kernel_hand_values() {
        assert_eq!(PotentialSpec::power_law(1.0).evaluate(0.0).unwrap(), 1.0);
        assert_eq!(PotentialSpec::TwoAgentDemo.evaluate(1.0).unwrap(), 1.0);
        assert_eq!(PotentialSpec::power_law(2.0).evaluate(1.0).unwrap(), 0.25);
        assert!(PotentialSpec::power_law(1.0).evaluate(-1.0).is_err());
    }

    #[test]
    fn table_interpolation_and_support() {
        let t = Table::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0], Monotonicity::Nonincreasing).unwrap();
        assert_eq!(t.value(0.5), 0.75);
        assert_eq!(t.value(2.0), 0.0);
        assert_eq!(t.value(3.0), 0.0);
        assert_eq!(t.value(1.0), 0.5);
        assert!(Table::new(vec![0.0, 1.0], vec![0.0, 1.0], Monotonicity::Nonincreasing).is_err());
        let het = Table::parse("0 0\n# comment\n1 1\n", Monotonicity::Nondecreasing).unwrap();
        assert_eq!(het.value(0.25), 0.25);
        // exact trapezoid: ∫_0^2 = 0.75 + 0.25
        let p = PotentialSpec::Tabulated(t);
        assert_relative_eq!(tail_integral(&p, 0.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tail_closed_forms() {
        let p = PotentialSpec::power_law(1.0);
        let pi = std::f64::consts::PI;
        assert_relative_eq!(tail_integral(&p, 0.0, 1.0).unwrap(), pi / 2.0, epsilon = 1e-15);
        assert_relative_eq!(tail_integral(&p, 0.0, 2.0).unwrap(), pi / 4.0, epsilon = 1e-15);
        assert_relative_eq!(tail_integral(&p, 1.0, 2.0).unwrap(), 0.5 * (pi / 2.0 - 2f64.atan()), epsilon = 1e-15);
        assert_eq!(tail_integral(&PotentialSpec::power_law(0.5), 0.0, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(tail_integral(&PotentialSpec::Constant(1.0), 0.0, 1.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn power_law_beta_two_closed_form() {
        // ∫_{u0}^∞ (1+u²)^{−2} du = ½(π/2 − atan u0 − u0/(1+u0²))
        let p = PotentialSpec::power_law(2.0);
        for u0 in [0.0, 0.3, 2.0, 9.9, 10.0, 40.0] {
            let exact = 0.5 * (std::f64::consts::FRAC_PI_2 - f64::atan(u0) - u0 / (1.0 + u0 * u0));
            assert_relative_eq!(tail_integral(&p, u0, 1.0).unwrap(), exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn quadrature_polynomial_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 3.0, 1e-14, 1e-14);
        assert_relative_eq!(v, 81.0 / 4.0 - 9.0, epsilon = 1e-12);
    }

    #[test]
    fn jm_admissibility_cases() {
        let quad = PotentialSpec::JabinMotsch(Influence::Power { p: 2.0 });
        let r = jm_admissible(&quad).unwrap();
        assert!(r.admissible);
        assert_eq!(r.constant, Some(4.0));

        let lin = PotentialSpec::JabinMotsch(Influence::Power { p: 1.0 });
        assert!(!jm_admissible(&lin).unwrap().admissible);

        let jump = Table::new(vec![0.0, 1.0, 1.5], vec![1.0, 1.0, 1.0], Monotonicity::Nonincreasing).unwrap();
        let r = jm_admissible(&PotentialSpec::JabinMotsch(Influence::Table(jump))).unwrap();
        assert!(!r.admissible);
        assert!(r.failure.unwrap().contains("support"));

        let zero = Table::new(vec![0.0, 1.0], vec![0.0, 0.0], Monotonicity::Nonincreasing).unwrap();
        let r = jm_admissible(&PotentialSpec::JabinMotsch(Influence::Table(zero))).unwrap();
        assert!(r.failure.unwrap().contains("positive"));

        assert!(jm_admissible(&PotentialSpec::power_law(1.0)).is_err());
    }

    #[test]
    fn jm_tabulated_quadratic_is_admissible() {
        let s: Vec<f64> = (0..=400).map(|k| k as f64 / 400.0).collect();
        let a: Vec<f64> = s.iter().map(|x| (1.0 - x) * (1.0 - x)).collect();
        let t = Table::new(s, a, Monotonicity::Nonincreasing).unwrap();
        let r = jm_admissible(&PotentialSpec::JabinMotsch(Influence::Table(t))).unwrap();
        assert!(r.admissible, "{r:?}");
        assert!((r.constant.unwrap() - 4.0).abs() < 0.1);
    }

    #[test]
    fn morse_far_pair_and_symmetry() {
        let m = Morse::new(1.0, 2.0, 0.5, 1.0).unwrap();
        let e = Ensemble::first_order(2, vec![0.0, 0.0, 100.0, 0.0]).unwrap();
        let (u, g) = morse_energy_and_gradient(&e, &m).unwrap();
        assert!(u.abs() < 1e-40);
        assert!(g.iter().all(|x| x.abs() < 1e-40));

        let e = Ensemble::first_order(2, vec![0.0, 0.0, 0.7, 0.2]).unwrap();
        let (_, g) = morse_energy_and_gradient(&e, &m).unwrap();
        assert_eq!(g[0], -g[2]);
        assert_eq!(g[1], -g[3]);

        let same = Ensemble::first_order(1, vec![0.5, 0.5]).unwrap();
        assert!(matches!(morse_energy_and_gradient(&same, &m), Err(Error::Singular(_))));
        assert!(Morse::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn morse_sign_conventions() {
        let m = Morse::new(1.0, 2.0, 0.5, 1.0).unwrap();
        let printed = m.with_sign(MorseSign::AsPrinted);
        let s = 0.8;
        assert_relative_eq!(m.pair(s), (-s / 0.5f64).exp() - 2.0 * (-s).exp());
        assert_relative_eq!(printed.pair(s), (-s / 0.5f64).exp() + 2.0 * (-s).exp());
    }
}
