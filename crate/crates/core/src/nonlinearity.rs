//! The nonlinearity `f`, its primitive `F`, the Keller–Osserman profile
//! `Ψ(r) = ((p-1)/p)^{1/p} ∫_r^∞ F^{-1/p}` and its inverse `Φ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_left_singular, integrate_to_infinity, QuadOptions};

/// `((p-1)/p)^{1/p}`.
pub fn ko_constant(p: f64) -> f64 {
    ((p - 1.0) / p).powf(1.0 / p)
}

const DYADIC_STEPS: usize = 40;
const CAUCHY_TOL: f64 = 1e-8;
const EXPLOSION: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub enum NonlinearityKind {
    Power { q: f64 },
    Tabulated(Table),
}

/// `f` together with the exponent `p` of the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    p: f64,
}

/// Monotone table interpolated by a cubic Hermite spline in `(ln t, ln f)`,
/// extended by power laws below the first and above the last sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    t: Vec<f64>,
    f: Vec<f64>,
    lx: Vec<f64>,
    ly: Vec<f64>,
    slope: Vec<f64>,
    cum: Vec<f64>,
    exp_zero: f64,
    exp_inf: f64,
}

fn fit_exponent(lx: &[f64], ly: &[f64]) -> f64 {
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

impl Table {
    fn new(points: &[(f64, f64)]) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidNonlinearity(m.to_string()));
        let mut pos = Vec::with_capacity(points.len());
        for &(t, f) in points {
            if !(t.is_finite() && f.is_finite()) {
                return bad("table entries must be finite");
            }
            if t < 0.0 {
                return bad("table abscissae must be nonnegative");
            }
            if t == 0.0 {
                if f != 0.0 {
                    return bad("f(0) must be 0");
                }
                continue;
            }
            if f <= 0.0 {
                return bad("f must be positive for t > 0");
            }
            pos.push((t, f));
        }
        if pos.len() < 2 {
            return bad("at least two samples with t > 0 are required");
        }
        for w in pos.windows(2) {
            if !(w[1].0 > w[0].0) {
                return bad("table abscissae must be strictly increasing");
            }
            if !(w[1].1 > w[0].1) {
                return bad("f must be strictly increasing");
            }
        }
        let t: Vec<f64> = pos.iter().map(|p| p.0).collect();
        let f: Vec<f64> = pos.iter().map(|p| p.1).collect();
        let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
        let ly: Vec<f64> = f.iter().map(|v| v.ln()).collect();
        let m = t.len();
        let first: Vec<usize> = (0..m).filter(|&i| i < 2 || t[i] <= 10.0 * t[0]).collect();
        let last: Vec<usize> = (0..m)
            .filter(|&i| i + 2 >= m || t[i] >= 0.1 * t[m - 1])
            .collect();
        let pick = |idx: &[usize], v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let exp_zero = fit_exponent(&pick(&first, &lx), &pick(&first, &ly));
        let exp_inf = fit_exponent(&pick(&last, &lx), &pick(&last, &ly));

        // Fritsch–Carlson style slopes, end slopes matched to the extensions
        let h: Vec<f64> = lx.windows(2).map(|w| w[1] - w[0]).collect();
        let del: Vec<f64> = (0..m - 1).map(|k| (ly[k + 1] - ly[k]) / h[k]).collect();
        let mut slope = vec![0.0; m];
        for k in 1..m - 1 {
            if del[k - 1] * del[k] > 0.0 {
                let w1 = 2.0 * h[k] + h[k - 1];
                let w2 = h[k] + 2.0 * h[k - 1];
                slope[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
            }
        }
        slope[0] = exp_zero.clamp(0.0, 3.0 * del[0]);
        slope[m - 1] = exp_inf.clamp(0.0, 3.0 * del[m - 2]);

        let mut table = Self {
            t,
            f,
            lx,
            ly,
            slope,
            cum: vec![0.0; m],
            exp_zero,
            exp_inf,
        };
        table.cum[0] = table.f[0] * table.t[0] / (exp_zero + 1.0);
        for i in 0..m - 1 {
            let seg = integrate(
                |s| table.eval(s),
                table.t[i],
                table.t[i + 1],
                QuadOptions::rel(1e-14),
            )
            .value;
            table.cum[i + 1] = table.cum[i] + seg;
        }
        Ok(table)
    }

    fn segment(&self, t: f64) -> usize {
        (self.t.partition_point(|&v| v <= t))
            .saturating_sub(1)
            .min(self.t.len() - 2)
    }

    // (ln f, d ln f / d ln t) at ln t inside segment i
    fn hermite(&self, i: usize, x: f64) -> (f64, f64) {
        let h = self.lx[i + 1] - self.lx[i];
        let s = (x - self.lx[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let y = h00 * self.ly[i]
            + h10 * h * self.slope[i]
            + h01 * self.ly[i + 1]
            + h11 * h * self.slope[i + 1];
        let dh00 = 6.0 * s2 - 6.0 * s;
        let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
        let dh01 = -6.0 * s2 + 6.0 * s;
        let dh11 = 3.0 * s2 - 2.0 * s;
        let dy = (dh00 * self.ly[i] + dh01 * self.ly[i + 1]) / h
            + dh10 * self.slope[i]
            + dh11 * self.slope[i + 1];
        (y, dy)
    }

    fn eval(&self, t: f64) -> f64 {
        let m = self.t.len();
        if t <= 0.0 {
            0.0
        } else if t <= self.t[0] {
            self.f[0] * (t / self.t[0]).powf(self.exp_zero)
        } else if t >= self.t[m - 1] {
            self.f[m - 1] * (t / self.t[m - 1]).powf(self.exp_inf)
        } else {
            self.hermite(self.segment(t), t.ln()).0.exp()
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        let m = self.t.len();
        if t <= 0.0 {
            return if self.exp_zero < 1.0 {
                f64::INFINITY
            } else if self.exp_zero == 1.0 {
                self.f[0] / self.t[0]
            } else {
                0.0
            };
        }
        let elasticity = if t <= self.t[0] {
            self.exp_zero
        } else if t >= self.t[m - 1] {
            self.exp_inf
        } else {
            self.hermite(self.segment(t), t.ln()).1
        };
        self.eval(t) * elasticity / t
    }

    fn primitive(&self, t: f64) -> f64 {
        let m = self.t.len();
        if t <= 0.0 {
            0.0
        } else if t <= self.t[0] {
            self.eval(t) * t / (self.exp_zero + 1.0)
        } else if t >= self.t[m - 1] {
            let a1 = self.exp_inf + 1.0;
            self.cum[m - 1]
                + self.f[m - 1] * self.t[m - 1] * ((t / self.t[m - 1]).powf(a1) - 1.0) / a1
        } else {
            let i = self.segment(t);
            self.cum[i] + integrate(|s| self.eval(s), self.t[i], t, QuadOptions::rel(1e-14)).value
        }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.t.iter().copied().zip(self.f.iter().copied()).collect()
    }
}

/// Outcome of the Osgood test near zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Osgood {
    /// `∫_{0+} F^{-1/p} = ∞`
    #[serde(rename = "A1_diverges")]
    A1Diverges,
    /// `∫_{0+} F^{-1/p} < ∞`
    #[serde(rename = "A2_converges")]
    A2Converges,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OsgoodReport {
    pub osgood: Osgood,
    /// `((p-1)/p)^{1/p} ∫_0^∞ F^{-1/p}` under (A2); infinite if the tail
    /// diverges as well. Multiply by `γ` for the flat-zone collar width.
    pub l_unit: Option<f64>,
}

impl OsgoodReport {
    pub fn l(&self, gamma: f64) -> Option<f64> {
        self.l_unit.map(|l| gamma * l)
    }
}

enum Series {
    Converges,
    Diverges,
}

// Dyadic partial sums of positive increments.
fn dyadic_test<G: Fn(usize) -> f64>(increment: G) -> Result<Series> {
    let mut sum = 0.0;
    let mut prev_inc = f64::NAN;
    let mut prev_ratio = f64::NAN;
    for k in 1..=DYADIC_STEPS {
        let inc = increment(k);
        sum += inc;
        if !sum.is_finite() || sum > EXPLOSION {
            return Ok(Series::Diverges);
        }
        if inc <= CAUCHY_TOL * sum {
            return Ok(Series::Converges);
        }
        let ratio = inc / prev_inc;
        if (ratio - prev_ratio).abs() <= 1e-6 * ratio {
            // increments are geometric; the series converges iff ratio < 1
            return Ok(if ratio < 1.0 - 1e-9 {
                Series::Converges
            } else {
                Series::Diverges
            });
        }
        prev_inc = inc;
        prev_ratio = ratio;
    }
    Err(Error::Inconclusive {
        steps: DYADIC_STEPS,
    })
}

impl Nonlinearity {
    pub fn power(q: f64, p: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!(
                "power exponent must be positive, got {q}"
            )));
        }
        Self::with_kind(NonlinearityKind::Power { q }, p)
    }

    /// `points` are `(t, f(t))` pairs; a leading `(0, 0)` is optional.
    pub fn tabulated(points: &[(f64, f64)], p: f64) -> Result<Self> {
        Self::with_kind(NonlinearityKind::Tabulated(Table::new(points)?), p)
    }

    fn with_kind(kind: NonlinearityKind, p: f64) -> Result<Self> {
        if !(p >= 2.0 && p.is_finite()) {
            return Err(Error::InvalidNonlinearity(format!(
                "p must be at least 2, got {p}"
            )));
        }
        Ok(Self { kind, p })
    }

    pub fn kind(&self) -> &NonlinearityKind {
        &self.kind
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match self.kind {
            NonlinearityKind::Power { q } => Some(q),
            _ => None,
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            NonlinearityKind::Power { q } => t.powf(*q),
            NonlinearityKind::Tabulated(tab) => tab.eval(t),
        }
    }

    /// `f'(t)` for `t > 0`; the right derivative at 0 (possibly infinite).
    pub fn f_prime(&self, t: f64) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { q } => {
                if t > 0.0 {
                    q * t.powf(q - 1.0)
                } else if *q < 1.0 {
                    f64::INFINITY
                } else if *q == 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            NonlinearityKind::Tabulated(tab) => tab.derivative(t),
        }
    }

    /// `F(x) = ∫_0^x f`.
    pub fn primitive(&self, x: f64) -> Result<f64> {
        if x < 0.0 {
            return Err(Error::NegativeInput(x));
        }
        Ok(self.big_f(x))
    }

    pub(crate) fn big_f(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            NonlinearityKind::Power { q } => x.powf(q + 1.0) / (q + 1.0),
            NonlinearityKind::Tabulated(tab) => tab.primitive(x),
        }
    }

    /// `F(t + s) - F(t)` without cancellation for small `s`.
    pub fn increment(&self, t: f64, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if t <= 0.0 {
            return self.big_f(s);
        }
        match &self.kind {
            NonlinearityKind::Power { q } => {
                if s <= 0.5 * t {
                    t.powf(q + 1.0) * ((q + 1.0) * (s / t).ln_1p()).exp_m1() / (q + 1.0)
                } else {
                    self.big_f(t + s) - self.big_f(t)
                }
            }
            NonlinearityKind::Tabulated(tab) => {
                if s <= 0.5 * t {
                    integrate(|v| tab.eval(v), t, t + s, QuadOptions::rel(1e-14)).value
                } else {
                    tab.primitive(t + s) - tab.primitive(t)
                }
            }
        }
    }

    /// Power-law exponent of `f` at `0+`.
    pub fn exponent_at_zero(&self) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { q } => *q,
            NonlinearityKind::Tabulated(tab) => tab.exp_zero,
        }
    }

    /// Power-law exponent of `f` at infinity.
    pub fn exponent_at_infinity(&self) -> f64 {
        match &self.kind {
            NonlinearityKind::Power { q } => *q,
            NonlinearityKind::Tabulated(tab) => tab.exp_inf,
        }
    }

    fn integrand(&self, s: f64) -> f64 {
        self.big_f(s).powf(-1.0 / self.p)
    }

    /// Whether `∫^∞ F^{-1/p}` converges.
    pub fn ko_holds(&self) -> Result<bool> {
        let inc = |k: usize| {
            let lo = 2f64.powi(k as i32 - 1);
            integrate(|s| self.integrand(s), lo, 2.0 * lo, QuadOptions::rel(1e-12)).value
        };
        Ok(matches!(dyadic_test(inc)?, Series::Converges))
    }

    /// `Ψ(r)`; `+∞` when the Keller–Osserman integral diverges.
    pub fn psi(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::NonpositiveInput(r));
        }
        if !self.ko_holds()? {
            return Ok(f64::INFINITY);
        }
        Ok(self.psi_unchecked(r))
    }

    pub(crate) fn psi_unchecked(&self, r: f64) -> f64 {
        let decay = (self.exponent_at_infinity() + 1.0) / self.p;
        let tail = integrate_to_infinity(|s| self.integrand(s), r, decay, QuadOptions::rel(1e-12));
        ko_constant(self.p) * tail.value
    }

    /// Closed-form `Ψ(t) = K t^{-β}` for a power nonlinearity with `q > p-1`.
    pub fn psi_closed_form(&self, t: f64) -> Option<f64> {
        let (k, beta) = self.power_constants()?;
        Some(k * t.powf(-beta))
    }

    // (K, β) with Ψ(t) = K t^{-β}
    fn power_constants(&self) -> Option<(f64, f64)> {
        let q = self.power_exponent()?;
        let p = self.p;
        if q <= p - 1.0 {
            return None;
        }
        let k = ((p - 1.0) * (q + 1.0) / p).powf(1.0 / p) * p / (q + 1.0 - p);
        Some((k, (q + 1.0 - p) / p))
    }

    pub fn classify_osgood(&self) -> Result<OsgoodReport> {
        let inc = |k: usize| {
            let hi = 2f64.powi(1 - k as i32);
            integrate(|s| self.integrand(s), 0.5 * hi, hi, QuadOptions::rel(1e-12)).value
        };
        match dyadic_test(inc)? {
            Series::Diverges => Ok(OsgoodReport {
                osgood: Osgood::A1Diverges,
                l_unit: None,
            }),
            Series::Converges => {
                let l_unit = if self.ko_holds()? {
                    let e = (self.exponent_at_zero() + 1.0) / self.p;
                    let head = integrate_left_singular(
                        |s| self.integrand(s),
                        0.0,
                        1.0,
                        e,
                        QuadOptions::rel(1e-12),
                    );
                    ko_constant(self.p) * head.value + self.psi_unchecked(1.0)
                } else {
                    f64::INFINITY
                };
                Ok(OsgoodReport {
                    osgood: Osgood::A2Converges,
                    l_unit: Some(l_unit),
                })
            }
        }
    }

    /// Profile bundle; fails with `DivergentIntegral` when (KO) does not hold.
    pub fn profile(&self) -> Result<KOProfile> {
        if !self.ko_holds()? {
            return Err(Error::DivergentIntegral);
        }
        let osgood = self.classify_osgood()?;
        Ok(KOProfile {
            nl: self.clone(),
            osgood,
        })
    }

    pub fn ko_report(&self) -> Result<KoReport> {
        let ko_holds = self.ko_holds()?;
        let osgood = self.classify_osgood()?;
        Ok(KoReport {
            p: self.p,
            ko_holds,
            osgood: osgood.osgood,
            l_unit: osgood.l_unit.filter(|l| l.is_finite()),
            psi_at_1: if ko_holds {
                Some(self.psi_unchecked(1.0))
            } else {
                None
            },
            analytic_ko: self.power_exponent().map(|q| q > self.p - 1.0),
        })
    }
}

/// Serializable summary of the classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KoReport {
    pub p: f64,
    pub ko_holds: bool,
    pub osgood: Osgood,
    pub l_unit: Option<f64>,
    pub psi_at_1: Option<f64>,
    /// For power nonlinearities, the rule `q > p - 1`.
    pub analytic_ko: Option<bool>,
}

/// `Ψ`, `Φ` and the Osgood classification of a nonlinearity satisfying (KO).
#[derive(Debug, Clone, PartialEq)]
pub struct KOProfile {
    nl: Nonlinearity,
    osgood: OsgoodReport,
}

impl KOProfile {
    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn p(&self) -> f64 {
        self.nl.p
    }

    pub fn osgood(&self) -> Osgood {
        self.osgood.osgood
    }

    pub fn osgood_report(&self) -> OsgoodReport {
        self.osgood
    }

    /// Collar width `L = γ ((p-1)/p)^{1/p} ∫_0^∞ F^{-1/p}` under (A2).
    pub fn l(&self, gamma: f64) -> Option<f64> {
        self.osgood.l(gamma)
    }

    /// `lim_{r→0+} Ψ(r)`: finite under (A2).
    pub fn psi_sup(&self) -> f64 {
        self.osgood.l_unit.unwrap_or(f64::INFINITY)
    }

    pub fn psi(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::NonpositiveInput(r));
        }
        Ok(self.nl.psi_unchecked(r))
    }

    /// `Φ = Ψ^{-1}`; closed form for powers, bisection otherwise.
    pub fn phi(&self, s: f64) -> Result<f64> {
        if let Some((k, beta)) = self.nl.power_constants() {
            if !(s > 0.0) {
                return Err(Error::NonpositiveInput(s));
            }
            return Ok((k / s).powf(1.0 / beta));
        }
        self.phi_bisect(s)
    }

    /// Bisection in `ln r` on the monotone map `Ψ`.
    pub fn phi_bisect(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::NonpositiveInput(s));
        }
        let sup = self.psi_sup();
        if s >= sup {
            return Err(Error::OutOfRange { value: s, sup });
        }
        let psi = |r: f64| self.nl.psi_unchecked(r);
        let (mut lo, mut hi) = (1.0f64, 1.0f64);
        let mut guard = 0;
        while psi(lo) <= s {
            lo *= 0.5;
            guard += 1;
            if guard > 1000 || lo == 0.0 {
                return Err(Error::BracketFail(format!("no r with psi(r) > {s}")));
            }
        }
        guard = 0;
        while psi(hi) >= s {
            hi *= 2.0;
            guard += 1;
            if guard > 1000 || !hi.is_finite() {
                return Err(Error::BracketFail(format!("no r with psi(r) < {s}")));
            }
        }
        while hi / lo - 1.0 > 1e-13 {
            let mid = (lo * hi).sqrt();
            if psi(mid) > s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((lo * hi).sqrt())
    }
}

/// JSON description: `{"kind":"power","q":3}` or `{"kind":"table","points":[[t,f],...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NonlinearitySpec {
    Power { q: f64 },
    Table { points: Vec<[f64; 2]> },
}

impl NonlinearitySpec {
    pub fn build(&self, p: f64) -> Result<Nonlinearity> {
        match self {
            NonlinearitySpec::Power { q } => Nonlinearity::power(*q, p),
            NonlinearitySpec::Table { points } => {
                let pts: Vec<(f64, f64)> = points.iter().map(|v| (v[0], v[1])).collect();
                Nonlinearity::tabulated(&pts, p)
            }
        }
    }
}
