use crate::error::{Result, SelError};
use crate::params::{ModelParams, DEFAULT_RHO_FLOOR};
use crate::quad::gauss_legendre;
use std::f64::consts::FRAC_PI_2;

/// Convex generators of the weak entropy family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// g = 1, giving eta = rho.
    One,
    /// g = xi, giving eta = m.
    Xi,
    /// g = xi^2 / 2, giving the mechanical energy.
    HalfXiSq,
    /// g = |xi|^p / p with p >= 2.
    Power(f64),
}

impl Generator {
    #[inline]
    pub fn g(&self, xi: f64) -> f64 {
        match *self {
            Generator::One => 1.0,
            Generator::Xi => xi,
            Generator::HalfXiSq => 0.5 * xi * xi,
            Generator::Power(p) => xi.abs().powf(p) / p,
        }
    }

    #[inline]
    pub fn dg(&self, xi: f64) -> f64 {
        match *self {
            Generator::One => 0.0,
            Generator::Xi => 1.0,
            Generator::HalfXiSq => xi,
            Generator::Power(p) => xi.signum() * xi.abs().powf(p - 1.0),
        }
    }

    #[inline]
    pub fn d2g(&self, xi: f64) -> f64 {
        match *self {
            Generator::One | Generator::Xi => 0.0,
            Generator::HalfXiSq => 1.0,
            Generator::Power(p) => (p - 1.0) * xi.abs().powf(p - 2.0),
        }
    }

    /// Parses the CLI names: "one", "xi", "half_xi_sq", "power:p".
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(Generator::One),
            "xi" => Ok(Generator::Xi),
            "half_xi_sq" => Ok(Generator::HalfXiSq),
            other => {
                if let Some(p) = other.strip_prefix("power:") {
                    let p: f64 = p
                        .parse()
                        .map_err(|_| SelError::Config(format!("bad power exponent in '{other}'")))?;
                    if p < 2.0 {
                        return Err(SelError::Config(format!(
                            "power generator needs p >= 2, got {p}"
                        )));
                    }
                    Ok(Generator::Power(p))
                } else {
                    Err(SelError::Config(format!("unknown generator '{other}'")))
                }
            }
        }
    }
}

/// Kinetic entropy pair data: generator, lambda exponent, normalization, and
/// quadrature nodes/weights.
///
/// The integrals over z in (-1, 1) against (1 - z^2)^lambda are evaluated
/// after the substitution z = sin(phi): the nodes are z_k = sin(phi_k) with
/// phi_k Gauss-Legendre on (-pi/2, pi/2) and the weights carry the Jacobian
/// (pi/2) cos(phi_k). For 2/(gamma-1) integer (gamma = 1.4, 1.5, 2, 3, ...)
/// the mapped integrand is entire and the rule converges spectrally; plain
/// Gauss-Legendre on z stalls near 1e-5 for gamma = 2 at 48 nodes.
#[derive(Debug, Clone)]
pub struct EntropyPair {
    pub generator: Generator,
    pub lambda: f64,
    pub c_lambda: f64,
    /// z_k in (-1, 1).
    pub quad_nodes: Vec<f64>,
    /// transformed Gauss-Legendre weights (without the kernel factor).
    pub quad_weights: Vec<f64>,
    /// c_lambda * w_k * (1 - z_k^2)^lambda, the full kernel weight.
    kernel_w: Vec<f64>,
}

pub const DEFAULT_QUAD_NODES: usize = 48;

fn mapped_rule(n: usize, lambda: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (phi, w) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut kernel = Vec::with_capacity(n);
    for k in 0..n {
        let ph = FRAC_PI_2 * phi[k];
        let z = ph.sin();
        let c = ph.cos();
        let wt = FRAC_PI_2 * w[k] * c;
        nodes.push(z);
        weights.push(wt);
        kernel.push(wt * (1.0 - z * z).powf(lambda));
    }
    (nodes, weights, kernel)
}

impl EntropyPair {
    pub fn new(generator: Generator, params: &ModelParams, n_nodes: usize) -> Self {
        let lambda = params.lambda();
        // normalization from a high-order reference rule
        let (_, _, kernel_ref) = mapped_rule(200, lambda);
        let c_lambda = 1.0 / kernel_ref.iter().sum::<f64>();
        let (quad_nodes, quad_weights, mut kernel_w) = mapped_rule(n_nodes, lambda);
        for kw in &mut kernel_w {
            *kw *= c_lambda;
        }
        EntropyPair { generator, lambda, c_lambda, quad_nodes, quad_weights, kernel_w }
    }

    pub fn with_defaults(generator: Generator, params: &ModelParams) -> Self {
        Self::new(generator, params, DEFAULT_QUAD_NODES)
    }

    pub fn n_nodes(&self) -> usize {
        self.quad_nodes.len()
    }
}

/// eta(U) = c_l rho sum w_k g(u + z_k rho^theta) (1 - z_k^2)^lambda; zero at vacuum.
pub fn eval_entropy(rho: f64, m: f64, pair: &EntropyPair, params: &ModelParams) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let u = m / rho.max(DEFAULT_RHO_FLOOR);
    let rt = rho.powf(params.theta);
    let mut acc = 0.0;
    for (&z, &kw) in pair.quad_nodes.iter().zip(&pair.kernel_w) {
        acc += kw * pair.generator.g(u + z * rt);
    }
    rho * acc
}

/// H(U) = c_l rho sum w_k g(u + z rho^theta)(u + z theta rho^theta)(1-z^2)^lambda.
pub fn eval_entropy_flux(rho: f64, m: f64, pair: &EntropyPair, params: &ModelParams) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    let u = m / rho.max(DEFAULT_RHO_FLOOR);
    let rt = rho.powf(params.theta);
    let mut acc = 0.0;
    for (&z, &kw) in pair.quad_nodes.iter().zip(&pair.kernel_w) {
        acc += kw * pair.generator.g(u + z * rt) * (u + z * params.theta * rt);
    }
    rho * acc
}

/// Gradient (d eta / d rho, d eta / d m). Vacuum cells are an error; gradients
/// are only consumed on positivity-guaranteed states.
pub fn entropy_grad(
    rho: f64,
    m: f64,
    pair: &EntropyPair,
    params: &ModelParams,
) -> Result<(f64, f64)> {
    if rho <= DEFAULT_RHO_FLOOR {
        return Err(SelError::Vacuum { rho, floor: DEFAULT_RHO_FLOOR, cell: 0 });
    }
    let u = m / rho;
    let rt = rho.powf(params.theta);
    let mut d_rho = 0.0;
    let mut d_m = 0.0;
    for (&z, &kw) in pair.quad_nodes.iter().zip(&pair.kernel_w) {
        let xi = u + z * rt;
        let gp = pair.generator.dg(xi);
        d_rho += kw * (pair.generator.g(xi) + gp * (params.theta * z * rt - u));
        d_m += kw * gp;
    }
    Ok((d_rho, d_m))
}

/// Second derivatives (d2/drho2, d2/drho dm, d2/dm2) by quadrature.
pub fn entropy_hessian(
    rho: f64,
    m: f64,
    pair: &EntropyPair,
    params: &ModelParams,
) -> Result<(f64, f64, f64)> {
    if rho <= DEFAULT_RHO_FLOOR {
        return Err(SelError::Vacuum { rho, floor: DEFAULT_RHO_FLOOR, cell: 0 });
    }
    let u = m / rho;
    let th = params.theta;
    let rt = rho.powf(th);
    let mut h_rr = 0.0;
    let mut h_rm = 0.0;
    let mut h_mm = 0.0;
    for (&z, &kw) in pair.quad_nodes.iter().zip(&pair.kernel_w) {
        let xi = u + z * rt;
        let a = th * z * rt - u;
        let gpp = pair.generator.d2g(xi);
        h_rr += kw * (gpp * a * a + pair.generator.dg(xi) * th * (1.0 + th) * z * rt);
        h_rm += kw * gpp * a;
        h_mm += kw * gpp;
    }
    Ok((h_rr / rho, h_rm / rho, h_mm / rho))
}

/// Mechanical energy closed form: m^2/(2 rho) + kappa/(gamma-1) rho^gamma.
pub fn mechanical_energy(rho: f64, m: f64, params: &ModelParams) -> f64 {
    if rho <= 0.0 {
        return 0.0;
    }
    0.5 * m * m / rho.max(DEFAULT_RHO_FLOOR)
        + params.kappa / (params.gamma - 1.0) * rho.powf(params.gamma)
}

/// Relative entropy against the constant state (rho_star, 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeEntropyRef {
    pub rho_star: f64,
}

impl RelativeEntropyRef {
    pub fn new(rho_star: f64) -> Result<Self> {
        if !(rho_star > 0.0) {
            return Err(SelError::ParamDomain(format!("rho_star must be > 0, got {rho_star}")));
        }
        Ok(RelativeEntropyRef { rho_star })
    }
}

/// eta*(U) = m^2/(2 rho) + p(rho) - p(rho*) - p'(rho*)(rho - rho*).
pub fn eval_eta_star(rho: f64, m: f64, rf: &RelativeEntropyRef, params: &ModelParams) -> f64 {
    let kin = if m == 0.0 { 0.0 } else { 0.5 * m * m / rho.max(DEFAULT_RHO_FLOOR) };
    let rs = rf.rho_star;
    kin + params.p(rho) - params.p(rs) - params.dp(rs) * (rho - rs)
}

/// Hessian quadratic form of the mechanical energy:
/// kappa gamma rho^(gamma-2) (d_x rho)^2 + rho (d_x u)^2.
pub fn hessian_energy_quadratic(rho: f64, drho_dx: f64, du_dx: f64, params: &ModelParams) -> f64 {
    params.kappa * params.gamma * rho.powf(params.gamma - 2.0) * drho_dx * drho_dx
        + rho * du_dx * du_dx
}

/// The three bracketed quantities of the pressure-law lemmas at one (a, b):
/// |a-b|^(gamma+1), (a-b)(p(a)-p(b)), and p(a)-p(b)-p'(b)(a-b).
pub fn pressure_lemma_quantities(
    a: f64,
    b: f64,
    m_bound: f64,
    params: &ModelParams,
) -> Result<(f64, f64, f64)> {
    if !(0.0..=m_bound).contains(&a) || !(0.0..=m_bound).contains(&b) {
        return Err(SelError::ParamDomain(format!(
            "pressure lemma arguments ({a}, {b}) outside [0, {m_bound}]"
        )));
    }
    let q1 = (a - b).abs().powf(params.gamma + 1.0);
    let q2 = (a - b) * (params.p(a) - params.p(b));
    let q3 = params.p(a) - params.p(b) - params.dp(b) * (a - b);
    Ok((q1, q2, q3))
}

/// Extremal-ratio report for the pressure-law inequalities over a uniform
/// grid on [0, M]^2.
#[derive(Debug, Clone)]
pub struct PressureReport {
    pub gamma: f64,
    pub m_bound: f64,
    pub n_points: usize,
    /// |a-b|^(gamma+1) / [(a-b)(p(a)-p(b))]
    pub ratio_power: (f64, f64),
    /// [p(a)-p(b)-p'(b)(a-b)] / |a-b|^min(gamma,2)
    pub ratio_taylor: (f64, f64),
    /// [p(a)-p(b)-p'(b)(a-b)] / [(p(a)-p(b))(a-b)]
    pub ratio_cross: (f64, f64),
    pub pass: bool,
}

/// Sweeps roughly `samples` grid points of (a, b) in [0, M]^2 and reports
/// whether every ratio stays finite and strictly positive.
pub fn check_pressure_inequalities(
    m_bound: f64,
    params: &ModelParams,
    samples: usize,
) -> Result<PressureReport> {
    if !(m_bound > 0.0) {
        return Err(SelError::ParamDomain(format!("M must be > 0, got {m_bound}")));
    }
    let side = (samples as f64).sqrt().ceil() as usize;
    let taylor_exp = params.gamma.min(2.0);
    let mut r1 = (f64::INFINITY, f64::NEG_INFINITY);
    let mut r2 = r1;
    let mut r3 = r1;
    let mut n_points = 0usize;
    let mut pass = true;
    for i in 0..side {
        let a = m_bound * i as f64 / (side - 1) as f64;
        for j in 0..side {
            if i == j {
                continue;
            }
            let b = m_bound * j as f64 / (side - 1) as f64;
            let (q1, q2, q3) = pressure_lemma_quantities(a, b, m_bound, params)?;
            let v1 = q1 / q2;
            let v2 = q3 / (a - b).abs().powf(taylor_exp);
            let v3 = q3 / q2;
            for (acc, v) in [(&mut r1, v1), (&mut r2, v2), (&mut r3, v3)] {
                if !v.is_finite() || v <= 0.0 {
                    pass = false;
                }
                acc.0 = acc.0.min(v);
                acc.1 = acc.1.max(v);
            }
            n_points += 1;
        }
    }
    Ok(PressureReport {
        gamma: params.gamma,
        m_bound,
        n_points,
        ratio_power: r1,
        ratio_taylor: r2,
        ratio_cross: r3,
        pass,
    })
}
