//! Regime solvers on a shared noise realisation, and the experiment suite.

mod apriori;
mod experiments;
mod report;
mod weak;

use std::sync::Arc;

pub use apriori::{apriori_check, smooth_conditional_fit, AprioriReport};
pub use experiments::{
    median_metric, paired_distance, pbp_uniqueness_experiment, regime_distance, richardson_limit, semiflow_check,
    solve_mollified_sequence, stability_experiment, ArmLimit, UniquenessOptions,
};
pub use report::{median, ExperimentReport, ReportRow};
pub use weak::{distributional_drift_integral, WeakDriftOptions, WeakPath};

use crate::error::{config, Error, Result};
use crate::fbm::{fbm_from_wiener, sample_wiener, FbmPath};
use crate::function_spaces::{DiffusionField, HolderDrift};
use crate::grid::{GridPath, TimeGrid};
use crate::holder::{holder_seminorm, PairPolicy};
use crate::linalg::RectMat;
use crate::roughpath::{
    exponents, lift_geometric, lift_ito, stopping_time_rough, stopping_time_smooth, stopping_time_young, Exponents,
    LiftKind, Regime, RoughPathLift, StoppingTime,
};

/// One-step schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `X + b h + σ ΔB`; in the rough regime this drops the area term.
    Euler,
    /// Predictor-corrector average of drift and diffusion.
    Heun,
    /// `X + b h + σ ΔB + (∇σ σ) : 𝐁`.
    Davie,
    /// Heun plus the antisymmetric part of the area.
    HeunLevy,
    /// Classical Runge-Kutta on the ODE driven by the piecewise-linear interpolant of `B^H`.
    #[serde(rename = "rk4-ode")]
    Rk4,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Euler => "euler",
            Scheme::Heun => "heun",
            Scheme::Davie => "davie",
            Scheme::HeunLevy => "heun-levy",
            Scheme::Rk4 => "rk4-ode",
        }
    }

    fn allowed(self, regime: Regime) -> bool {
        match regime {
            Regime::Smooth => matches!(self, Scheme::Rk4 | Scheme::Euler | Scheme::Heun),
            Regime::Young => matches!(self, Scheme::Euler | Scheme::Heun),
            Regime::Rough | Regime::WeakRough => matches!(self, Scheme::Davie | Scheme::HeunLevy | Scheme::Euler),
        }
    }

    /// The default scheme and its companion used for two-scheme comparisons.
    pub fn pair_for(regime: Regime) -> (Scheme, Scheme) {
        match regime {
            Regime::Smooth => (Scheme::Rk4, Scheme::Heun),
            Regime::Young => (Scheme::Euler, Scheme::Heun),
            Regime::Rough | Regime::WeakRough => (Scheme::Davie, Scheme::HeunLevy),
        }
    }
}

/// Solver time steps as node lists of the noise grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionSpec {
    Uniform { stride: usize },
    /// Alternating steps `stride/2` and `3 stride/2`; `stride` must be even.
    NonUniform { stride: usize },
}

impl PartitionSpec {
    pub fn stride(self) -> usize {
        match self {
            PartitionSpec::Uniform { stride } | PartitionSpec::NonUniform { stride } => stride,
        }
    }

    pub fn name(self) -> String {
        match self {
            PartitionSpec::Uniform { stride } => format!("uniform{stride}"),
            PartitionSpec::NonUniform { stride } => format!("nonuniform{stride}"),
        }
    }

    /// Nodes from `s0` to `n`, with `extra` inserted when it lies strictly inside.
    pub fn nodes(self, s0: usize, n: usize, extra: Option<usize>) -> Result<Vec<usize>> {
        if s0 > n {
            return config(format!("initial node {s0} beyond the grid end {n}"));
        }
        let steps: [usize; 2] = match self {
            PartitionSpec::Uniform { stride } if stride >= 1 => [stride, stride],
            PartitionSpec::NonUniform { stride } if stride >= 2 && stride % 2 == 0 => [stride / 2, 3 * stride / 2],
            _ => return config(format!("invalid partition {self:?}")),
        };
        let mut nodes = vec![s0];
        let mut k = s0;
        let mut i = 0;
        while k < n {
            k = (k + steps[i % 2]).min(n);
            nodes.push(k);
            i += 1;
        }
        if let Some(e) = extra {
            if e > s0 && e < n {
                if let Err(pos) = nodes.binary_search(&e) {
                    nodes.insert(pos, e);
                }
            }
        }
        Ok(nodes)
    }
}

/// Sampling options for a noise realisation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseOptions {
    pub tail_start: f64,
    /// Fine steps per solver step used to build the lift (rough regime).
    pub refinement: usize,
    pub lift: LiftKind,
}

impl Default for NoiseOptions {
    fn default() -> Self {
        Self { tail_start: -8.0, refinement: 16, lift: LiftKind::Geometric }
    }
}

/// One noise realisation shared by every arm of an experiment.
#[derive(Debug)]
pub struct Noise {
    pub seed: u64,
    pub hurst: f64,
    /// Solver grid.
    pub grid: TimeGrid,
    /// `B^H` (with tower) on the sampling grid; finer than `grid` in the rough regime.
    pub fbm: FbmPath,
    pub lift: Option<RoughPathLift<f64>>,
    /// `B^H` on the solver grid.
    pub driver: Arc<GridPath<f64>>,
}

impl Noise {
    /// Samples `B^H` for `seed`; in the rough regime also the lift on `grid`.
    pub fn sample(hurst: f64, grid: TimeGrid, dim: usize, seed: u64, opts: NoiseOptions) -> Result<Arc<Noise>> {
        let rough = hurst > 1.0 / 3.0 && hurst <= 0.5;
        let fine = if rough { grid.refine(opts.refinement) } else { grid };
        let w = sample_wiener(fine, dim, seed, opts.tail_start)?;
        let fbm = fbm_from_wiener(&w, hurst)?;
        Self::from_fbm(fbm, grid, seed, opts.lift)
    }

    /// Wraps an existing path; builds the lift when `H <= 1/2`.
    pub fn from_fbm(fbm: FbmPath, grid: TimeGrid, seed: u64, lift_kind: LiftKind) -> Result<Arc<Noise>> {
        let hurst = fbm.hurst;
        let rough = hurst > 1.0 / 3.0 && hurst <= 0.5;
        let (lift, driver) = if rough {
            let lift = match lift_kind {
                LiftKind::Geometric => lift_geometric(&fbm, grid)?,
                LiftKind::Ito => lift_ito(&fbm, grid)?,
            };
            let driver = lift.path.clone();
            (Some(lift), driver)
        } else {
            if fbm.grid() != grid {
                return config("outside the rough regime the noise is sampled on the solver grid");
            }
            (None, fbm.path.clone())
        };
        Ok(Arc::new(Noise { seed, hurst, grid, fbm, lift, driver: Arc::new(driver) }))
    }

    pub fn dim(&self) -> usize {
        self.driver.dim
    }

    /// `τ_K` on the solver grid for the regime of `ex`.
    pub fn stopping(&self, k: f64, ex: &Exponents, policy: PairPolicy) -> Result<StoppingTime> {
        match ex.regime {
            Regime::Smooth => stopping_time_smooth(&self.fbm, k, ex, policy),
            Regime::Young => stopping_time_young(&self.driver, k, ex, policy),
            Regime::Rough | Regime::WeakRough => {
                let lift = self.lift.as_ref().ok_or_else(|| Error::Config("rough stopping needs a lift".into()))?;
                stopping_time_rough(lift, k, ex, policy)
            }
        }
    }
}

/// Everything a single solve needs besides the noise.
#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub hurst: f64,
    /// Initial node on the solver grid.
    pub s0: usize,
    pub x0: Vec<f64>,
    pub drift: HolderDrift,
    /// Mollification level applied to `drift` before solving.
    pub level: Option<u32>,
    pub sigma: DiffusionField,
    pub scheme: Scheme,
    pub partition: PartitionSpec,
    /// Stopping threshold `K`.
    pub k: Option<f64>,
    /// Calibration variant: the drift sign flips with the parity of `log2(stride) + level`.
    pub broken: bool,
    pub policy: PairPolicy,
}

impl SolveConfig {
    pub fn new(hurst: f64, x0: Vec<f64>, drift: HolderDrift, sigma: DiffusionField, scheme: Scheme) -> Self {
        Self {
            hurst,
            s0: 0,
            x0,
            drift,
            level: None,
            sigma,
            scheme,
            partition: PartitionSpec::Uniform { stride: 1 },
            k: None,
            broken: false,
            policy: PairPolicy::Auto,
        }
    }

    pub fn regime(&self) -> Result<Regime> {
        Regime::of(self.hurst, self.drift.alpha)
    }

    /// Exponents for the configuration; the drift exponent falls back to a
    /// nearby admissible value when the configured one has none.
    pub fn exponents(&self) -> Result<Exponents> {
        exponents(self.hurst, self.drift.alpha).or_else(|_| {
            let regime = self.regime()?;
            let floor = (1.0 - 1.0 / (2.0 * self.hurst)).max(0.0);
            let mut a = (floor * 20.0).ceil() / 20.0 + 0.05;
            while a <= 1.0 {
                if let Ok(ex) = exponents(self.hurst, a) {
                    return Ok(ex);
                }
                a += 0.05;
            }
            config(format!("no admissible exponents in the {} regime", regime.name()))
        })
    }

    /// Regime consistency and drift-exponent warnings.
    pub fn validate(&self, noise: &Noise) -> Result<Vec<String>> {
        let regime = self.regime()?;
        if (noise.hurst - self.hurst).abs() > 1e-15 {
            return config(format!("noise has H = {} but the solve asks for H = {}", noise.hurst, self.hurst));
        }
        if regime == Regime::Young && self.drift.alpha <= 0.0 {
            return config("the Young regime needs alpha > 0");
        }
        if !self.drift.evaluable() && self.level.is_none() {
            return config("distributional drifts need a mollification level");
        }
        if !self.scheme.allowed(regime) {
            return config(format!("scheme {} is not available in the {} regime", self.scheme.name(), regime.name()));
        }
        let (d, d0) = (self.sigma.dim(), self.sigma.noise_dim());
        if self.x0.len() != d || self.drift.dim != d || noise.dim() != d0 {
            return config(format!(
                "dimension mismatch: x0 {}, drift {}, sigma {d}x{d0}, noise {}",
                self.x0.len(),
                self.drift.dim,
                noise.dim()
            ));
        }
        if matches!(regime, Regime::Rough | Regime::WeakRough) && noise.lift.is_none() {
            return config("the rough regime needs a lift");
        }
        let mut warnings = Vec::new();
        if !regime.alpha_admissible(self.hurst, self.drift.alpha) {
            warnings.push(format!(
                "alpha = {} is outside the well-posedness range of the {} regime",
                self.drift.alpha,
                regime.name()
            ));
        }
        Ok(warnings)
    }

    pub(crate) fn effective_drift(&self) -> HolderDrift {
        match self.level {
            Some(n) => self.drift.mollify(n),
            None => self.drift.clone(),
        }
    }

    fn drift_sign(&self) -> f64 {
        if !self.broken {
            return 1.0;
        }
        let parity = self.partition.stride().trailing_zeros() + self.level.unwrap_or(0);
        if parity % 2 == 1 { -1.0 } else { 1.0 }
    }
}

/// Solution values on the partition nodes, stopped at `τ_K`.
#[derive(Clone, Debug)]
pub struct SolutionPath {
    pub grid: TimeGrid,
    pub regime: Regime,
    pub nodes: Vec<usize>,
    pub dim: usize,
    pub noise_dim: usize,
    /// `X` at the nodes, flattened.
    pub x: Vec<f64>,
    /// Accumulated drift contribution `D`.
    pub drift_part: Vec<f64>,
    /// Accumulated noise contribution `S`.
    pub noise_part: Vec<f64>,
    /// `σ(X)` at the nodes (rough regime).
    pub gubinelli: Option<Vec<f64>>,
    /// Stopping node, if a threshold was set.
    pub stop: Option<usize>,
    pub warnings: Vec<String>,
    /// The realisation that drove this solution.
    pub noise: Arc<Noise>,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn at(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    /// `X` at grid node `k`, if `k` is a partition node.
    pub fn value_at(&self, k: usize) -> Option<&[f64]> {
        self.nodes.binary_search(&k).ok().map(|i| self.at(i))
    }

    pub fn final_value(&self) -> &[f64] {
        self.at(self.len() - 1)
    }

    /// Grid nodes that are multiples of `stride` (relative to the first node).
    pub fn common_nodes(&self, stride: usize) -> Vec<usize> {
        let s0 = self.nodes[0];
        self.nodes.iter().copied().filter(|k| (k - s0) % stride == 0).collect()
    }

    /// Errors unless both solutions were driven by the same noise handle.
    pub fn check_same_noise(&self, other: &SolutionPath) -> Result<()> {
        if !Arc::ptr_eq(&self.noise, &other.noise) {
            return config("compared solutions must share one noise handle");
        }
        Ok(())
    }

    /// Sup distance over `nodes`, which both solutions must contain.
    pub fn sup_distance_on(&self, other: &SolutionPath, nodes: &[usize]) -> Result<f64> {
        self.check_same_noise(other)?;
        let mut m = 0.0f64;
        for &k in nodes {
            let (a, b) = match (self.value_at(k), other.value_at(k)) {
                (Some(a), Some(b)) => (a, b),
                _ => return config(format!("node {k} missing from a solution")),
            };
            m = m.max(crate::scalar::dist(a, b));
        }
        Ok(m)
    }

    /// Path on the uniform grid of nodes `s0, s0 + stride, ...`; all must be present.
    pub fn to_grid_path(&self, stride: usize) -> Result<GridPath<f64>> {
        self.field_path(stride, &self.x, self.dim)
    }

    /// `σ(X)` on the same grid as [`Self::to_grid_path`].
    pub fn gubinelli_path(&self, stride: usize) -> Result<GridPath<f64>> {
        match &self.gubinelli {
            Some(g) => self.field_path(stride, g, self.dim * self.noise_dim),
            None => config("no Gubinelli derivative stored"),
        }
    }

    fn field_path(&self, stride: usize, data: &[f64], width: usize) -> Result<GridPath<f64>> {
        let s0 = self.nodes[0];
        let n = self.grid.n_steps;
        if (n - s0) % stride != 0 || stride == 0 {
            return config("stride does not divide the solution window");
        }
        let count = (n - s0) / stride;
        let grid = TimeGrid::new(self.grid.time(s0), self.grid.t_end, count)?;
        let mut values = Vec::with_capacity((count + 1) * width);
        for m in 0..=count {
            let k = s0 + m * stride;
            let i = self.nodes.binary_search(&k).map_err(|_| Error::Config(format!("node {k} is not a partition node")))?;
            values.extend_from_slice(&data[i * width..(i + 1) * width]);
        }
        GridPath::new(grid, width, values)
    }

    /// `[X]_{C^beta}` over the uniform nodes of spacing `stride`.
    pub fn holder_seminorm(&self, beta: f64, stride: usize, policy: PairPolicy) -> Result<f64> {
        Ok(holder_seminorm(&self.to_grid_path(stride)?, beta, policy).value)
    }

    /// `max_k |X_k - x0 - D_k - S_k|`.
    pub fn decomposition_defect(&self) -> f64 {
        let d = self.dim;
        let mut m = 0.0f64;
        for i in 0..self.len() {
            for c in 0..d {
                let r = self.x[i * d + c] - self.x[c] - self.drift_part[i * d + c] - self.noise_part[i * d + c];
                m = m.max(r.abs());
            }
        }
        m
    }
}

/// Regime-dispatching solve.
pub fn solve(cfg: &SolveConfig, noise: &Arc<Noise>) -> Result<SolutionPath> {
    match cfg.regime()? {
        Regime::Smooth => solve_smooth(cfg, noise),
        Regime::Young => solve_young(cfg, noise),
        Regime::Rough | Regime::WeakRough => solve_rough(cfg, noise),
    }
}

fn expect_regime(cfg: &SolveConfig, want: &[Regime]) -> Result<Regime> {
    let r = cfg.regime()?;
    if !want.contains(&r) {
        return config(format!("H = {} is in the {} regime", cfg.hurst, r.name()));
    }
    Ok(r)
}

/// `H in (1, 2)`: ODE driven by the piecewise-linear interpolant of `B^H` on the partition.
pub fn solve_smooth(cfg: &SolveConfig, noise: &Arc<Noise>) -> Result<SolutionPath> {
    let regime = expect_regime(cfg, &[Regime::Smooth])?;
    if cfg.hurst >= 2.0 {
        return config("the smooth solver covers H in (1, 2)");
    }
    run(cfg, noise, regime)
}

/// `H in (1/2, 1)`: Euler or Heun on the Young equation.
pub fn solve_young(cfg: &SolveConfig, noise: &Arc<Noise>) -> Result<SolutionPath> {
    let regime = expect_regime(cfg, &[Regime::Young])?;
    if cfg.drift.alpha <= 0.0 {
        return config("the Young regime needs alpha > 0");
    }
    run(cfg, noise, regime)
}

/// `H in (1/3, 1/2]`: Davie-type schemes using the lift of the noise.
pub fn solve_rough(cfg: &SolveConfig, noise: &Arc<Noise>) -> Result<SolutionPath> {
    let regime = expect_regime(cfg, &[Regime::Rough, Regime::WeakRough])?;
    if noise.lift.is_none() {
        return config("the rough solver needs a lift");
    }
    run(cfg, noise, regime)
}

struct Stepper<'a> {
    b: HolderDrift,
    sign: f64,
    sigma: &'a DiffusionField,
    scheme: Scheme,
    d: usize,
    d0: usize,
    sig: RectMat,
    sig2: RectMat,
    bx: Vec<f64>,
    bx2: Vec<f64>,
    tmp: Vec<f64>,
    sgs: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a SolveConfig, b: HolderDrift) -> Self {
        let (d, d0) = (cfg.sigma.dim(), cfg.sigma.noise_dim());
        Stepper {
            b,
            sign: cfg.drift_sign(),
            sigma: &cfg.sigma,
            scheme: cfg.scheme,
            d,
            d0,
            sig: RectMat::zeros(d, d0),
            sig2: RectMat::zeros(d, d0),
            bx: vec![0.0; d],
            bx2: vec![0.0; d],
            tmp: vec![0.0; d],
            sgs: vec![0.0; d * d0 * d0],
        }
    }

    fn drift(&mut self, x: &[f64], out_second: bool) {
        let out = if out_second { &mut self.bx2 } else { &mut self.bx };
        self.b.eval(x, out);
        if self.sign != 1.0 {
            out.iter_mut().for_each(|v| *v *= self.sign);
        }
    }

    /// One step; returns the drift and noise increments.
    fn step(&mut self, x: &[f64], dt: f64, db: &[f64], area: Option<&[f64]>, dx_d: &mut [f64], dx_s: &mut [f64]) {
        let (d, d0) = (self.d, self.d0);
        match self.scheme {
            Scheme::Euler | Scheme::Davie => {
                self.drift(x, false);
                self.sigma.eval_into(x, &mut self.sig);
                self.sig.matvec(db, dx_s);
                for i in 0..d {
                    dx_d[i] = self.bx[i] * dt;
                }
                if self.scheme == Scheme::Davie {
                    if let Some(a) = area {
                        self.sigma.sigma_grad_sigma(x, &mut self.sgs);
                        add_area_term(&self.sgs, a, d, d0, dx_s);
                    }
                }
            }
            Scheme::Heun | Scheme::HeunLevy => {
                self.drift(x, false);
                self.sigma.eval_into(x, &mut self.sig);
                self.sig.matvec(db, dx_s);
                let mut pred = vec![0.0; d];
                for i in 0..d {
                    pred[i] = x[i] + self.bx[i] * dt + dx_s[i];
                }
                self.drift(&pred, true);
                self.sigma.eval_into(&pred, &mut self.sig2);
                self.sig2.matvec(db, &mut self.tmp);
                for i in 0..d {
                    dx_d[i] = 0.5 * (self.bx[i] + self.bx2[i]) * dt;
                    dx_s[i] = 0.5 * (dx_s[i] + self.tmp[i]);
                }
                if self.scheme == Scheme::HeunLevy {
                    if let Some(a) = area {
                        let mut anti = a.to_vec();
                        for l in 0..d0 {
                            for j in 0..d0 {
                                anti[l * d0 + j] -= 0.5 * db[l] * db[j];
                            }
                        }
                        self.sigma.sigma_grad_sigma(x, &mut self.sgs);
                        add_area_term(&self.sgs, &anti, d, d0, dx_s);
                    }
                }
            }
            Scheme::Rk4 => {
                let v: Vec<f64> = db.iter().map(|b| b / dt).collect();
                let mut y = x.to_vec();
                let mut acc_d = vec![0.0; d];
                let mut acc_s = vec![0.0; d];
                let mut kd = vec![0.0; d];
                let mut ks = vec![0.0; d];
                for (stage, (w, c)) in [(1.0, 0.0), (2.0, 0.5), (2.0, 0.5), (1.0, 1.0)].into_iter().enumerate() {
                    if stage > 0 {
                        for i in 0..d {
                            y[i] = x[i] + c * dt * (kd[i] + ks[i]);
                        }
                    }
                    self.drift(&y, false);
                    self.sigma.eval_into(&y, &mut self.sig);
                    self.sig.matvec(&v, &mut ks);
                    kd.copy_from_slice(&self.bx);
                    for i in 0..d {
                        acc_d[i] += w * kd[i];
                        acc_s[i] += w * ks[i];
                    }
                }
                for i in 0..d {
                    dx_d[i] = acc_d[i] * dt / 6.0;
                    dx_s[i] = acc_s[i] * dt / 6.0;
                }
            }
        }
    }
}

/// Drift and noise contributions of the scheme from `x` along a driving path
/// given at equally spaced times (rows of `path`, spacing `dt`).
pub(crate) fn drive_along(cfg: &SolveConfig, b: &HolderDrift, x: &[f64], path: &[f64], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let mut st = Stepper::new(cfg, b.clone());
    let (d, d0) = (st.d, st.d0);
    let mut y = x.to_vec();
    let mut acc_d = vec![0.0; d];
    let mut acc_s = vec![0.0; d];
    let mut db = vec![0.0; d0];
    let mut inc_d = vec![0.0; d];
    let mut inc_s = vec![0.0; d];
    for r in 0..path.len() / d0 - 1 {
        for c in 0..d0 {
            db[c] = path[(r + 1) * d0 + c] - path[r * d0 + c];
        }
        st.step(&y, dt, &db, None, &mut inc_d, &mut inc_s);
        for c in 0..d {
            y[c] += inc_d[c] + inc_s[c];
            acc_d[c] += inc_d[c];
            acc_s[c] += inc_s[c];
        }
    }
    (acc_d, acc_s)
}

fn add_area_term(sgs: &[f64], area: &[f64], d: usize, d0: usize, out: &mut [f64]) {
    for i in 0..d {
        let mut s = 0.0;
        for l in 0..d0 {
            for j in 0..d0 {
                s += sgs[(i * d0 + l) * d0 + j] * area[l * d0 + j];
            }
        }
        out[i] += s;
    }
}

fn run(cfg: &SolveConfig, noise: &Arc<Noise>, regime: Regime) -> Result<SolutionPath> {
    let mut warnings = cfg.validate(noise)?;
    let b = cfg.effective_drift();
    if !b.evaluable() {
        return config("the drift has no pointwise representative; set a mollification level");
    }
    let grid = noise.grid;
    let n = grid.n_steps;
    let stop = match cfg.k {
        Some(k) => {
            let ex = cfg.exponents()?;
            Some(noise.stopping(k, &ex, cfg.policy)?.grid_index)
        }
        None => None,
    };
    if stop.is_some() && cfg.exponents().is_err() {
        warnings.push("stopping uses fallback exponents".into());
    }
    let nodes = cfg.partition.nodes(cfg.s0, n, stop)?;
    let (d, d0) = (cfg.sigma.dim(), cfg.sigma.noise_dim());
    let rough = matches!(regime, Regime::Rough | Regime::WeakRough);
    let use_area = rough && matches!(cfg.scheme, Scheme::Davie | Scheme::HeunLevy);
    let mut st = Stepper::new(cfg, b);
    let m = nodes.len();
    let mut x = vec![0.0; m * d];
    let mut dp = vec![0.0; m * d];
    let mut np = vec![0.0; m * d];
    x[..d].copy_from_slice(&cfg.x0);
    let mut db = vec![0.0; d0];
    let mut inc_d = vec![0.0; d];
    let mut inc_s = vec![0.0; d];
    let stop_node = stop.unwrap_or(n);
    for i in 0..m - 1 {
        let (a, bnode) = (nodes[i], nodes[i + 1]);
        let (head, tail) = x.split_at_mut((i + 1) * d);
        let xi = &head[i * d..];
        let xn = &mut tail[..d];
        if a >= stop_node {
            xn.copy_from_slice(xi);
            dp.copy_within(i * d..(i + 1) * d, (i + 1) * d);
            np.copy_within(i * d..(i + 1) * d, (i + 1) * d);
            continue;
        }
        noise.driver.increment(a, bnode, &mut db);
        let dt = grid.time(bnode) - grid.time(a);
        let area = if use_area { Some(noise.lift.as_ref().expect("checked").area(a, bnode)) } else { None };
        st.step(xi, dt, &db, area.as_deref(), &mut inc_d, &mut inc_s);
        for c in 0..d {
            xn[c] = xi[c] + (inc_d[c] + inc_s[c]);
            dp[(i + 1) * d + c] = dp[i * d + c] + inc_d[c];
            np[(i + 1) * d + c] = np[i * d + c] + inc_s[c];
        }
        if !xn.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!("solution blew up at node {bnode}")));
        }
    }
    let gubinelli = if rough {
        let mut g = vec![0.0; m * d * d0];
        let mut s = RectMat::zeros(d, d0);
        for i in 0..m {
            cfg.sigma.eval_into(&x[i * d..(i + 1) * d], &mut s);
            g[i * d * d0..(i + 1) * d * d0].copy_from_slice(&s.a);
        }
        Some(g)
    } else {
        None
    };
    Ok(SolutionPath { grid, regime, nodes, dim: d, noise_dim: d0, x, drift_part: dp, noise_part: np, gubinelli, stop, warnings, noise: noise.clone() })
}
