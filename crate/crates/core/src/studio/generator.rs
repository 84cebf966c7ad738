use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::matrix::Matrix;
use crate::model::{ProblemInstance, ProblemParams, Scenario, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ServiceClass {
    #[serde(rename = "eMBB")]
    Embb,
    #[serde(rename = "mMTC")]
    Mmtc,
    #[serde(rename = "uRLLC")]
    Urllc,
}

impl ServiceClass {
    pub const ALL: [ServiceClass; 3] = [ServiceClass::Embb, ServiceClass::Mmtc, ServiceClass::Urllc];

    pub fn name(self) -> &'static str {
        match self {
            ServiceClass::Embb => "eMBB",
            ServiceClass::Mmtc => "mMTC",
            ServiceClass::Urllc => "uRLLC",
        }
    }

    /// Mb/s.
    pub fn traffic(self) -> f64 {
        match self {
            ServiceClass::Embb => 20.0,
            ServiceClass::Mmtc => 1.0,
            ServiceClass::Urllc => 5.0,
        }
    }

    /// ms.
    pub fn delay_budget(self) -> f64 {
        match self {
            ServiceClass::Embb | ServiceClass::Mmtc => 100.0,
            ServiceClass::Urllc => 10.0,
        }
    }
}

/// Probability of each service class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceMix {
    pub embb: f64,
    pub mmtc: f64,
    pub urllc: f64,
}

impl Default for ServiceMix {
    fn default() -> Self {
        ServiceMix { embb: 1.0 / 3.0, mmtc: 1.0 / 3.0, urllc: 1.0 / 3.0 }
    }
}

impl ServiceMix {
    pub fn only(class: ServiceClass) -> Self {
        let mut m = ServiceMix { embb: 0.0, mmtc: 0.0, urllc: 0.0 };
        match class {
            ServiceClass::Embb => m.embb = 1.0,
            ServiceClass::Mmtc => m.mmtc = 1.0,
            ServiceClass::Urllc => m.urllc = 1.0,
        }
        m
    }

    fn probs(&self) -> [f64; 3] {
        [self.embb, self.mmtc, self.urllc]
    }

    fn draw(&self, u: f64) -> ServiceClass {
        let mut acc = 0.0;
        for (class, p) in ServiceClass::ALL.into_iter().zip(self.probs()) {
            acc += p;
            if u < acc && p > 0.0 {
                return class;
            }
        }
        // u landed in the rounding slack above the cumulative sum
        let last = self.probs().iter().rposition(|&p| p > 0.0).unwrap_or(0);
        ServiceClass::ALL[last]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_cu: usize,
    pub users: usize,
    pub n_scenarios: usize,
    pub mix: ServiceMix,
    pub coverage_radius_km: f64,
    pub seed: u64,
    pub dist_bounds_km: (f64, f64),
    /// All scenarios reuse the user positions of scenario 0 and differ only in services.
    pub shared_positions: bool,
    pub max_resample: usize,
    pub params: ProblemParams,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_cu: 2,
            users: 10,
            n_scenarios: 3,
            mix: ServiceMix::default(),
            coverage_radius_km: 0.7,
            seed: 1,
            dist_bounds_km: (0.5, 4.0),
            shared_positions: false,
            max_resample: 10_000,
            params: ProblemParams::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CoreError::Generator(m));
        if self.n_cu == 0 {
            return bad("n_cu must be at least 1".into());
        }
        let probs = self.mix.probs();
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return bad("service mix probabilities must be non-negative".into());
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return bad(format!("service mix probabilities sum to {sum}, expected 1"));
        }
        let (lo, hi) = self.dist_bounds_km;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi) {
            return bad(format!("distance bounds ({lo}, {hi}) must satisfy 0 < lo <= hi"));
        }
        if !(self.coverage_radius_km.is_finite() && self.coverage_radius_km > 0.0) {
            return bad("coverage radius must be positive".into());
        }
        Ok(())
    }
}

const TOPOLOGY_STREAM: u64 = 0;
const POSITION_STREAM: u64 = 1 << 62;
const SERVICE_STREAM: u64 = 2 << 62;

// One stream per (scenario, user) so that the first k users of an instance
// do not depend on how many users follow them.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn user_stream(kind: u64, scenario: usize, user: usize) -> u64 {
    kind | ((scenario as u64) << 32) | user as u64
}

pub fn generate_topology(config: &GeneratorConfig) -> Topology {
    let mut rng = stream(config.seed, TOPOLOGY_STREAM);
    let (lo, hi) = config.dist_bounds_km;
    Topology::standard(config.n_cu, |_, _| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
}

/// RU sites on a unit grid with `ceil(sqrt(R))` columns, one per cell centre.
fn ru_sites(n_ru: usize) -> (Vec<(f64, f64)>, f64, f64) {
    let cols = (n_ru as f64).sqrt().ceil().max(1.0) as usize;
    let rows = n_ru.div_ceil(cols);
    let sites = (0..n_ru).map(|r| ((r % cols) as f64 + 0.5, (r / cols) as f64 + 0.5)).collect();
    (sites, cols as f64, rows as f64)
}

pub fn sample_scenarios(topology: &Topology, config: &GeneratorConfig) -> Result<Vec<Scenario>> {
    config.validate()?;
    let (sites, width, height) = ru_sites(topology.n_ru);
    let radius2 = config.coverage_radius_km * config.coverage_radius_km;
    let mut scenarios = Vec::with_capacity(config.n_scenarios);
    let mut shared: Option<Matrix<u8>> = None;
    for s in 0..config.n_scenarios {
        let coverage = match &shared {
            Some(c) => c.clone(),
            None => {
                let pos_scen = if config.shared_positions { 0 } else { s + 1 };
                let mut cov = Matrix::filled(config.users, topology.n_ru, 0u8);
                for i in 0..config.users {
                    let mut rng = stream(config.seed, user_stream(POSITION_STREAM, pos_scen, i));
                    let mut tries = 0;
                    loop {
                        let (x, y) = (rng.gen_range(0.0..width), rng.gen_range(0.0..height));
                        let mut any = false;
                        for (r, &(rx, ry)) in sites.iter().enumerate() {
                            let hit = (x - rx).powi(2) + (y - ry).powi(2) <= radius2;
                            cov[(i, r)] = u8::from(hit);
                            any |= hit;
                        }
                        if any {
                            break;
                        }
                        tries += 1;
                        if tries >= config.max_resample {
                            return Err(CoreError::Generator(format!(
                                "user {i} found no covering RU after {tries} draws; coverage radius too small"
                            )));
                        }
                    }
                }
                if config.shared_positions {
                    shared = Some(cov.clone());
                }
                cov
            }
        };
        let mut delay_budget = Vec::with_capacity(config.users);
        let mut traffic = Vec::with_capacity(config.users);
        for i in 0..config.users {
            let mut rng = stream(config.seed, user_stream(SERVICE_STREAM, s, i));
            let class = config.mix.draw(rng.gen());
            delay_budget.push(class.delay_budget());
            traffic.push(class.traffic());
        }
        scenarios.push(Scenario { id: s, coverage, delay_budget, traffic });
    }
    Ok(scenarios)
}

pub fn generate_instance(config: &GeneratorConfig) -> Result<ProblemInstance> {
    config.validate()?;
    let topology = generate_topology(config);
    let scenarios = sample_scenarios(&topology, config)?;
    Ok(ProblemInstance { params: config.params.clone(), topology, users: config.users, scenarios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::validate_instance;

    #[test]
    fn topology_sizes_follow_cu_count() {
        for (n_cu, du, ru) in [(2, 4, 8), (8, 16, 32)] {
            let t = generate_topology(&GeneratorConfig { n_cu, ..Default::default() });
            assert_eq!((t.n_cu, t.n_du, t.n_ru), (n_cu, du, ru));
            for r in 0..ru {
                assert_eq!((0..du).map(|u| t.zeta[(r, u)] as usize).sum::<usize>(), 2);
            }
            for u in 0..du {
                assert_eq!(t.cu_of(u), Some(u / 2));
            }
        }
    }

    #[test]
    fn all_urllc_mix_sets_budgets_and_traffic() {
        let cfg = GeneratorConfig { mix: ServiceMix::only(ServiceClass::Urllc), ..Default::default() };
        let inst = generate_instance(&cfg).unwrap();
        for sc in &inst.scenarios {
            assert!(sc.delay_budget.iter().all(|&p| p == 10.0));
            assert!(sc.traffic.iter().all(|&w| w == 5.0));
        }
    }

    #[test]
    fn generated_instances_validate_and_respect_bounds() {
        for seed in 0..20 {
            let cfg = GeneratorConfig { seed, n_cu: 1 + (seed as usize % 4), users: 30, ..Default::default() };
            let inst = generate_instance(&cfg).unwrap();
            let rep = validate_instance(&inst);
            assert!(rep.is_valid() && rep.warnings.is_empty(), "{rep:?}");
            let per_user: Vec<usize> = (0..inst.users)
                .map(|i| (0..inst.topology.n_ru).filter(|&r| inst.scenarios[0].covered(i, r)).count())
                .collect();
            assert!(per_user.iter().all(|&k| (1..=4).contains(&k)));
        }
    }

    #[test]
    fn more_users_extend_the_same_prefix() {
        let small = generate_instance(&GeneratorConfig { users: 10, ..Default::default() }).unwrap();
        let big = generate_instance(&GeneratorConfig { users: 40, ..Default::default() }).unwrap();
        assert_eq!(big.with_user_prefix(10), small);
    }

    #[test]
    fn shared_positions_give_equal_coverage_and_dominance_pairs() {
        let cfg = GeneratorConfig {
            shared_positions: true,
            n_scenarios: 2,
            mix: ServiceMix::only(ServiceClass::Embb),
            ..Default::default()
        };
        let embb = generate_instance(&cfg).unwrap();
        let urllc =
            generate_instance(&GeneratorConfig { mix: ServiceMix::only(ServiceClass::Urllc), ..cfg }).unwrap();
        assert_eq!(embb.scenarios[0].coverage, embb.scenarios[1].coverage);
        assert_eq!(embb.scenarios[0].coverage, urllc.scenarios[0].coverage);
        assert!(urllc.scenarios[0].delay_budget.iter().zip(&embb.scenarios[0].delay_budget).all(|(a, b)| a <= b));
    }

    #[test]
    fn tiny_radius_exhausts_resampling() {
        let cfg = GeneratorConfig { coverage_radius_km: 1e-6, max_resample: 50, ..Default::default() };
        assert!(matches!(generate_instance(&cfg), Err(CoreError::Generator(_))));
    }

    #[test]
    fn bad_mix_is_rejected() {
        let cfg = GeneratorConfig { mix: ServiceMix { embb: 0.5, mmtc: 0.2, urllc: 0.2 }, ..Default::default() };
        assert!(cfg.validate().is_err());
    }
}
