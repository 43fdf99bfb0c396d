//! Seeded scenario synthesis: uniform BS placement in a rectangle, tasks at
//! uniformly random origins with uniformly random sizes. Identical seeds
//! produce identical instances.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linkgraph::{build_link_graph, LinkModelConfig};
use crate::model::{BaseStation, Instance, Task};
use crate::units::{gb_to_bytes, gbps_to_bytes_per_sec};

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub n_bs: usize,
    pub interfaces: usize,
    pub n_tasks: usize,
    /// Task sizes drawn uniformly from this range, in GB.
    pub size_range_gb: (f64, f64),
    /// Deployment area in meters.
    pub area_m: (f64, f64),
    /// (BS id, capacity in GB) for each edge server.
    pub servers: Vec<(usize, f64)>,
    /// BS ids with a wired cloud connection.
    pub cloud_bs: Vec<usize>,
    pub cloud_latency_s: f64,
    pub saturation: f64,
    pub link_model: LinkModelConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        // Defaults mirror the reference experimental setup: a 280 x 280 m
        // area, edge servers of 3.2 and 3.6 GB at BSs 1 and 3, the last BS
        // wired to the cloud, and a 200 ms cloud latency.
        GeneratorConfig {
            seed: 0,
            n_bs: 6,
            interfaces: 2,
            n_tasks: 10,
            size_range_gb: (0.1, 1.0),
            area_m: (280.0, 280.0),
            servers: vec![(1, 3.2), (3, 3.6)],
            cloud_bs: vec![6],
            cloud_latency_s: 0.2,
            saturation: 0.95,
            link_model: LinkModelConfig {
                max_range_m: 400.0,
                rate_at_reference: gbps_to_bytes_per_sec(10.0),
                reference_distance_m: 100.0,
                path_loss_exponent: 2.5,
                rate_floor: gbps_to_bytes_per_sec(0.05),
            },
        }
    }
}

impl GeneratorConfig {
    /// Convenience: defaults with the cloud moved to the last BS for a
    /// different network size.
    pub fn sized(n_bs: usize, interfaces: usize, n_tasks: usize) -> Self {
        GeneratorConfig {
            n_bs,
            interfaces,
            n_tasks,
            cloud_bs: vec![n_bs],
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenerateError {
    #[error("bad parameter: {0}")]
    BadParameter(String),
}

/// Draws an instance. Placement is retried (deterministically) until every
/// BS can reach a server or cloud BS, so generated instances always
/// validate.
pub fn generate_instance(cfg: &GeneratorConfig) -> Result<Instance, GenerateError> {
    if cfg.n_bs == 0 {
        return Err(GenerateError::BadParameter("n_bs must be positive".into()));
    }
    if cfg.interfaces == 0 {
        return Err(GenerateError::BadParameter(
            "interfaces must be positive".into(),
        ));
    }
    if !(cfg.size_range_gb.0 > 0.0) || cfg.size_range_gb.1 < cfg.size_range_gb.0 {
        return Err(GenerateError::BadParameter(
            "size range must be positive and ordered".into(),
        ));
    }
    if !(cfg.area_m.0 > 0.0) || !(cfg.area_m.1 > 0.0) {
        return Err(GenerateError::BadParameter("area must be positive".into()));
    }
    if cfg.cloud_bs.is_empty() {
        return Err(GenerateError::BadParameter(
            "at least one cloud-attached BS is required".into(),
        ));
    }
    for &(bs, cap) in &cfg.servers {
        if bs == 0 || bs > cfg.n_bs {
            return Err(GenerateError::BadParameter(format!(
                "server BS {bs} outside 1..{}",
                cfg.n_bs
            )));
        }
        if !(cap > 0.0) {
            return Err(GenerateError::BadParameter(format!(
                "server at BS {bs} has non-positive capacity"
            )));
        }
    }
    for &bs in &cfg.cloud_bs {
        if bs == 0 || bs > cfg.n_bs {
            return Err(GenerateError::BadParameter(format!(
                "cloud BS {bs} outside 1..{}",
                cfg.n_bs
            )));
        }
    }
    if let Err(e) = cfg.link_model.check() {
        return Err(GenerateError::BadParameter(e));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Positions first, redrawn as a block until the topology is connected
    // enough for every BS to reach service.
    let mut base_stations = Vec::new();
    const MAX_PLACEMENT_ATTEMPTS: usize = 256;
    let mut placed = false;
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        base_stations = (1..=cfg.n_bs)
            .map(|id| {
                let x_m = rng.random_range(0.0..cfg.area_m.0);
                let y_m = rng.random_range(0.0..cfg.area_m.1);
                let server = cfg.servers.iter().find(|&&(bs, _)| bs == id);
                BaseStation {
                    id,
                    x_m,
                    y_m,
                    interfaces: cfg.interfaces,
                    has_server: server.is_some(),
                    storage_capacity: server.map_or(0.0, |&(_, gb)| gb_to_bytes(gb)),
                    cloud_attached: cfg.cloud_bs.contains(&id),
                }
            })
            .collect();
        if all_reach_service(&base_stations, &cfg.link_model) {
            placed = true;
            break;
        }
    }
    if !placed {
        return Err(GenerateError::BadParameter(
            "could not place a connected network; widen the link range".into(),
        ));
    }

    let origins: Vec<usize> = (0..cfg.n_tasks)
        .map(|_| rng.random_range(1..=cfg.n_bs))
        .collect();
    let sizes: Vec<f64> = (0..cfg.n_tasks)
        .map(|_| rng.random_range(cfg.size_range_gb.0..=cfg.size_range_gb.1))
        .collect();

    let weight = if cfg.n_tasks > 0 {
        1.0 / cfg.n_tasks as f64
    } else {
        0.0
    };
    let tasks: Vec<Task> = origins
        .iter()
        .zip(&sizes)
        .enumerate()
        .map(|(i, (&origin, &gb))| Task {
            id: i + 1,
            size: gb_to_bytes(gb),
            origin,
            weight,
        })
        .collect();

    let mut inst = Instance {
        base_stations,
        tasks,
        cloud_latency: cfg.cloud_latency_s,
        saturation: cfg.saturation,
        link_model: cfg.link_model,
        rate_overrides: Vec::new(),
    };
    inst.normalize_weights();
    Ok(inst)
}

/// Whether every BS reaches a server or cloud BS in the feasibility graph,
/// so any task placement is serviceable.
fn all_reach_service(base_stations: &[BaseStation], link_model: &LinkModelConfig) -> bool {
    let probe = Instance {
        base_stations: base_stations.to_vec(),
        tasks: Vec::new(),
        cloud_latency: 0.2,
        saturation: 1.0,
        link_model: *link_model,
        rate_overrides: Vec::new(),
    };
    let Ok(g) = build_link_graph(&probe) else {
        return false;
    };
    let n = base_stations.len();
    'outer: for start in 1..=n {
        let mut seen = vec![false; n + 1];
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        while let Some(cur) = queue.pop_front() {
            let bs = &base_stations[cur - 1];
            if bs.has_server || bs.cloud_attached {
                continue 'outer;
            }
            for next in 1..=n {
                if !seen[next] && g.delta(cur, next) {
                    seen[next] = true;
                    queue.push_back(next);
                }
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;

    #[test]
    fn deterministic_per_seed() {
        let cfg = GeneratorConfig {
            seed: 42,
            ..Default::default()
        };
        let a = generate_instance(&cfg).unwrap();
        let b = generate_instance(&cfg).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(&GeneratorConfig {
            seed: 43,
            ..Default::default()
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..25 {
            let cfg = GeneratorConfig {
                seed,
                ..Default::default()
            };
            let inst = generate_instance(&cfg).unwrap();
            assert!(
                validate_instance(&inst).is_empty(),
                "seed {seed} produced violations"
            );
        }
    }

    #[test]
    fn empty_task_set_is_valid() {
        let cfg = GeneratorConfig {
            n_tasks: 0,
            ..Default::default()
        };
        let inst = generate_instance(&cfg).unwrap();
        assert!(inst.tasks.is_empty());
        assert!(validate_instance(&inst).is_empty());
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let cfg = GeneratorConfig {
            servers: vec![(9, 3.2)],
            ..Default::default()
        };
        assert!(matches!(
            generate_instance(&cfg),
            Err(GenerateError::BadParameter(_))
        ));
    }
}
