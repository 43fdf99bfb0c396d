//! Shared instance builders for tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linkgraph::LinkModelConfig;
use crate::model::{validate_instance, BaseStation, Instance, Task};
use crate::units::{gb_to_bytes, gbps_to_bytes_per_sec};

pub fn default_link_model() -> LinkModelConfig {
    LinkModelConfig {
        max_range_m: 400.0,
        rate_at_reference: gbps_to_bytes_per_sec(10.0),
        reference_distance_m: 100.0,
        path_loss_exponent: 2.5,
        rate_floor: gbps_to_bytes_per_sec(0.05),
    }
}

/// Two BSs exactly one reference distance apart. BS 2 hosts a server and
/// the cloud attachment; the single task originates at BS 1.
pub fn two_bs_instance() -> Instance {
    Instance {
        base_stations: vec![
            BaseStation {
                id: 1,
                x_m: 0.0,
                y_m: 0.0,
                interfaces: 1,
                has_server: false,
                storage_capacity: 0.0,
                cloud_attached: false,
            },
            BaseStation {
                id: 2,
                x_m: 100.0,
                y_m: 0.0,
                interfaces: 1,
                has_server: true,
                storage_capacity: gb_to_bytes(4.0),
                cloud_attached: true,
            },
        ],
        tasks: vec![Task {
            id: 1,
            size: gb_to_bytes(1.0),
            origin: 1,
            weight: 1.0,
        }],
        cloud_latency: 0.2,
        saturation: 1.0,
        link_model: default_link_model(),
        rate_overrides: Vec::new(),
    }
}

/// Random oracle-scale instance: N in 2..=4, I = 2, B in 1..=4, with a
/// random server layout, one cloud BS, and saturation 1. Geometry is
/// redrawn until the instance validates, so every seed yields a usable
/// instance deterministically.
pub fn tiny_random_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n_bs = rng.random_range(2..=4usize);
        let n_tasks = rng.random_range(1..=4usize);
        let cloud = rng.random_range(1..=n_bs);
        let base_stations: Vec<BaseStation> = (1..=n_bs)
            .map(|id| {
                let has_server = rng.random_bool(0.5);
                BaseStation {
                    id,
                    x_m: rng.random_range(0.0..250.0),
                    y_m: rng.random_range(0.0..250.0),
                    interfaces: 2,
                    has_server,
                    storage_capacity: if has_server {
                        gb_to_bytes(rng.random_range(0.5..4.0))
                    } else {
                        0.0
                    },
                    cloud_attached: id == cloud,
                }
            })
            .collect();
        let tasks: Vec<Task> = (1..=n_tasks)
            .map(|id| Task {
                id,
                size: gb_to_bytes(rng.random_range(0.2..2.0)),
                origin: rng.random_range(1..=n_bs),
                weight: 1.0 / n_tasks as f64,
            })
            .collect();
        let inst = Instance {
            base_stations,
            tasks,
            cloud_latency: 0.2,
            saturation: 1.0,
            link_model: default_link_model(),
            rate_overrides: Vec::new(),
        };
        if validate_instance(&inst).is_empty() {
            return inst;
        }
    }
}

/// `n` BSs placed close together (all mutually in range), `interfaces`
/// antennas each, no tasks, server + cloud at BS `n`.
pub fn grid_instance(n: usize, interfaces: usize) -> Instance {
    let base_stations = (1..=n)
        .map(|id| BaseStation {
            id,
            x_m: 30.0 * ((id - 1) % 3) as f64,
            y_m: 30.0 * ((id - 1) / 3) as f64,
            interfaces,
            has_server: id == n,
            storage_capacity: if id == n { gb_to_bytes(8.0) } else { 0.0 },
            cloud_attached: id == n,
        })
        .collect();
    Instance {
        base_stations,
        tasks: Vec::new(),
        cloud_latency: 0.2,
        saturation: 1.0,
        link_model: default_link_model(),
        rate_overrides: Vec::new(),
    }
}
