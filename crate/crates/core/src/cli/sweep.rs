//! Repeated campaigns over consecutive seeds, run on worker threads.

use std::num::NonZeroUsize;

use crate::fuzzcore::{Campaign, CampaignConfig, CampaignResult, TestCase};
use crate::minivm::{Contract, DeployError};

/// Runs one campaign per seed in `seeds`, with `base` as the template
/// config. Workers share nothing; results come back in seed order.
pub fn sweep(
    contract: &Contract,
    base: &CampaignConfig,
    seeds: impl IntoIterator<Item = u64>,
    initial: Option<&[TestCase]>,
    threads: Option<NonZeroUsize>,
) -> Result<Vec<CampaignResult>, DeployError> {
    let seeds: Vec<u64> = seeds.into_iter().collect();
    let workers = threads
        .or_else(|| std::thread::available_parallelism().ok())
        .map_or(1, NonZeroUsize::get)
        .min(seeds.len().max(1));
    let run_one = |seed: u64| -> Result<CampaignResult, DeployError> {
        let config = CampaignConfig { seed, ..base.clone() };
        let mut c = Campaign::new(contract.clone(), config)?;
        if let Some(tests) = initial {
            c = c.with_seeds(tests.to_vec());
        }
        Ok(c.run())
    };
    let mut slots: Vec<Option<Result<CampaignResult, DeployError>>> = Vec::new();
    slots.resize_with(seeds.len(), || None);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let seeds = &seeds;
                let run_one = &run_one;
                scope.spawn(move || {
                    (w..seeds.len())
                        .step_by(workers)
                        .map(|i| (i, run_one(seeds[i])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("campaign worker panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every seed ran")).collect()
}

/// Median of the values; the mean of the middle pair for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}
