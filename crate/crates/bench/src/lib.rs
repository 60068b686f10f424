//! Workloads shared by the benches in `benches/`.

use multicp::{random_icp, AlgebraElement, BlockMultilinearMap, BlockView, IcpSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A labelled generated map of moderate size.
pub struct Workload {
    pub label: String,
    pub map: BlockMultilinearMap,
}

/// Generated maps over `M_2` and `C^4` for `k = 1..=4`.
pub fn workloads() -> Vec<Workload> {
    let mut out = Vec::new();
    for (name, dims) in [("M2", vec![2]), ("C4", vec![1, 1, 1, 1])] {
        for k in 1..=4 {
            let spec = IcpSpec::new(dims.clone(), k, 1, 2);
            let (map, _) = random_icp(100 + k as u64, &spec).expect("valid spec");
            out.push(Workload { label: format!("{name}/k{k}"), map });
        }
    }
    out
}

/// Random arguments for a level-1 evaluation.
pub fn arguments(map: &BlockMultilinearMap, seed: u64) -> Vec<AlgebraElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..map.k()).map(|_| AlgebraElement::random(map.algebra(), &mut rng)).collect()
}
