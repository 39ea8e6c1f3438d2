#![allow(dead_code)]

use elastic_te::assembly::{assemble_block_system, BlockSystem, DensityPair, ElasticParams};
use elastic_te::mesh::{make_mesh, refine_times, Domain, Mesh};

pub fn params1() -> (ElasticParams, DensityPair) {
    (ElasticParams::new(1.0 / 16.0, 0.25).unwrap(), DensityPair::new(1.0, 4.0).unwrap())
}

pub fn params2() -> (ElasticParams, DensityPair) {
    (ElasticParams::new(0.25, 0.25).unwrap(), DensityPair::new(0.05, 3.0).unwrap())
}

pub fn mesh(domain: Domain, n: usize, refinements: usize) -> Mesh {
    refine_times(&make_mesh(domain, n).unwrap(), refinements)
}

pub fn system(domain: Domain, n: usize, refinements: usize) -> BlockSystem {
    let (p, d) = params1();
    assemble_block_system(&mesh(domain, n, refinements), p, d).unwrap()
}
