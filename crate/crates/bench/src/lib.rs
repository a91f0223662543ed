//! Shared setup for the benchmarks: a refined mesh with a fine cap and the
//! mountain test case on it.

use trisk_lts::harness::{init_tc5, TestCaseConfig};
use trisk_lts::mesh::{generate_refined_mesh, RefineSpec, DEFAULT_RADIUS};
use trisk_lts::regions::{build_region_map, fine_by_size};
use trisk_lts::{RegionMap, State, StaticFields, VoronoiMesh};

pub struct Case {
    pub mesh: VoronoiMesh,
    pub map: RegionMap,
    pub state: State,
    pub statics: StaticFields,
}

pub fn refined_case(level: u32) -> Case {
    let spec = RefineSpec {
        center: (1.5 * std::f64::consts::PI, std::f64::consts::PI / 6.0),
        radius: 0.2,
        factor: 4,
    };
    let mesh = generate_refined_mesh(level, spec, 0, DEFAULT_RADIUS).expect("mesh");
    let fine = fine_by_size(&mesh, 0.35);
    let map = build_region_map(&mesh, |i| fine[i], 1).expect("regions");
    let (state, statics) = init_tc5(&mesh, &TestCaseConfig::default()).expect("test case");
    Case { mesh, map, state, statics }
}
