//! Desk-scale setup shared by the command line, tests and examples: a
//! 2 x 2 degree Southern California box, a jittered 20 km station grid and
//! the Hadley-Kanamori layered crust.

use crate::geo::{Region, Station};
use crate::synth::grid_network;
use crate::velmod::LayeredModel;

pub const DESK_MODEL: &str = "\
# top_depth_km vp_kms vs_kms
0.0 5.5 3.18
5.5 6.3 3.64
16.0 6.7 3.87
32.0 7.8 4.5
";

pub const DESK_SPACING_KM: f64 = 20.0;
pub const DESK_JITTER_KM: f64 = 4.0;
pub const DESK_NETWORK_SEED: u64 = 7;
/// Inset of the stress-test event region from the network edge.
pub const DESK_EVENT_INSET_KM: f64 = 25.0;

pub fn desk_region() -> Region {
    Region::new(33.5, 35.5, -118.5, -116.5).expect("valid region")
}

pub fn desk_model() -> LayeredModel {
    DESK_MODEL.parse().expect("valid model")
}

pub fn desk_stations() -> Vec<Station> {
    grid_network(&desk_region(), DESK_SPACING_KM, DESK_JITTER_KM, DESK_NETWORK_SEED)
}

pub fn desk_event_region() -> Region {
    desk_region().inset_km(DESK_EVENT_INSET_KM).expect("region larger than inset")
}
