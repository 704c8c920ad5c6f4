//! Bundled county instances: Iowa (99 counties) and Arkansas (75 counties),
//! with 2010 census populations, explicit county adjacency, and — for
//! Iowa — the enacted four-district congressional plan as a reference plan.
//!
//! The files live under `data/` in the crate and are embedded at compile
//! time so tests and the CLI need no external inputs. Adjacency follows
//! shared county borders (no point-only corner contacts); its provenance
//! is documented in the data files themselves.

use super::format::{read_instance, Instance};

static IOWA: &str = include_str!("../../data/iowa.plab");
static ARKANSAS: &str = include_str!("../../data/arkansas.plab");

/// The 99 counties of Iowa with 2010 populations. Includes the enacted
/// congressional plan under the reference-plan name `enacted`.
pub fn iowa() -> Instance {
    read_instance(IOWA).expect("bundled iowa instance is well-formed")
}

/// The 75 counties of Arkansas with 2010 populations.
pub fn arkansas() -> Instance {
    read_instance(ARKANSAS).expect("bundled arkansas instance is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iowa_has_99_units() {
        let instance = iowa();
        assert_eq!(instance.graph.num_units(), 99);
        assert!(instance.graph.is_connected());
        assert!(instance.reference_plans.contains_key("enacted"));
    }

    #[test]
    fn arkansas_has_75_units() {
        let instance = arkansas();
        assert_eq!(instance.graph.num_units(), 75);
        assert!(instance.graph.is_connected());
    }
}
