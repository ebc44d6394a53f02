//! Exact geometry, incidence analysis and rigidity certificates for
//! point-line configurations.

pub mod generators;
pub mod geometry;
pub mod incidence;
pub mod io;
pub mod linalg;
pub mod partition;
pub mod recovery;
pub mod rigidity;
pub mod threshold;
pub mod triples;

pub use generators::{gen_circle, gen_elekes, gen_random, gen_unbalanced, GeneratorError, GeneratorSpec};
pub use geometry::{
    dualize, incident, intersect, line_through, Configuration, Dual, GeometryError, Intersection, Line, LineId, Point,
    PointId, ProjectiveMap, Rational,
};
pub use incidence::{clean, count_incidences, st_ratio, CleaningReport, CountMethod, IncidenceStats, StRatio};
pub use io::{configuration_from_json, configuration_to_json, format_rational, parse_rational, IoError};
pub use partition::{build_partition, line_crossings, BisectingFactor, CellId, CellLabel, PartitionError, PartitionTree};
pub use recovery::{closure, run_pipeline, ClosureState, PipelineParams, PipelineReport, RecoveryError};
pub use rigidity::{
    compose_rigidity, dgos_bound, dual_rigidity_transfer, rigidity_certificate, RigidityCertificate, RigidityError,
};
pub use triples::{consecutive_triples, TripleKind, TripleSystem};
