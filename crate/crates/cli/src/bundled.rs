//! Scenarios compiled into the binary, addressable by name.

macro_rules! bundle {
    ($($name:literal),* $(,)?) => {
        /// `(name, TOML text)` for every bundled scenario, sorted by name.
        pub const SCENARIOS: &[(&str, &str)] = &[
            $(($name, include_str!(concat!("../scenarios/", $name, ".toml")))),*
        ];
    };
}

bundle!(
    "box-feedback",
    "constant-center-ball",
    "decoupled-small-lambda",
    "heat-memory-p2",
    "manufactured-p3",
    "nonfickian-1d",
    "nonfickian-fixed-point",
    "p4-degenerate",
    "polytope-control",
    "scalar-analytic",
    "stiff-memory-large-lambda",
);

pub fn get(name: &str) -> Option<&'static str> {
    SCENARIOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn names() -> impl Iterator<Item = &'static str> {
    SCENARIOS.iter().map(|(n, _)| *n)
}
