//! Configurations compiled into the binary, addressed as `bundled:NAME`.

pub const NAMES: [&str; 10] = [
    "hopf-default",
    "hopf-minimal",
    "dump-default",
    "dump-empty",
    "lift-suite",
    "simple-n2-analytic",
    "general-n3-smooth",
    "ito-suite",
    "integrate-suite",
    "rde-suite",
];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "hopf-default" => include_str!("../configs/hopf-default.json"),
        "hopf-minimal" => include_str!("../configs/hopf-minimal.json"),
        "dump-default" => include_str!("../configs/dump-default.json"),
        "dump-empty" => include_str!("../configs/dump-empty.json"),
        "lift-suite" => include_str!("../configs/lift-suite.json"),
        "simple-n2-analytic" => include_str!("../configs/simple-n2-analytic.json"),
        "general-n3-smooth" => include_str!("../configs/general-n3-smooth.json"),
        "ito-suite" => include_str!("../configs/ito-suite.json"),
        "integrate-suite" => include_str!("../configs/integrate-suite.json"),
        "rde-suite" => include_str!("../configs/rde-suite.json"),
        _ => return None,
    })
}
