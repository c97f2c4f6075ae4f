//! Built-in scenarios, embedded at compile time.

pub struct Demo {
    pub name: &'static str,
    pub summary: &'static str,
    pub source: &'static str,
}

macro_rules! demo {
    ($name:literal, $summary:literal) => {
        Demo {
            name: $name,
            summary: $summary,
            source: include_str!(concat!("../demos/", $name, ".toml")),
        }
    };
}

pub static DEMOS: [Demo; 10] = [
    demo!("stern-gerlach", "spin prepared along +x, sorted along z"),
    demo!("measurement", "pointer probabilities and retrodicted particle states"),
    demo!("preparation", "nondestructive measurement read as a preparation"),
    demo!(
        "contextual-preparation",
        "pointer states tied to non-orthogonal particle states"
    ),
    demo!(
        "povm",
        "POVM induced on a qubit by a decomposition of qubit plus ancilla"
    ),
    demo!("singlet", "spin-singlet conditional probabilities along pairs of axes"),
    demo!(
        "locality",
        "A-histories are independent of a distant, non-interacting C"
    ),
    demo!(
        "unitary-family",
        "the history that follows the evolved ray has weight one"
    ),
    demo!(
        "inconsistent-triple",
        "an inconsistent family; probability queries are refused"
    ),
    demo!("three-toss", "z at three times, and three coins tossed by rotations"),
];

pub fn list_demos() -> impl Iterator<Item = (&'static str, &'static str)> {
    DEMOS.iter().map(|d| (d.name, d.summary))
}

pub fn find_demo(name: &str) -> Option<&'static Demo> {
    DEMOS.iter().find(|d| d.name == name)
}
