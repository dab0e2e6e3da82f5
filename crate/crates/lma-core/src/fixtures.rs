//! Built-in reaction systems and experiment presets.
//!
//! These are the benchmark networks used across the test suite and the CLI:
//! a three-species cyclic network, its stiff-rate variant, block-replicated
//! scaling versions, a ladder of reaction libraries of growing size, and an
//! eight-compartment cell-differentiation system.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::system::{RateVector, ReactionSystem, StateVector};

/// Protocol parameters attached to a preset: how datasets are generated
/// from it and which sweeps the study harness runs.
#[derive(Debug, Clone)]
pub struct Protocol {
    /// Independent replicates per dataset.
    pub n_replicates: usize,
    /// Observations retained per replicate (excluding the initial state).
    pub n_obs: usize,
    /// Default event-subsampling stride.
    pub keep_every: usize,
    /// Stride sweep for Δt studies.
    pub keep_every_grid: Vec<usize>,
    /// Observation-count sweep for T studies.
    pub n_obs_grid: Vec<usize>,
    /// Step-size grid for the stiffness comparison.
    pub dt_grid: Vec<f64>,
    /// Horizon for the stiffness comparison.
    pub horizon: f64,
    /// Simulation repetitions for ensemble studies.
    pub n_seeds: usize,
    /// Fixed observation times (time-grid subsampling), when the protocol
    /// prescribes them instead of event strides.
    pub sample_times: Option<Vec<f64>>,
}

impl Default for Protocol {
    fn default() -> Self {
        Self {
            n_replicates: 1,
            n_obs: 20,
            keep_every: 100,
            keep_every_grid: vec![10, 30, 50, 70, 100],
            n_obs_grid: vec![20, 40, 60, 80, 100],
            dt_grid: vec![0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            horizon: 5.0,
            n_seeds: 100,
            sample_times: None,
        }
    }
}

/// A named benchmark system with ground-truth rates and protocol defaults.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: String,
    pub system: ReactionSystem,
    pub theta_true: RateVector,
    pub y0: StateVector,
    pub protocol: Protocol,
}

const PRESET_NAMES: &[&str] = &[
    "cyclic3",
    "cyclic3-stiff",
    "cyclic3-study",
    "scaling-p3",
    "scaling-p6",
    "scaling-p9",
    "scaling-r3",
    "scaling-r6",
    "scaling-r9",
    "scaling-r12",
    "scaling-r15",
    "hematopoiesis8",
];

/// Names of all built-in presets.
pub fn preset_names() -> Vec<String> {
    PRESET_NAMES.iter().map(|s| s.to_string()).collect()
}

/// Look up a preset by name. Unknown names list what is available.
pub fn load_preset(name: &str) -> Result<Preset> {
    match name {
        "cyclic3" | "cyclic3-study" | "scaling-p3" => Ok(cyclic_replicated(1, name)),
        "scaling-p6" => Ok(cyclic_replicated(2, name)),
        "scaling-p9" => Ok(cyclic_replicated(3, name)),
        "cyclic3-stiff" => Ok(cyclic_stiff()),
        "scaling-r3" => Ok(reaction_ladder(3)),
        "scaling-r6" => Ok(reaction_ladder(6)),
        "scaling-r9" => Ok(reaction_ladder(9)),
        "scaling-r12" => Ok(reaction_ladder(12)),
        "scaling-r15" => Ok(reaction_ladder(15)),
        "hematopoiesis8" => Ok(hematopoiesis()),
        _ => Err(Error::UnknownPreset {
            name: name.to_string(),
            available: preset_names(),
        }),
    }
}

/// The three-species cyclic network 2A → 2B, A+B → 3C, 2C → 2A.
fn cyclic_system() -> ReactionSystem {
    let k = DMatrix::from_row_slice(3, 3, &[2, 1, 0, 0, 1, 0, 0, 0, 2]);
    let s = DMatrix::from_row_slice(3, 3, &[0, 0, 2, 2, 0, 0, 0, 3, 0]);
    ReactionSystem::new(
        vec!["A".into(), "B".into(), "C".into()],
        k,
        s,
        vec!["2A->2B".into(), "A+B->3C".into(), "2C->2A".into()],
    )
    .expect("cyclic3 is a valid system")
}

/// Block-diagonal replication of the cyclic network (`copies` ≥ 1).
fn cyclic_replicated(copies: usize, name: &str) -> Preset {
    let base = cyclic_system();
    let p = 3 * copies;
    let r = 3 * copies;
    let mut k = DMatrix::zeros(p, r);
    let mut s = DMatrix::zeros(p, r);
    let mut species = Vec::new();
    let mut labels = Vec::new();
    for c in 0..copies {
        for l in 0..3 {
            for j in 0..3 {
                k[(3 * c + l, 3 * c + j)] = base.reactant_matrix()[(l, j)];
                s[(3 * c + l, 3 * c + j)] = base.product_matrix()[(l, j)];
            }
        }
        let tag = if copies == 1 {
            String::new()
        } else {
            format!("{}", c + 1)
        };
        for sp in ["A", "B", "C"] {
            species.push(format!("{sp}{tag}"));
        }
        for lab in base.reaction_labels() {
            labels.push(if copies == 1 {
                lab.clone()
            } else {
                format!("{lab}#{}", c + 1)
            });
        }
    }
    let system = ReactionSystem::new(species, k, s, labels).expect("replicated system is valid");
    let theta: Vec<f64> = (0..copies).flat_map(|_| [0.2, 0.1, 0.2]).collect();
    let y0: Vec<f64> = (0..copies).flat_map(|_| [100.0, 100.0, 100.0]).collect();
    Preset {
        name: name.to_string(),
        system,
        theta_true: RateVector::from_slice(&theta).unwrap(),
        y0: StateVector::from_slice(&y0).unwrap(),
        protocol: Protocol::default(),
    }
}

/// Cyclic network with widely separated rates: one fast and two slow
/// reactions, anchored at y = (10, 20, 10). The stiffness benchmark.
fn cyclic_stiff() -> Preset {
    Preset {
        name: "cyclic3-stiff".into(),
        system: cyclic_system(),
        theta_true: RateVector::from_slice(&[2.0e-6, 1.0e-7, 2.0e-1]).unwrap(),
        y0: StateVector::from_slice(&[10.0, 20.0, 10.0]).unwrap(),
        protocol: Protocol::default(),
    }
}

/// Reaction ladder on species (A, B, C): the first three reactions form the
/// cyclic network, each following block of three adds deaths, alternative
/// conversions, and finally three source reactions.
fn reaction_ladder(r: usize) -> Preset {
    assert!(matches!(r, 3 | 6 | 9 | 12 | 15));
    // (reactants, products, rate) per reaction; species order (A, B, C).
    #[rustfmt::skip]
    let table: [([u32; 3], [u32; 3], f64); 15] = [
        ([2, 0, 0], [0, 2, 0], 0.2),   // 2A -> 2B
        ([1, 1, 0], [0, 0, 3], 0.1),   // A+B -> 3C
        ([0, 0, 2], [2, 0, 0], 0.2),   // 2C -> 2A
        ([2, 0, 0], [0, 0, 0], 0.01),  // 2A -> 0
        ([0, 0, 1], [0, 0, 0], 0.02),  // C -> 0
        ([0, 0, 2], [0, 0, 0], 0.03),  // 2C -> 0
        ([2, 0, 0], [0, 3, 0], 0.1),   // 2A -> 3B
        ([0, 0, 1], [0, 1, 0], 0.06),  // C -> B
        ([0, 0, 1], [2, 0, 0], 0.05),  // C -> 2A
        ([1, 0, 0], [0, 0, 1], 0.1),   // A -> C
        ([0, 1, 1], [1, 0, 0], 0.09),  // B+C -> A
        ([0, 1, 0], [2, 0, 1], 0.08),  // B -> 2A+C
        ([0, 0, 0], [1, 0, 0], 50.0),  // 0 -> A
        ([0, 0, 0], [0, 1, 0], 50.0),  // 0 -> B
        ([0, 0, 0], [0, 0, 1], 50.0),  // 0 -> C
    ];
    let mut k = DMatrix::zeros(3, r);
    let mut s = DMatrix::zeros(3, r);
    let mut theta = Vec::with_capacity(r);
    for (j, (kk, ss, rate)) in table.iter().take(r).enumerate() {
        for l in 0..3 {
            k[(l, j)] = kk[l];
            s[(l, j)] = ss[l];
        }
        theta.push(*rate);
    }
    let labels = (1..=r).map(|j| format!("R{j}")).collect();
    let system = ReactionSystem::new(
        vec!["A".into(), "B".into(), "C".into()],
        k,
        s,
        labels,
    )
    .expect("ladder system is valid");
    Preset {
        name: format!("scaling-r{r}"),
        system,
        theta_true: RateVector::from_slice(&theta).unwrap(),
        y0: StateVector::from_slice(&[100.0, 100.0, 100.0]).unwrap(),
        protocol: Protocol::default(),
    }
}

/// Eight-compartment cell-differentiation system: a self-renewing stem cell,
/// two progenitors, and five mature types, all with linear hazards.
fn hematopoiesis() -> Preset {
    let species = [
        "HSC", "ProgA", "ProgB", "G", "M", "T", "B", "NK",
    ];
    let idx = |name: &str| species.iter().position(|&s| s == name).unwrap();
    // (label, consumed, produced, rate). Duplication produces two stem
    // cells; differentiation converts one cell into one cell of the target
    // type; deaths remove one cell.
    let reactions: Vec<(&str, Vec<(&str, u32)>, Vec<(&str, u32)>, f64)> = vec![
        ("HSC->2HSC", vec![("HSC", 1)], vec![("HSC", 2)], 2850.0),
        ("HSC->ProgA", vec![("HSC", 1)], vec![("ProgA", 1)], 1400.0),
        ("HSC->ProgB", vec![("HSC", 1)], vec![("ProgB", 1)], 700.0),
        ("ProgA->0", vec![("ProgA", 1)], vec![], 50.0),
        ("ProgB->0", vec![("ProgB", 1)], vec![], 40.0),
        ("ProgA->G", vec![("ProgA", 1)], vec![("G", 1)], 3600.0),
        ("ProgA->M", vec![("ProgA", 1)], vec![("M", 1)], 1800.0),
        ("ProgB->T", vec![("ProgB", 1)], vec![("T", 1)], 1000.0),
        ("ProgB->B", vec![("ProgB", 1)], vec![("B", 1)], 2000.0),
        ("ProgB->NK", vec![("ProgB", 1)], vec![("NK", 1)], 1200.0),
        ("G->0", vec![("G", 1)], vec![], 26.0),
        ("M->0", vec![("M", 1)], vec![], 13.0),
        ("T->0", vec![("T", 1)], vec![], 11.0),
        ("B->0", vec![("B", 1)], vec![], 16.0),
        ("NK->0", vec![("NK", 1)], vec![], 9.0),
    ];
    let p = species.len();
    let r = reactions.len();
    let mut k = DMatrix::zeros(p, r);
    let mut s = DMatrix::zeros(p, r);
    let mut theta = Vec::with_capacity(r);
    let mut labels = Vec::with_capacity(r);
    for (j, (label, cons, prod, rate)) in reactions.iter().enumerate() {
        for (sp, n) in cons {
            k[(idx(sp), j)] = *n;
        }
        for (sp, n) in prod {
            s[(idx(sp), j)] = *n;
        }
        theta.push(*rate);
        labels.push(label.to_string());
    }
    let system = ReactionSystem::new(
        species.iter().map(|s| s.to_string()).collect(),
        k,
        s,
        labels,
    )
    .expect("hematopoiesis system is valid");
    let mut y0 = vec![0.0; p];
    y0[0] = 1.0;
    Preset {
        name: "hematopoiesis8".into(),
        system,
        theta_true: RateVector::from_slice(&theta).unwrap(),
        y0: StateVector::from_slice(&y0).unwrap(),
        protocol: Protocol {
            n_replicates: 100,
            n_obs: 4,
            sample_times: Some(vec![0.0, 0.08, 0.11, 0.14, 0.17]),
            ..Protocol::default()
        },
    }
}
