//! Resolution of a scenario into core objects. Building a workspace is the
//! validation step: all definitions are constructed and all queries are
//! resolved before any query runs.

use std::collections::HashMap;
use std::fmt::Display;

use conhist::models::MeasurementMode;
use conhist::random::{random_ket, random_pd, random_pd_with_parts, random_unitary};
use conhist::{
    common_refinement, complete_unitary, interval_projector, singlet, spin_ket, unitary_from_hamiltonian, Axis,
    CompositeSpace, Dynamics, History, HistoryEvent, HistoryFamily, Ket, Operator, ProjectiveDecomposition, TimeGrid,
    Tolerances, C64,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::scenario::{
    ClauseDef, DynamicsKind, Expect, FamilyKindDef, ModeDef, OperatorKind, PdKind, QueryKind, Scenario, StateKind,
    StepDef, ToleranceOverrides,
};

/// Scenario tolerances, then command-line overrides, on top of the defaults.
pub fn effective_tolerances(scenario: &ToleranceOverrides, cli: &ToleranceOverrides) -> Tolerances {
    let mut t = Tolerances::default();
    for o in [scenario, cli] {
        t.alg = o.alg.unwrap_or(t.alg);
        t.norm = o.norm.unwrap_or(t.norm);
        t.consistency = o.consistency.unwrap_or(t.consistency);
        t.consistency_floor = o.floor.unwrap_or(t.consistency_floor);
        t.prob = o.prob.unwrap_or(t.prob);
    }
    t
}

#[derive(Debug, Clone)]
pub struct FamilyEntry {
    pub family: HistoryFamily,
    pub dynamics: String,
}

/// A query with every reference resolved.
#[derive(Debug, Clone)]
pub enum Prepared {
    Consistency {
        family: String,
    },
    Weights {
        family: String,
    },
    Probability {
        family: String,
        event: HistoryEvent,
    },
    Conditional {
        family: String,
        target: HistoryEvent,
        given: HistoryEvent,
    },
    Born {
        dynamics: String,
        initial: Ket,
        final_state: Ket,
    },
    CompatiblePds {
        a: String,
        b: String,
    },
    CompatibleFamilies {
        a: String,
        b: String,
        check_consistency: bool,
    },
    Refinement {
        fine: String,
        coarse: String,
    },
    Sample {
        family: String,
        draws: usize,
        seed: Option<u64>,
    },
    Measurement {
        system_dim: usize,
        mode: MeasurementMode,
        amplitudes: Vec<C64>,
    },
    Preparation {
        system_dim: usize,
        amplitudes: Vec<C64>,
    },
    ContextualPreparation {
        targets: Vec<Ket>,
        amplitudes: Vec<C64>,
    },
    Povm {
        pd: String,
        system_dim: usize,
        ancilla: Ket,
        probes: Vec<(String, Ket)>,
    },
    Locality {
        dims: [usize; 3],
        pair_state: Ket,
        dynamics: String,
        pds: Vec<String>,
        distant_states: Vec<Ket>,
    },
    Singlet {
        axis_a: Axis,
        axis_b: Axis,
    },
}

#[derive(Debug, Clone)]
pub struct PreparedQuery {
    pub label: Option<String>,
    pub kind: &'static str,
    pub expect: Option<Expect>,
    pub query: Prepared,
}

#[derive(Debug, Clone)]
pub struct Workspace {
    pub tolerances: Tolerances,
    pub systems: HashMap<String, CompositeSpace>,
    pub states: HashMap<String, Ket>,
    pub operators: HashMap<String, Operator>,
    pub pds: HashMap<String, ProjectiveDecomposition>,
    pub dynamics: HashMap<String, Dynamics>,
    pub families: HashMap<String, FamilyEntry>,
    pub queries: Vec<PreparedQuery>,
}

fn lookup<'a, T>(map: &'a HashMap<String, T>, what: &str, name: &str, at: &str) -> Result<&'a T, CliError> {
    map.get(name)
        .ok_or_else(|| CliError::validation(at, format!("unknown {what} {name:?}")))
}

fn insert<T>(map: &mut HashMap<String, T>, name: &str, value: T, at: &str) -> Result<(), CliError> {
    if map.insert(name.to_string(), value).is_some() {
        return Err(CliError::validation(at, format!("duplicate name {name:?}")));
    }
    Ok(())
}

fn at<E: Display>(location: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::validation(location, e)
}

fn parse_direction(direction: &str, loc: &str) -> Result<(Axis, bool), CliError> {
    let bad = || {
        CliError::validation(
            loc,
            format!("spin direction {direction:?} is not one of x+, x-, y+, y-, z+, z-"),
        )
    };
    let (axis, sign) = direction.split_at_checked(1).ok_or_else(bad)?;
    let axis: Axis = axis.parse().map_err(|_| bad())?;
    match sign {
        "+" => Ok((axis, true)),
        "-" => Ok((axis, false)),
        _ => Err(bad()),
    }
}

fn parse_axis(axis: &str, loc: &str) -> Result<Axis, CliError> {
    axis.parse()
        .map_err(|_| CliError::validation(loc, format!("axis {axis:?} is not one of x, y, z")))
}

impl Workspace {
    pub fn build(scenario: &Scenario, cli_tolerances: &ToleranceOverrides) -> Result<Self, CliError> {
        let tolerances = effective_tolerances(&scenario.tolerances, cli_tolerances);
        let mut ws = Workspace {
            tolerances,
            systems: HashMap::new(),
            states: HashMap::new(),
            operators: HashMap::new(),
            pds: HashMap::new(),
            dynamics: HashMap::new(),
            families: HashMap::new(),
            queries: Vec::new(),
        };
        for (i, s) in scenario.systems.iter().enumerate() {
            let loc = format!("systems[{i}] ({:?})", s.name);
            let space = CompositeSpace::new(s.factors.clone()).map_err(at(&loc))?;
            insert(&mut ws.systems, &s.name, space, &loc)?;
        }
        for (i, s) in scenario.states.iter().enumerate() {
            let loc = format!("states[{i}] ({:?})", s.name);
            let ket = ws.build_state(&s.kind, &loc)?;
            insert(&mut ws.states, &s.name, ket, &loc)?;
        }
        for (i, o) in scenario.operators.iter().enumerate() {
            let loc = format!("operators[{i}] ({:?})", o.name);
            let op = ws.build_operator(&o.kind, &loc)?;
            insert(&mut ws.operators, &o.name, op, &loc)?;
        }
        for (i, p) in scenario.pds.iter().enumerate() {
            let loc = format!("pds[{i}] ({:?})", p.name);
            let mut pd = ws.build_pd(&p.kind, &loc)?;
            if let Some(labels) = &p.labels {
                pd = pd.relabel(labels.clone()).map_err(at(&loc))?;
            }
            insert(&mut ws.pds, &p.name, pd, &loc)?;
        }
        for (i, d) in scenario.dynamics.iter().enumerate() {
            let loc = format!("dynamics[{i}] ({:?})", d.name);
            let dim = lookup(&ws.systems, "system", &d.system, &loc)?.total_dim();
            let grid = TimeGrid::new(d.times.clone()).map_err(at(&loc))?;
            let dynamics = ws.build_dynamics(&d.kind, grid, dim, &loc)?;
            insert(&mut ws.dynamics, &d.name, dynamics, &loc)?;
        }
        for (i, f) in scenario.families.iter().enumerate() {
            let loc = format!("families[{i}] ({:?})", f.name);
            let dynamics = lookup(&ws.dynamics, "dynamics", &f.dynamics, &loc)?;
            let family = ws.build_family(&f.kind, dynamics, &loc)?;
            let entry = FamilyEntry {
                family,
                dynamics: f.dynamics.clone(),
            };
            insert(&mut ws.families, &f.name, entry, &loc)?;
        }
        for (i, q) in scenario.queries.iter().enumerate() {
            let loc = format!("queries[{i}] ({})", q.kind.name());
            let query = ws.prepare(&q.kind, &loc)?;
            ws.queries.push(PreparedQuery {
                label: q.label.clone(),
                kind: q.kind.name(),
                expect: q.expect,
                query,
            });
        }
        Ok(ws)
    }

    fn system(&self, name: &str, loc: &str) -> Result<&CompositeSpace, CliError> {
        lookup(&self.systems, "system", name, loc)
    }

    fn state(&self, name: &str, loc: &str) -> Result<&Ket, CliError> {
        lookup(&self.states, "state", name, loc)
    }

    fn operator(&self, name: &str, loc: &str) -> Result<&Operator, CliError> {
        lookup(&self.operators, "operator", name, loc)
    }

    fn pd(&self, name: &str, loc: &str) -> Result<&ProjectiveDecomposition, CliError> {
        lookup(&self.pds, "pd", name, loc)
    }

    fn family(&self, name: &str, loc: &str) -> Result<&FamilyEntry, CliError> {
        lookup(&self.families, "family", name, loc)
    }

    fn build_state(&self, kind: &StateKind, loc: &str) -> Result<Ket, CliError> {
        let ket = match kind {
            StateKind::Amplitudes { amplitudes, normalize } => {
                let amps: Vec<C64> = amplitudes.iter().map(|z| z.value()).collect();
                if *normalize {
                    Ket::new(amps).and_then(Ket::normalize)
                } else {
                    Ket::normalized(amps, self.tolerances.norm)
                }
                .map_err(at(loc))?
            }
            StateKind::Spin { direction } => {
                let (axis, up) = parse_direction(direction, loc)?;
                spin_ket(axis, up)
            }
            StateKind::Singlet => singlet(),
            StateKind::Basis { system, index } => {
                let d = self.system(system, loc)?.total_dim();
                if *index >= d {
                    return Err(CliError::validation(
                        loc,
                        format!("basis index {index} out of range for dimension {d}"),
                    ));
                }
                Ket::basis(d, *index)
            }
            StateKind::Tensor { parts } => {
                let mut kets = parts.iter().map(|p| self.state(p, loc));
                let first = kets
                    .next()
                    .ok_or_else(|| CliError::validation(loc, "tensor needs at least one part"))??
                    .clone();
                kets.try_fold(first, |acc, k| Ok::<_, CliError>(acc.kron(k?)))?
            }
            StateKind::Random { system, seed } => {
                let d = self.system(system, loc)?.total_dim();
                random_ket(d, &mut ChaCha8Rng::seed_from_u64(*seed))
            }
        };
        Ok(ket)
    }

    fn build_operator(&self, kind: &OperatorKind, loc: &str) -> Result<Operator, CliError> {
        let op = match kind {
            OperatorKind::Matrix { rows } => {
                let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|z| z.value()).collect()).collect();
                Operator::from_rows(&rows).map_err(at(loc))?
            }
            OperatorKind::Dyad { state } => {
                Operator::dyad(self.state(state, loc)?, self.tolerances.norm.max(1e-12)).map_err(at(loc))?
            }
            OperatorKind::Spin { direction } => {
                let (axis, up) = parse_direction(direction, loc)?;
                Operator::dyad(&spin_ket(axis, up), 1e-12).map_err(at(loc))?
            }
            OperatorKind::Interval { positions, lo, hi } => interval_projector(positions, *lo, *hi).map_err(at(loc))?,
            OperatorKind::Identity { system } => Operator::identity(self.system(system, loc)?.total_dim()),
            OperatorKind::Tensor { parts } => {
                let mut ops = parts.iter().map(|p| self.operator(p, loc));
                let first = ops
                    .next()
                    .ok_or_else(|| CliError::validation(loc, "tensor needs at least one part"))??
                    .clone();
                ops.try_fold(first, |acc, o| Ok::<_, CliError>(acc.kron(o?)))?
            }
            OperatorKind::Complement { of } => self.operator(of, loc)?.complement(),
            OperatorKind::Product { factors } => {
                let mut ops = factors.iter().map(|p| self.operator(p, loc));
                let first = ops
                    .next()
                    .ok_or_else(|| CliError::validation(loc, "product needs at least one factor"))??
                    .clone();
                ops.try_fold(first, |acc, o| {
                    let o = o?;
                    if o.dim() != acc.dim() {
                        return Err(CliError::validation(
                            loc,
                            format!("factor dimensions {} and {} differ", acc.dim(), o.dim()),
                        ));
                    }
                    Ok(&acc * o)
                })?
            }
            OperatorKind::RandomUnitary { system, seed } => {
                let d = self.system(system, loc)?.total_dim();
                random_unitary(d, &mut ChaCha8Rng::seed_from_u64(*seed))
            }
        };
        Ok(op)
    }

    fn build_pd(&self, kind: &PdKind, loc: &str) -> Result<ProjectiveDecomposition, CliError> {
        let tol = self.tolerances.alg;
        let pd = match kind {
            PdKind::Projectors { projectors } => {
                let ops = projectors
                    .iter()
                    .map(|p| self.operator(p, loc).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                ProjectiveDecomposition::with_labels(ops, projectors.clone(), tol).map_err(at(loc))?
            }
            PdKind::Spin { axis } => ProjectiveDecomposition::spin(parse_axis(axis, loc)?),
            PdKind::Standard { system } => {
                ProjectiveDecomposition::standard_basis(self.system(system, loc)?.total_dim())
            }
            PdKind::Basis { states } => {
                let kets = states
                    .iter()
                    .map(|s| self.state(s, loc).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                ProjectiveDecomposition::from_basis(&kets, states.clone(), tol).map_err(at(loc))?
            }
            PdKind::Tensor { parts } => {
                let mut pds = parts.iter().map(|p| self.pd(p, loc));
                let first = pds
                    .next()
                    .ok_or_else(|| CliError::validation(loc, "tensor needs at least one part"))??
                    .clone();
                pds.try_fold(first, |acc, p| Ok::<_, CliError>(acc.kron(p?)))?
            }
            PdKind::Trivial { system } => ProjectiveDecomposition::trivial(self.system(system, loc)?.total_dim()),
            PdKind::Refinement { of } => {
                let [a, b] = of.as_slice() else {
                    return Err(CliError::validation(loc, "refinement takes exactly two pds"));
                };
                common_refinement(self.pd(a, loc)?, self.pd(b, loc)?, tol).map_err(at(loc))?
            }
            PdKind::Random { system, seed, parts } => {
                let d = self.system(system, loc)?.total_dim();
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                match parts {
                    Some(n) if (1..=d).contains(n) => random_pd_with_parts(d, *n, &mut rng),
                    Some(n) => {
                        return Err(CliError::validation(
                            loc,
                            format!("cannot split dimension {d} into {n} parts"),
                        ));
                    }
                    None => random_pd(d, &mut rng),
                }
            }
        };
        Ok(pd)
    }

    fn build_dynamics(&self, kind: &DynamicsKind, grid: TimeGrid, dim: usize, loc: &str) -> Result<Dynamics, CliError> {
        let tol = self.tolerances.alg;
        let dynamics = match kind {
            DynamicsKind::Trivial => Dynamics::trivial(grid, dim),
            DynamicsKind::Constant { unitary } => {
                Dynamics::constant(grid, self.operator(unitary, loc)?.clone(), tol).map_err(at(loc))?
            }
            DynamicsKind::Hamiltonian { hamiltonian } => {
                Dynamics::from_hamiltonian(grid, self.operator(hamiltonian, loc)?, tol).map_err(at(loc))?
            }
            DynamicsKind::Steps { steps } => {
                let times = grid.times().to_vec();
                if steps.len() + 1 != times.len() {
                    return Err(CliError::validation(
                        loc,
                        format!("{} steps for {} times", steps.len(), times.len()),
                    ));
                }
                let units = steps
                    .iter()
                    .enumerate()
                    .map(|(m, step)| {
                        let sloc = format!("{loc} step {m}");
                        match step {
                            StepDef::Unitary { unitary } => Ok(self.operator(unitary, &sloc)?.clone()),
                            StepDef::Map { inputs, outputs } => {
                                let get = |names: &[String]| {
                                    names
                                        .iter()
                                        .map(|n| self.state(n, &sloc).cloned())
                                        .collect::<Result<Vec<_>, _>>()
                                };
                                complete_unitary(&get(inputs)?, &get(outputs)?, tol).map_err(at(&sloc))
                            }
                            StepDef::Hamiltonian { hamiltonian } => {
                                let h = self.operator(hamiltonian, &sloc)?;
                                unitary_from_hamiltonian(h, times[m + 1] - times[m], tol).map_err(at(&sloc))
                            }
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Dynamics::from_unitaries(grid, units, tol).map_err(at(loc))?
            }
        };
        if dynamics.dim() != dim {
            return Err(CliError::validation(
                loc,
                format!("dynamics act on dimension {}, system has {dim}", dynamics.dim()),
            ));
        }
        Ok(dynamics)
    }

    fn build_family(&self, kind: &FamilyKindDef, dynamics: &Dynamics, loc: &str) -> Result<HistoryFamily, CliError> {
        let tol = self.tolerances.alg;
        let grid = dynamics.grid().clone();
        let pds = |names: &[String]| {
            names
                .iter()
                .map(|n| self.pd(n, loc).cloned())
                .collect::<Result<Vec<_>, _>>()
        };
        let family = match kind {
            FamilyKindDef::Product { pds: names } => HistoryFamily::product(grid, &pds(names)?).map_err(at(loc))?,
            FamilyKindDef::FixedInitial { initial, pds: names } => {
                let p0 = match (self.states.get(initial), self.operators.get(initial)) {
                    (Some(_), Some(_)) => {
                        return Err(CliError::validation(
                            loc,
                            format!("{initial:?} names both a state and an operator"),
                        ));
                    }
                    (Some(k), None) => Operator::dyad(k, self.tolerances.norm.max(1e-12)).map_err(at(loc))?,
                    (None, Some(p)) => p.clone(),
                    (None, None) => {
                        return Err(CliError::validation(
                            loc,
                            format!("unknown state or operator {initial:?}"),
                        ));
                    }
                };
                HistoryFamily::fixed_initial(grid, &p0, &pds(names)?, tol).map_err(at(loc))?
            }
            FamilyKindDef::Unitary { state } => {
                HistoryFamily::unitary(self.state(state, loc)?, dynamics, self.tolerances.norm.max(1e-12))
                    .map_err(at(loc))?
            }
            FamilyKindDef::Raw { histories } => {
                let hs = histories
                    .iter()
                    .map(|h| {
                        let factors = h
                            .factors
                            .iter()
                            .map(|f| self.operator(f, loc).cloned())
                            .collect::<Result<Vec<_>, _>>()?;
                        Ok(History::new(h.label.clone(), factors))
                    })
                    .collect::<Result<Vec<_>, CliError>>()?;
                HistoryFamily::raw(grid, hs, tol).map_err(at(loc))?
            }
        };
        if family.dim() != dynamics.dim() {
            return Err(CliError::validation(
                loc,
                format!(
                    "family acts on dimension {}, dynamics on {}",
                    family.dim(),
                    dynamics.dim()
                ),
            ));
        }
        Ok(family)
    }

    fn event(&self, family: &FamilyEntry, clauses: &[ClauseDef], loc: &str) -> Result<HistoryEvent, CliError> {
        let mut event = HistoryEvent::new();
        for c in clauses {
            let op = self.operator(&c.operator, loc)?;
            if c.time >= family.family.grid().len() {
                return Err(CliError::validation(
                    loc,
                    format!("time index {} is beyond the grid", c.time),
                ));
            }
            if op.dim() != family.family.dim() {
                return Err(CliError::validation(
                    loc,
                    format!(
                        "operator {:?} has dimension {}, family {}",
                        c.operator,
                        op.dim(),
                        family.family.dim()
                    ),
                ));
            }
            event = event.and(c.time, op.clone());
        }
        Ok(event)
    }

    fn amplitudes(amps: &[crate::complex::CNum], dim: usize, loc: &str) -> Result<Vec<C64>, CliError> {
        if amps.len() != dim {
            return Err(CliError::validation(
                loc,
                format!("{} amplitudes for dimension {dim}", amps.len()),
            ));
        }
        Ok(amps.iter().map(|z| z.value()).collect())
    }

    fn prepare(&self, kind: &QueryKind, loc: &str) -> Result<Prepared, CliError> {
        let q = match kind {
            QueryKind::Consistency { family } => {
                self.family(family, loc)?;
                Prepared::Consistency { family: family.clone() }
            }
            QueryKind::Weights { family } => {
                self.family(family, loc)?;
                Prepared::Weights { family: family.clone() }
            }
            QueryKind::Probability { family, event } => Prepared::Probability {
                family: family.clone(),
                event: self.event(self.family(family, loc)?, event, loc)?,
            },
            QueryKind::Conditional { family, target, given } => {
                let f = self.family(family, loc)?;
                Prepared::Conditional {
                    family: family.clone(),
                    target: self.event(f, target, loc)?,
                    given: self.event(f, given, loc)?,
                }
            }
            QueryKind::Born {
                dynamics,
                initial,
                final_state,
            } => {
                let d = lookup(&self.dynamics, "dynamics", dynamics, loc)?;
                let initial = self.state(initial, loc)?.clone();
                let final_state = self.state(final_state, loc)?.clone();
                if initial.dim() != d.dim() || final_state.dim() != d.dim() {
                    return Err(CliError::validation(loc, "state and dynamics dimensions differ"));
                }
                Prepared::Born {
                    dynamics: dynamics.clone(),
                    initial,
                    final_state,
                }
            }
            QueryKind::CompatiblePds { a, b } => {
                if self.pd(a, loc)?.dim() != self.pd(b, loc)?.dim() {
                    return Err(CliError::validation(loc, "pds act on different dimensions"));
                }
                Prepared::CompatiblePds {
                    a: a.clone(),
                    b: b.clone(),
                }
            }
            QueryKind::CompatibleFamilies {
                a,
                b,
                check_consistency,
            } => {
                let (fa, fb) = (self.family(a, loc)?, self.family(b, loc)?);
                if fa.family.grid() != fb.family.grid() || fa.family.dim() != fb.family.dim() {
                    return Err(CliError::validation(loc, "families live on different history spaces"));
                }
                Prepared::CompatibleFamilies {
                    a: a.clone(),
                    b: b.clone(),
                    check_consistency: *check_consistency,
                }
            }
            QueryKind::Refinement { fine, coarse } => {
                if self.pd(fine, loc)?.dim() != self.pd(coarse, loc)?.dim() {
                    return Err(CliError::validation(loc, "pds act on different dimensions"));
                }
                Prepared::Refinement {
                    fine: fine.clone(),
                    coarse: coarse.clone(),
                }
            }
            QueryKind::Sample { family, draws, seed } => {
                self.family(family, loc)?;
                Prepared::Sample {
                    family: family.clone(),
                    draws: *draws,
                    seed: *seed,
                }
            }
            QueryKind::Measurement {
                system_dim,
                mode,
                amplitudes,
            } => Prepared::Measurement {
                system_dim: *system_dim,
                mode: match mode {
                    ModeDef::Destructive => MeasurementMode::Destructive,
                    ModeDef::VonNeumann => MeasurementMode::VonNeumann,
                },
                amplitudes: Self::amplitudes(amplitudes, *system_dim, loc)?,
            },
            QueryKind::Preparation { system_dim, amplitudes } => Prepared::Preparation {
                system_dim: *system_dim,
                amplitudes: Self::amplitudes(amplitudes, *system_dim, loc)?,
            },
            QueryKind::ContextualPreparation { targets, amplitudes } => {
                let targets = targets
                    .iter()
                    .map(|t| self.state(t, loc).cloned())
                    .collect::<Result<Vec<_>, _>>()?;
                Prepared::ContextualPreparation {
                    amplitudes: Self::amplitudes(amplitudes, targets.len(), loc)?,
                    targets,
                }
            }
            QueryKind::Povm {
                pd,
                system,
                ancilla,
                probes,
            } => {
                let space = self.system(system, loc)?;
                let [ds, da] = space.factors() else {
                    return Err(CliError::validation(
                        loc,
                        "povm system must have two factors (system, ancilla)",
                    ));
                };
                if self.pd(pd, loc)?.dim() != space.total_dim() {
                    return Err(CliError::validation(loc, "pd does not act on the system"));
                }
                let ancilla = self.state(ancilla, loc)?.clone();
                if ancilla.dim() != *da {
                    return Err(CliError::validation(loc, "ancilla state has the wrong dimension"));
                }
                let probes = probes
                    .iter()
                    .map(|p| {
                        let k = self.state(p, loc)?;
                        if k.dim() != *ds {
                            return Err(CliError::validation(
                                loc,
                                format!("probe {p:?} has the wrong dimension"),
                            ));
                        }
                        Ok((p.clone(), k.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Prepared::Povm {
                    pd: pd.clone(),
                    system_dim: *ds,
                    ancilla,
                    probes,
                }
            }
            QueryKind::Locality {
                system,
                pair_state,
                dynamics,
                pds,
                distant_states,
            } => {
                let &[da, db, dc] = self.system(system, loc)?.factors() else {
                    return Err(CliError::validation(
                        loc,
                        "locality system must have three factors (A, B, C)",
                    ));
                };
                lookup(&self.dynamics, "dynamics", dynamics, loc)?;
                for p in pds {
                    self.pd(p, loc)?;
                }
                Prepared::Locality {
                    dims: [da, db, dc],
                    pair_state: self.state(pair_state, loc)?.clone(),
                    dynamics: dynamics.clone(),
                    pds: pds.clone(),
                    distant_states: distant_states
                        .iter()
                        .map(|s| self.state(s, loc).cloned())
                        .collect::<Result<Vec<_>, _>>()?,
                }
            }
            QueryKind::Singlet { axis_a, axis_b } => Prepared::Singlet {
                axis_a: parse_axis(axis_a, loc)?,
                axis_b: parse_axis(axis_b, loc)?,
            },
        };
        Ok(q)
    }
}
