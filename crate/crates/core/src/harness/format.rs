//! The JSON workspace format: algebras with nested operation tables, and
//! instances whose variables range over an algebra or a subuniverse of it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{Elem, FiniteAlgebra, OperationTable};
use crate::error::{Error, Result};
use crate::instance::{intern, Assignment, Constraint, DomainDescriptor, Instance};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperationSpec {
    pub name: String,
    pub arity: usize,
    /// Nested `arity` deep; the innermost index is the last argument.
    pub table: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraSpec {
    pub name: String,
    pub size: usize,
    pub operations: Vec<OperationSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariableSpec {
    pub id: String,
    /// `"full"` or a list of elements forming a subuniverse.
    pub domain: Value,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintSpec {
    pub scope: Vec<String>,
    pub tuples: Vec<Vec<Elem>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub algebra: String,
    pub variables: Vec<VariableSpec>,
    pub constraints: Vec<ConstraintSpec>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct WorkspaceSpec {
    #[serde(default)]
    pub algebras: Vec<AlgebraSpec>,
    #[serde(default)]
    pub instances: Vec<InstanceSpec>,
}

/// A loaded workspace: every algebra validated, every instance checked for
/// invariance. Values in instances are labels of the named algebra.
#[derive(Debug, Clone)]
pub struct Workspace {
    pub algebras: Vec<Arc<FiniteAlgebra>>,
    pub instances: Vec<LoadedInstance>,
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub name: String,
    pub instance: Instance,
}

impl LoadedInstance {
    /// `name=value` lines, sorted by name, in the labels of the file.
    pub fn format_solution(&self, phi: &Assignment) -> String {
        let p = &self.instance;
        let original = Assignment(
            (0..p.num_vars())
                .map(|v| p.domain(v).origin_of(phi.get(v)).unwrap_or(phi.get(v)))
                .collect(),
        );
        p.format_assignment(&original)
    }
}

fn flatten(table: &Value, depth: usize, out: &mut Vec<Elem>, at: &str) -> Result<()> {
    if depth == 0 {
        let x = table
            .as_u64()
            .ok_or_else(|| Error::Input(format!("{at}: expected an element, found {table}")))?;
        out.push(x as Elem);
        return Ok(());
    }
    let rows = table
        .as_array()
        .ok_or_else(|| Error::Input(format!("{at}: expected a nested array")))?;
    for (i, row) in rows.iter().enumerate() {
        flatten(row, depth - 1, out, &format!("{at}[{i}]"))?;
    }
    Ok(())
}

fn nest(table: &[Elem], size: usize, depth: usize) -> Value {
    if depth == 0 {
        return Value::from(table[0]);
    }
    let stride = table.len() / size;
    Value::Array(
        (0..size)
            .map(|i| nest(&table[i * stride..(i + 1) * stride], size, depth - 1))
            .collect(),
    )
}

/// Prefixes input-family errors with a location.
fn context(at: String) -> impl FnOnce(Error) -> Error {
    move |e| match e {
        Error::Input(m) => Error::Input(format!("{at}: {m}")),
        other if other.exit_code() == 2 => Error::Input(format!("{at}: {other}")),
        other => other,
    }
}

pub fn algebra_from_spec(spec: &AlgebraSpec, at: &str) -> Result<FiniteAlgebra> {
    let mut ops = Vec::with_capacity(spec.operations.len());
    for (i, o) in spec.operations.iter().enumerate() {
        let here = format!("{at}.operations[{i}] (`{}`)", o.name);
        let mut flat = Vec::new();
        flatten(&o.table, o.arity, &mut flat, &here)?;
        ops.push(OperationTable::new(&o.name, o.arity, spec.size, flat).map_err(context(here))?);
    }
    FiniteAlgebra::new(&spec.name, spec.size, ops).map_err(context(at.to_string()))
}

pub fn algebra_to_spec(a: &FiniteAlgebra) -> AlgebraSpec {
    AlgebraSpec {
        name: a.id().to_string(),
        size: a.size(),
        operations: a
            .ops()
            .iter()
            .map(|o| OperationSpec {
                name: o.name().to_string(),
                arity: o.arity(),
                table: nest(o.table(), a.size(), o.arity()),
            })
            .collect(),
    }
}

pub fn load_workspace(text: &str) -> Result<Workspace> {
    let spec: WorkspaceSpec =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("malformed workspace: {e}")))?;
    build_workspace(&spec)
}

pub fn build_workspace(spec: &WorkspaceSpec) -> Result<Workspace> {
    let mut algebras: Vec<Arc<FiniteAlgebra>> = Vec::new();
    for (i, a) in spec.algebras.iter().enumerate() {
        let at = format!("algebras[{i}]");
        if algebras.iter().any(|b| b.id() == a.name) {
            return Err(Error::Input(format!("{at}: algebra `{}` defined twice", a.name)));
        }
        let alg = algebra_from_spec(a, &at)?;
        if let Some(first) = algebras.first() {
            if !first.same_signature(&alg) {
                return Err(Error::Signature(format!(
                    "{at}: `{}` does not share the signature of `{}`",
                    alg.id(),
                    first.id()
                )));
            }
        }
        algebras.push(Arc::new(alg));
    }
    let mut instances = Vec::new();
    for (i, inst) in spec.instances.iter().enumerate() {
        let at = format!("instances[{i}]");
        let algebra = algebras
            .iter()
            .find(|a| a.id() == inst.algebra)
            .ok_or_else(|| Error::Input(format!("{at}: unknown algebra `{}`", inst.algebra)))?;
        instances.push(LoadedInstance {
            name: inst.name.clone().unwrap_or_else(|| format!("instance{i}")),
            instance: instance_from_spec(inst, algebra, &at)?,
        });
    }
    Ok(Workspace { algebras, instances })
}

fn instance_from_spec(spec: &InstanceSpec, algebra: &Arc<FiniteAlgebra>, at: &str) -> Result<Instance> {
    let mut names = Vec::with_capacity(spec.variables.len());
    let mut domains = Vec::with_capacity(spec.variables.len());
    // per variable: file label → domain label
    let mut relabel: Vec<Vec<Option<Elem>>> = Vec::with_capacity(spec.variables.len());
    for (j, v) in spec.variables.iter().enumerate() {
        let here = format!("{at}.variables[{j}] (`{}`)", v.id);
        names.push(v.id.clone());
        let base = DomainDescriptor::base(algebra.clone());
        match &v.domain {
            Value::String(s) if s == "full" => {
                relabel.push((0..algebra.size()).map(Some).collect());
                domains.push(base);
            }
            Value::Array(items) => {
                let mut elems = Vec::with_capacity(items.len());
                for x in items {
                    let x = x
                        .as_u64()
                        .ok_or_else(|| Error::Input(format!("{here}: domain entry {x} is not an element")))?
                        as Elem;
                    if x >= algebra.size() {
                        return Err(Error::Input(format!(
                            "{here}: element {x} outside `{}`",
                            algebra.id()
                        )));
                    }
                    elems.push(x);
                }
                let (sub, map) = algebra.subalgebra(&elems).map_err(context(here))?;
                let mut back = vec![None; algebra.size()];
                for (k, &x) in map.iter().enumerate() {
                    back[x] = Some(k);
                }
                relabel.push(back);
                domains.push(base.derive(intern(sub), crate::instance::Provenance::Subset(map)));
            }
            other => {
                return Err(Error::Input(format!(
                    "{here}: domain must be \"full\" or an element list, found {other}"
                )))
            }
        }
    }
    let mut constraints = Vec::with_capacity(spec.constraints.len());
    for (k, c) in spec.constraints.iter().enumerate() {
        let here = format!("{at}.constraints[{k}]");
        let scope: Vec<usize> = c
            .scope
            .iter()
            .map(|id| {
                names
                    .iter()
                    .position(|n| n == id)
                    .ok_or_else(|| Error::Input(format!("{here}: unknown variable `{id}`")))
            })
            .collect::<Result<_>>()?;
        let mut tuples = Vec::with_capacity(c.tuples.len());
        for t in &c.tuples {
            if t.len() != scope.len() {
                return Err(Error::Input(format!(
                    "{here}: tuple {t:?} does not match a scope of length {}",
                    scope.len()
                )));
            }
            // tuples leaving a restricted domain are dropped
            let mapped: Option<Vec<Elem>> = t
                .iter()
                .zip(&scope)
                .map(|(&x, &v)| relabel[v].get(x).copied().flatten())
                .collect();
            if t.iter().any(|&x| x >= algebra.size()) {
                return Err(Error::Input(format!("{here}: tuple {t:?} leaves `{}`", algebra.id())));
            }
            if let Some(m) = mapped {
                tuples.push(m);
            }
        }
        constraints.push(Constraint::new(scope, tuples));
    }
    Instance::new(names, domains, constraints).map_err(context(at.to_string()))
}

/// Writes an instance whose domains are whole algebras.
pub fn instance_to_spec(name: &str, algebra: &str, p: &Instance) -> InstanceSpec {
    InstanceSpec {
        name: Some(name.to_string()),
        algebra: algebra.to_string(),
        variables: p
            .names()
            .iter()
            .map(|n| VariableSpec {
                id: n.clone(),
                domain: Value::from("full"),
            })
            .collect(),
        constraints: p
            .constraints()
            .iter()
            .map(|c| ConstraintSpec {
                scope: c.scope.iter().map(|&v| p.name(v).to_string()).collect(),
                tuples: c.relation.tuples().to_vec(),
            })
            .collect(),
    }
}

pub fn to_json(spec: &WorkspaceSpec) -> String {
    serde_json::to_string_pretty(spec).expect("workspace serializes")
}
