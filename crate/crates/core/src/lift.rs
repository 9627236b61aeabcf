//! Carrying solutions of transformed instances back to the instance they
//! came from.

use crate::algebra::Elem;
use crate::error::Result;
use crate::instance::Assignment;
use crate::irreducible::SplitLift;

#[derive(Debug, Clone)]
enum Step {
    /// Per variable, the previous label of every current element.
    Relabel(Vec<Vec<Elem>>),
    Split(SplitLift),
}

/// A chain of transformations, oldest first.
#[derive(Debug, Clone, Default)]
pub struct Lift {
    steps: Vec<Step>,
}

impl Lift {
    pub fn relabel(&mut self, maps: Vec<Vec<Elem>>) {
        if maps.iter().all(|m| m.iter().enumerate().all(|(i, &x)| i == x)) {
            return;
        }
        self.steps.push(Step::Relabel(maps));
    }

    pub fn split(&mut self, s: SplitLift) {
        if !s.is_identity() {
            self.steps.push(Step::Split(s));
        }
    }

    /// Appends the steps of a later transformation.
    pub fn then(&mut self, later: Lift) {
        self.steps.extend(later.steps);
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn apply(&self, phi: &Assignment) -> Result<Assignment> {
        let mut cur = phi.clone();
        for step in self.steps.iter().rev() {
            cur = match step {
                Step::Relabel(maps) => {
                    Assignment(cur.0.iter().enumerate().map(|(v, &x)| maps[v][x]).collect())
                }
                Step::Split(s) => s.lift(&cur)?,
            };
        }
        Ok(cur)
    }
}

/// The answer of the decision procedure. A satisfiable verdict may carry a
/// solution when one was produced along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Unsat,
    Sat(Option<Assignment>),
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat(_))
    }

    pub fn witness(&self) -> Option<&Assignment> {
        match self {
            Verdict::Sat(Some(w)) => Some(w),
            _ => None,
        }
    }

    pub fn lifted(self, lift: &Lift) -> Result<Verdict> {
        Ok(match self {
            Verdict::Sat(Some(w)) => Verdict::Sat(Some(lift.apply(&w)?)),
            other => other,
        })
    }
}
