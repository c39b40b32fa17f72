//! A generic 0/1 solver working only on the flat constraint list. It knows
//! nothing about trees and serves as an independent check of the structured
//! backend on small programs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Capabilities, Constraint, IpInstance, IpSolution, Sense, SolverBackend};
use crate::error::SolveError;

#[derive(Clone, Copy, Debug)]
pub struct FlatBackend {
    pub max_variables: usize,
}

impl Default for FlatBackend {
    fn default() -> Self {
        Self { max_variables: 48 }
    }
}

impl SolverBackend for FlatBackend {
    fn name(&self) -> &str {
        "flat"
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            max_variables: Some(self.max_variables),
            lex_tie_break: false,
        }
    }

    fn solve(&self, ip: &IpInstance, stop: &dyn Fn() -> bool) -> Result<IpSolution, SolveError> {
        let n = ip.variable_count();
        if n > self.max_variables {
            return Err(SolveError::TooLarge {
                backend: format!("flat (max {})", self.max_variables),
                variables: n,
            });
        }
        let constraints = ip.constraints();
        let mut occurs = vec![Vec::new(); n];
        for (c, con) in constraints.iter().enumerate() {
            for &(v, coef) in &con.terms {
                occurs[v].push((c, coef));
            }
        }
        let activity = constraints
            .iter()
            .map(|c| {
                let pos = c.terms.iter().filter(|t| t.1 > 0).map(|t| t.1).sum();
                let neg = c.terms.iter().filter(|t| t.1 < 0).map(|t| -t.1).sum();
                Activity { fixed: 0, pos, neg }
            })
            .collect();
        let mut dfs = Dfs {
            constraints: &constraints,
            occurs: &occurs,
            objective: ip.objective(),
            activity,
            values: vec![false; n],
            best: None,
            stop,
            calls: 0,
        };
        dfs.run(0, 0.0)?;
        let (objective, values) = dfs.best.ok_or(SolveError::Infeasible)?;
        Ok(IpSolution { values, objective })
    }
}

/// Fixed left-hand side plus the free positive and negative mass.
#[derive(Clone, Copy, Debug)]
struct Activity {
    fixed: i64,
    pos: i64,
    neg: i64,
}

impl Activity {
    fn feasible(&self, c: &Constraint) -> bool {
        let (lo, hi) = (self.fixed - self.neg, self.fixed + self.pos);
        match c.sense {
            Sense::Le => lo <= c.rhs,
            Sense::Ge => hi >= c.rhs,
            Sense::Eq => lo <= c.rhs && hi >= c.rhs,
        }
    }
}

struct Dfs<'a> {
    constraints: &'a [Constraint],
    occurs: &'a [Vec<(usize, i64)>],
    objective: Vec<f64>,
    activity: Vec<Activity>,
    values: Vec<bool>,
    best: Option<(f64, Vec<bool>)>,
    stop: &'a dyn Fn() -> bool,
    calls: u64,
}

impl Dfs<'_> {
    fn assign(&mut self, v: usize, value: bool, undo: bool) -> bool {
        let mut ok = true;
        for &(c, coef) in &self.occurs[v] {
            let a = &mut self.activity[c];
            let sign = if undo { -1 } else { 1 };
            if coef > 0 {
                a.pos -= sign * coef;
            } else {
                a.neg -= sign * -coef;
            }
            if value {
                a.fixed += sign * coef;
            }
            ok &= a.feasible(&self.constraints[c]);
        }
        ok
    }

    fn run(&mut self, v: usize, cost: f64) -> Result<(), SolveError> {
        self.calls += 1;
        if self.calls % 4096 == 0 && (self.stop)() {
            return Err(SolveError::Interrupted);
        }
        if v == self.values.len() {
            if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                self.best = Some((cost, self.values.clone()));
            }
            return Ok(());
        }
        for value in [false, true] {
            let next = if value { cost + self.objective[v] } else { cost };
            if self.best.as_ref().is_some_and(|(b, _)| next >= *b) {
                continue;
            }
            self.values[v] = value;
            if self.assign(v, value, false) {
                self.run(v + 1, next)?;
            }
            self.assign(v, value, true);
            self.values[v] = false;
        }
        Ok(())
    }
}
