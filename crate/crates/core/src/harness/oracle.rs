//! Outcome sources: a simulated truth, a fixed outcome vector, or a person.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{OdtnInstance, Response};
use crate::transcript::OutcomeOracle;

/// Answers as hypothesis `truth` would. Each `*` is drawn once, on first
/// request, and then repeated.
#[derive(Debug)]
pub struct SimulatedOracle<'a, R: Rng> {
    table: &'a OdtnInstance,
    truth: usize,
    rng: R,
    drawn: Vec<Option<usize>>,
}

impl<'a, R: Rng> SimulatedOracle<'a, R> {
    pub fn new(table: &'a OdtnInstance, truth: usize, rng: R) -> Self {
        SimulatedOracle { table, truth, rng, drawn: vec![None; table.n()] }
    }

    pub fn truth(&self) -> usize {
        self.truth
    }
}

impl<R: Rng> OutcomeOracle for SimulatedOracle<'_, R> {
    fn answer(&mut self, element: usize) -> Result<usize> {
        if element >= self.table.n() {
            return Err(Error::Domain(format!("element {element} out of range")));
        }
        Ok(match self.table.response(element, self.truth) {
            Response::Det(o) => o,
            Response::Star => {
                let omega = self.table.alphabet().len();
                *self.drawn[element].get_or_insert_with(|| self.rng.random_range(0..omega))
            }
        })
    }
}

/// Replays a full outcome vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayOracle {
    outcomes: Vec<usize>,
}

impl ReplayOracle {
    pub fn new(outcomes: Vec<usize>) -> Self {
        ReplayOracle { outcomes }
    }

    /// Outcome vector of `truth` with its stars (in test order) resolved by
    /// `resolution`.
    pub fn for_truth(table: &OdtnInstance, truth: usize, resolution: &[usize]) -> Result<Self> {
        let mut stars = resolution.iter();
        let outcomes = (0..table.n())
            .map(|t| match table.response(t, truth) {
                Response::Det(o) => Ok(o),
                Response::Star => {
                    stars.next().copied().ok_or_else(|| Error::Domain("resolution is shorter than the star count".into()))
                }
            })
            .collect::<Result<_>>()?;
        Ok(ReplayOracle { outcomes })
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }
}

impl OutcomeOracle for ReplayOracle {
    fn answer(&mut self, element: usize) -> Result<usize> {
        self.outcomes.get(element).copied().ok_or_else(|| Error::Domain(format!("element {element} out of range")))
    }
}

/// Asks on `output` and reads answers from `input`. `q`, `quit` or end of
/// input abort the session.
pub struct InteractiveOracle<'a, R: BufRead, W: Write> {
    table: &'a OdtnInstance,
    input: R,
    output: W,
}

impl<'a, R: BufRead, W: Write> InteractiveOracle<'a, R, W> {
    pub fn new(table: &'a OdtnInstance, input: R, output: W) -> Self {
        InteractiveOracle { table, input, output }
    }
}

impl<R: BufRead, W: Write> OutcomeOracle for InteractiveOracle<'_, R, W> {
    fn answer(&mut self, element: usize) -> Result<usize> {
        let alphabet = self.table.alphabet();
        let choices = alphabet.symbols().join("/");
        loop {
            write!(self.output, "{} [{}]? ", self.table.test_name(element), choices)?;
            self.output.flush()?;
            let mut line = String::new();
            if self.input.read_line(&mut line)? == 0 {
                return Err(Error::Aborted);
            }
            let answer = line.trim();
            if answer == "q" || answer == "quit" {
                return Err(Error::Aborted);
            }
            match alphabet.index_of(answer) {
                Some(o) => return Ok(o),
                None => writeln!(self.output, "expected one of {choices}, or q to quit")?,
            }
        }
    }
}
