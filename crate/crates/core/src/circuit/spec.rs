//! Plain-text gate lists.
//!
//! ```text
//! # free-form description, kept on round trip
//! circuit v1
//! inputs 3
//! g1 = AND x1 x2
//! g2 = XOR g1 x3
//! output g2
//! ```
//!
//! Inputs are `x1..xN` (1-based). A gate may reference inputs and gates
//! defined on earlier lines only. The output may name an input directly.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

const DEFAULT10: &str = include_str!("../../circuits/default10.circ");

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateOp {
    And,
    Or,
    Xor,
}

impl GateOp {
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            GateOp::And => a && b,
            GateOp::Or => a || b,
            GateOp::Xor => a ^ b,
        }
    }
}

impl fmt::Display for GateOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GateOp::And => "AND",
            GateOp::Or => "OR",
            GateOp::Xor => "XOR",
        })
    }
}

impl FromStr for GateOp {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "AND" => Ok(GateOp::And),
            "OR" => Ok(GateOp::Or),
            "XOR" => Ok(GateOp::Xor),
            _ => Err(format!("unknown gate `{s}` (expected AND, OR or XOR)")),
        }
    }
}

/// A wire: circuit input (0-based) or the output of an earlier gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ref {
    Input(usize),
    Gate(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub id: String,
    pub op: GateOp,
    pub inputs: [Ref; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitSpec {
    /// Leading comment lines, without the `#`.
    pub description: Vec<String>,
    pub n_inputs: usize,
    pub gates: Vec<Gate>,
    pub output: Ref,
}

fn parse_input_ref(tok: &str) -> Option<usize> {
    let n = tok.strip_prefix('x')?;
    if n.is_empty() || !n.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    n.parse().ok()
}

impl CircuitSpec {
    /// The repo's 10-input, depth-4 circuit.
    pub fn default_circuit() -> Self {
        Self::parse(DEFAULT10, "default10.circ").expect("bundled circuit parses")
    }

    /// `Y = x_k` (1-based `k`) among `n` inputs.
    pub fn passthrough(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Config(format!("passthrough input x{k} outside 1..={n}")));
        }
        Ok(Self {
            description: vec![format!(" Output copies x{k}.")],
            n_inputs: n,
            gates: vec![],
            output: Ref::Input(k - 1),
        })
    }

    /// Single gate over two inputs.
    pub fn two_input(op: GateOp) -> Self {
        Self {
            description: vec![],
            n_inputs: 2,
            gates: vec![Gate {
                id: "y".into(),
                op,
                inputs: [Ref::Input(0), Ref::Input(1)],
            }],
            output: Ref::Gate(0),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(source_name, line, msg);
        let mut description = Vec::new();
        let mut header = false;
        let mut n_inputs: Option<usize> = None;
        let mut gates: Vec<Gate> = Vec::new();
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut output: Option<Ref> = None;
        let mut last_line = 0;

        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            last_line = ln;
            let line = raw.trim();
            if let Some(c) = line.strip_prefix('#') {
                if !header {
                    description.push(c.to_string());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if !header {
                if toks != ["circuit", "v1"] {
                    return Err(err(ln, format!("expected `circuit v1`, found `{line}`")));
                }
                header = true;
                continue;
            }
            if output.is_some() {
                return Err(err(ln, "content after `output` line".into()));
            }
            match toks.as_slice() {
                ["inputs", n] => {
                    if n_inputs.is_some() {
                        return Err(err(ln, "duplicate `inputs` line".into()));
                    }
                    let n: usize = n
                        .parse()
                        .map_err(|_| err(ln, format!("bad input count `{n}`")))?;
                    if n == 0 {
                        return Err(err(ln, "a circuit needs at least one input".into()));
                    }
                    n_inputs = Some(n);
                }
                ["output", r] => {
                    let n = n_inputs.ok_or_else(|| err(ln, "`inputs` must come first".into()))?;
                    output = Some(resolve(r, n, &ids).map_err(|m| err(ln, m))?);
                }
                [id, "=", op, a, b] => {
                    let n = n_inputs.ok_or_else(|| err(ln, "`inputs` must come first".into()))?;
                    if parse_input_ref(id).is_some() || *id == "output" || *id == "inputs" {
                        return Err(err(ln, format!("`{id}` is reserved")));
                    }
                    if !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                        return Err(err(ln, format!("bad gate name `{id}`")));
                    }
                    if ids.contains_key(*id) {
                        return Err(err(ln, format!("gate `{id}` defined twice")));
                    }
                    let op: GateOp = op.parse().map_err(|m| err(ln, m))?;
                    let ra = resolve(a, n, &ids).map_err(|m| err(ln, m))?;
                    let rb = resolve(b, n, &ids).map_err(|m| err(ln, m))?;
                    ids.insert(id.to_string(), gates.len());
                    gates.push(Gate {
                        id: id.to_string(),
                        op,
                        inputs: [ra, rb],
                    });
                }
                _ => {
                    return Err(err(
                        ln,
                        format!("cannot parse `{line}` (expected `<id> = <AND|OR|XOR> <ref> <ref>`)"),
                    ))
                }
            }
        }
        if !header {
            return Err(err(last_line.max(1), "missing `circuit v1` header".into()));
        }
        let n_inputs = n_inputs.ok_or_else(|| err(last_line, "missing `inputs` line".into()))?;
        let output = output.ok_or_else(|| err(last_line, "missing `output` line".into()))?;
        Ok(Self {
            description,
            n_inputs,
            gates,
            output,
        })
    }

    fn ref_name(&self, r: Ref) -> String {
        match r {
            Ref::Input(i) => format!("x{}", i + 1),
            Ref::Gate(g) => self.gates[g].id.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for d in &self.description {
            s.push('#');
            s.push_str(d);
            s.push('\n');
        }
        s.push_str("circuit v1\n");
        s.push_str(&format!("inputs {}\n", self.n_inputs));
        for g in &self.gates {
            s.push_str(&format!(
                "{} = {} {} {}\n",
                g.id,
                g.op,
                self.ref_name(g.inputs[0]),
                self.ref_name(g.inputs[1])
            ));
        }
        s.push_str(&format!("output {}\n", self.ref_name(self.output)));
        s
    }

    /// Evaluates the circuit on explicit input bits.
    pub fn eval(&self, bits: &[bool]) -> Result<bool> {
        if bits.len() != self.n_inputs {
            return Err(Error::Dimension {
                layer: "circuit inputs".into(),
                expected: self.n_inputs.to_string(),
                got: bits.len().to_string(),
            });
        }
        Ok(self.eval_with(|i| bits[i]))
    }

    /// Evaluates on row `row` of the truth table: `x_{i+1}` is bit `i` of `row`.
    pub fn eval_row(&self, row: u64) -> bool {
        self.eval_with(|i| (row >> i) & 1 == 1)
    }

    fn eval_with(&self, input: impl Fn(usize) -> bool) -> bool {
        let mut vals = Vec::with_capacity(self.gates.len());
        let get = |r: Ref, vals: &Vec<bool>| match r {
            Ref::Input(i) => input(i),
            Ref::Gate(g) => vals[g],
        };
        for g in &self.gates {
            let v = g.op.apply(get(g.inputs[0], &vals), get(g.inputs[1], &vals));
            vals.push(v);
        }
        get(self.output, &vals)
    }

    /// Fewest gates on any path from each input to the output; `None` if the
    /// input does not reach it.
    pub fn gates_to_output(&self) -> Vec<Option<usize>> {
        // dist[g] = gates from the output of gate g to Y, inclusive of the final gate.
        let mut dist: Vec<Option<usize>> = vec![None; self.gates.len()];
        let mut input_dist: Vec<Option<usize>> = vec![None; self.n_inputs];
        match self.output {
            Ref::Input(i) => input_dist[i] = Some(0),
            Ref::Gate(g) => dist[g] = Some(1),
        }
        for gi in (0..self.gates.len()).rev() {
            let Some(dg) = dist[gi] else { continue };
            for r in self.gates[gi].inputs {
                match r {
                    Ref::Input(i) => {
                        input_dist[i] = Some(input_dist[i].map_or(dg, |d| d.min(dg)));
                    }
                    Ref::Gate(h) => {
                        dist[h] = Some(dist[h].map_or(dg + 1, |d| d.min(dg + 1)));
                    }
                }
            }
        }
        input_dist
    }

    /// Longest input-to-output path, in gates.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.gates.len()];
        let d = |r: Ref, depth: &Vec<usize>| match r {
            Ref::Input(_) => 0,
            Ref::Gate(g) => depth[g],
        };
        for (gi, g) in self.gates.iter().enumerate() {
            depth[gi] = 1 + d(g.inputs[0], &depth).max(d(g.inputs[1], &depth));
        }
        d(self.output, &depth)
    }
}

fn resolve(tok: &str, n_inputs: usize, ids: &HashMap<String, usize>) -> std::result::Result<Ref, String> {
    if let Some(k) = parse_input_ref(tok) {
        if k == 0 || k > n_inputs {
            return Err(format!("input `{tok}` outside x1..x{n_inputs}"));
        }
        return Ok(Ref::Input(k - 1));
    }
    ids.get(tok)
        .map(|&g| Ref::Gate(g))
        .ok_or_else(|| format!("`{tok}` is not an input or an earlier gate"))
}
