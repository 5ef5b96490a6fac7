//! A deterministic in-process cluster simulator: n nodes holding shares,
//! failure injection, centralized repair with a bandwidth ledger, and a
//! line-oriented scenario script runner.
//!
//! Script grammar, one event per line (`#` starts a comment):
//!
//! ```text
//! STORE <hex>          # message symbols, fixed-width big-endian, zero-padded to M
//! FAIL <i,j,...>       # mark healthy nodes failed (0-based)
//! REPAIR               # centralized repair of all failed nodes
//! DOWNLOAD <i,j,...>   # download from k nodes, compare against the stored message
//! CHECK                # integrity check from the lowest-index k healthy nodes
//! ```

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::moulin_code::{CodeError, CodeInstance, HelpMessage, NodeContent};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("cluster already holds a file")]
    AlreadyStored,
    #[error("no file stored")]
    NothingStored,
    #[error("node {0} is not healthy")]
    NotHealthy(usize),
    #[error("node {0} has not failed")]
    NotFailed(usize),
    #[error("{healthy} healthy nodes cannot serve {needed} helpers")]
    NotEnoughHelpers { healthy: usize, needed: usize },
    #[error("script error at line {line}: {message}")]
    Script { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeState {
    Healthy(NodeContent),
    Failed,
}

/// How repair events choose their d helpers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HelperPolicy {
    /// The d healthy nodes with the lowest indices.
    #[default]
    LowestIndex,
    /// A seeded pseudo-random d-subset of the healthy nodes.
    Random,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct RepairRecord {
    pub failing: Vec<usize>,
    pub helpers: Vec<usize>,
    pub symbols_per_helper: u64,
    pub total: u64,
    /// Reserved for the cooperative model; never populated.
    pub cooperative_total: Option<u64>,
}

/// Per-repair bandwidth accounting.
#[derive(Debug, Clone, Default, Serialize, PartialEq, Eq)]
pub struct BandwidthLedger {
    pub records: Vec<RepairRecord>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub enum Event {
    Store { symbols: usize },
    Fail { nodes: Vec<usize> },
    Warning { message: String },
    Repair { record: RepairRecord },
    Download { nodes: Vec<usize>, matches_stored: bool },
    Check { ok: bool },
}

/// Scenario outcome: the event log, the ledger, and the final integrity
/// verdict.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub seed: u64,
    pub events: Vec<Event>,
    pub ledger: BandwidthLedger,
    pub integrity_ok: bool,
}

/// The cluster state machine. Nodes are numbered 0..n-1.
pub struct Cluster {
    instance: CodeInstance,
    states: Vec<NodeState>,
    stored: Option<Vec<u64>>,
    policy: HelperPolicy,
    seed: u64,
    rng: ChaCha8Rng,
    pub events: Vec<Event>,
    pub ledger: BandwidthLedger,
}

impl Cluster {
    pub fn new(instance: CodeInstance, seed: u64) -> Self {
        let n = instance.params().n;
        Cluster {
            instance,
            states: vec![NodeState::Failed; n],
            stored: None,
            policy: HelperPolicy::LowestIndex,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            events: Vec::new(),
            ledger: BandwidthLedger::default(),
        }
    }

    pub fn with_policy(mut self, policy: HelperPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn instance(&self) -> &CodeInstance {
        &self.instance
    }

    pub fn stored_message(&self) -> Option<&[u64]> {
        self.stored.as_deref()
    }

    pub fn healthy_nodes(&self) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, NodeState::Healthy(_)))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn failed_nodes(&self) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, NodeState::Failed))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn share(&self, node: usize) -> Option<&NodeContent> {
        match &self.states[node] {
            NodeState::Healthy(c) => Some(c),
            NodeState::Failed => None,
        }
    }

    /// Encodes the message and installs all n shares.
    pub fn store(&mut self, message: &[u64]) -> Result<(), SimError> {
        if self.stored.is_some() {
            return Err(SimError::AlreadyStored);
        }
        let phi = self.instance.encode(message)?;
        let shares = self.instance.extract_all(&phi)?;
        for (i, share) in shares.into_iter().enumerate() {
            self.states[i] = NodeState::Healthy(share);
        }
        self.stored = Some(message.to_vec());
        self.events.push(Event::Store { symbols: message.len() });
        Ok(())
    }

    /// Marks nodes failed, warning when repair or the file itself becomes
    /// unreachable.
    pub fn fail(&mut self, nodes: &[usize]) -> Result<(), SimError> {
        if self.stored.is_none() {
            return Err(SimError::NothingStored);
        }
        for &f in nodes {
            if f >= self.states.len() {
                return Err(SimError::Code(CodeError::BadNodeIndex(f)));
            }
            if !matches!(self.states[f], NodeState::Healthy(_)) {
                return Err(SimError::NotHealthy(f));
            }
        }
        for &f in nodes {
            self.states[f] = NodeState::Failed;
        }
        self.events.push(Event::Fail { nodes: nodes.to_vec() });
        let healthy = self.healthy_nodes().len();
        let d = self.instance.params().d;
        let k = self.instance.params().k;
        if healthy < k {
            self.push_warning(format!(
                "only {healthy} healthy nodes left, below k = {k}: file at risk"
            ));
        } else if healthy < d {
            self.push_warning(format!(
                "only {healthy} healthy nodes left, below d = {d}: repair impossible"
            ));
        }
        Ok(())
    }

    fn push_warning(&mut self, message: String) {
        self.events.push(Event::Warning { message });
    }

    fn choose_helpers(&mut self, needed: usize) -> Result<Vec<usize>, SimError> {
        let healthy = self.healthy_nodes();
        if healthy.len() < needed {
            return Err(SimError::NotEnoughHelpers { healthy: healthy.len(), needed });
        }
        Ok(match self.policy {
            HelperPolicy::LowestIndex => healthy[..needed].to_vec(),
            HelperPolicy::Random => {
                let mut chosen: Vec<usize> =
                    healthy.choose_multiple(&mut self.rng, needed).copied().collect();
                chosen.sort_unstable();
                chosen
            }
        })
    }

    /// Centralized repair of every failed node: d helpers send beta_c
    /// symbols each (or whole shares when c >= k), the agent rebuilds and
    /// reinstalls. Returns the ledger record.
    pub fn repair_all(&mut self) -> Result<RepairRecord, SimError> {
        if self.stored.is_none() {
            return Err(SimError::NothingStored);
        }
        let failing = self.failed_nodes();
        if failing.is_empty() {
            return Err(SimError::NotFailed(usize::MAX));
        }
        let d = self.instance.params().d;
        let k = self.instance.params().k;
        let c = failing.len();
        let helpers = self.choose_helpers(d)?;

        let rebuilt: Vec<NodeContent>;
        let per_helper: u64;
        if c >= k {
            // Degenerate repair: every helper ships its whole share; the
            // agent downloads from k of them and re-extracts.
            per_helper = self.instance.params().alpha;
            let shares: Vec<NodeContent> = helpers
                .iter()
                .take(k)
                .map(|&h| self.share(h).expect("helper healthy").clone())
                .collect();
            let phi = self.instance.download(&shares)?;
            rebuilt = failing
                .iter()
                .map(|&f| self.instance.extract_node(&phi, f))
                .collect::<Result<_, _>>()?;
        } else {
            let chain = self.instance.complement_chain(&failing)?;
            let messages: Vec<HelpMessage> = helpers
                .iter()
                .map(|&h| self.instance.help_message(self.share(h).expect("healthy"), &chain))
                .collect::<Result<_, _>>()?;
            per_helper = messages[0].symbols.len() as u64;
            rebuilt = self.instance.repair(&messages, &chain)?;
        }
        for content in rebuilt {
            let node = content.node;
            self.states[node] = NodeState::Healthy(content);
        }
        let record = RepairRecord {
            failing,
            helpers: helpers.clone(),
            symbols_per_helper: per_helper,
            total: per_helper * d as u64,
            cooperative_total: None,
        };
        self.ledger.records.push(record.clone());
        self.events.push(Event::Repair { record: record.clone() });
        Ok(record)
    }

    /// Downloads from the given nodes and compares against the stored
    /// message.
    pub fn download_from(&mut self, nodes: &[usize]) -> Result<Vec<u64>, SimError> {
        let stored = self.stored.clone().ok_or(SimError::NothingStored)?;
        let shares: Vec<NodeContent> = nodes
            .iter()
            .map(|&h| {
                if h >= self.states.len() {
                    return Err(SimError::Code(CodeError::BadNodeIndex(h)));
                }
                self.share(h).cloned().ok_or(SimError::NotHealthy(h))
            })
            .collect::<Result<_, _>>()?;
        let phi = self.instance.download(&shares)?;
        let message = self.instance.decode_message(&phi)?;
        let matches_stored = message == stored;
        self.events.push(Event::Download { nodes: nodes.to_vec(), matches_stored });
        Ok(message)
    }

    /// Integrity check from the lowest-index k healthy nodes.
    pub fn check(&mut self) -> Result<bool, SimError> {
        let stored = self.stored.clone().ok_or(SimError::NothingStored)?;
        let k = self.instance.params().k;
        let healthy = self.healthy_nodes();
        if healthy.len() < k {
            self.events.push(Event::Check { ok: false });
            return Ok(false);
        }
        let shares: Vec<NodeContent> = healthy[..k]
            .iter()
            .map(|&h| self.share(h).expect("healthy").clone())
            .collect();
        let phi = self.instance.download(&shares)?;
        let ok = self.instance.decode_message(&phi)? == stored;
        self.events.push(Event::Check { ok });
        Ok(ok)
    }

    /// Parses and replays a scenario script. Aborts on the first violated
    /// precondition, reporting the 1-based line number.
    pub fn run_scenario(&mut self, script: &str) -> Result<ScenarioReport, SimError> {
        let width = crate::storage_sim::symbol_width(self.instance.field().modulus());
        for (lineno, raw) in script.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fail = |message: String| SimError::Script { line: lineno + 1, message };
            let mut parts = line.split_whitespace();
            let verb = parts.next().unwrap();
            let arg = parts.next();
            if parts.next().is_some() {
                return Err(fail(format!("trailing tokens after {verb}")));
            }
            match (verb, arg) {
                ("STORE", Some(hex)) => {
                    let bytes = parse_hex(hex).map_err(&fail)?;
                    if bytes.len() % width != 0 {
                        return Err(fail(format!(
                            "hex length must be a multiple of the {width}-byte symbol width"
                        )));
                    }
                    let m = self.instance.params().file_size as usize;
                    let mut symbols: Vec<u64> = bytes
                        .chunks(width)
                        .map(|c| c.iter().fold(0u64, |acc, &b| (acc << 8) | b as u64))
                        .collect();
                    if symbols.len() > m {
                        return Err(fail(format!("more than M = {m} symbols")));
                    }
                    if symbols.iter().any(|&s| s >= self.instance.field().modulus()) {
                        return Err(fail("symbol out of field range".into()));
                    }
                    symbols.resize(m, 0);
                    self.store(&symbols).map_err(|e| fail(e.to_string()))?;
                }
                ("FAIL", Some(list)) => {
                    let nodes = parse_index_list(list).map_err(&fail)?;
                    self.fail(&nodes).map_err(|e| fail(e.to_string()))?;
                }
                ("REPAIR", None) => {
                    self.repair_all().map_err(|e| fail(e.to_string()))?;
                }
                ("DOWNLOAD", Some(list)) => {
                    let nodes = parse_index_list(list).map_err(&fail)?;
                    self.download_from(&nodes).map_err(|e| fail(e.to_string()))?;
                }
                ("CHECK", None) => {
                    self.check().map_err(|e| fail(e.to_string()))?;
                }
                _ => return Err(fail(format!("unrecognized event: {line}"))),
            }
        }
        let integrity_ok = if self.stored.is_some() {
            self.check()?
        } else {
            true
        };
        Ok(ScenarioReport {
            seed: self.seed,
            events: self.events.clone(),
            ledger: self.ledger.clone(),
            integrity_ok,
        })
    }
}

/// Bytes per serialized field element: the smallest width that holds any
/// value below the modulus.
pub fn symbol_width(modulus: u64) -> usize {
    let bits = 64 - (modulus - 1).leading_zeros() as usize;
    bits.div_ceil(8).max(1)
}

fn parse_hex(s: &str) -> Result<Vec<u8>, String> {
    if !s.len().is_multiple_of(2) {
        return Err("odd-length hex string".into());
    }
    (0..s.len() / 2)
        .map(|i| u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|e| e.to_string()))
        .collect()
}

fn parse_index_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| e.to_string()))
        .collect()
}
