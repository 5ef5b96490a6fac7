//! Command-line front end: parameter tables, file encode/decode/repair on
//! real byte streams, the scenario runner, and the self-verification suite.
//!
//! Bytes are packed one per field symbol (hence the modulus must be at
//! least 257 for coding commands), framed by an 8-byte big-endian length
//! prefix and zero-padded to whole M-symbol chunks. Nodes are numbered
//! 0..n-1 and the default star scalars are 0..n-1.

mod share_file;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use moulin::code_params::{closed_form_params, ogf_params};
use moulin::finite_field::{PrimeField, StarConfig};
use moulin::moulin_code::{build_instance, CodeInstance, HelpMessage, NodeContent};
use moulin::selfcheck::{self, Depth};
use moulin::storage_sim::{Cluster, HelperPolicy};

use share_file::{read_share, write_share, ShareFile, ShareHeader};

#[derive(Parser)]
#[command(name = "moulin", version, about = "exact-repair regenerating codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// Total number of nodes
    #[arg(short = 'n', long)]
    nodes: usize,
    /// Nodes needed to recover the file
    #[arg(short = 'k', long)]
    recover: usize,
    /// Helpers contacted to repair a node
    #[arg(short = 'd', long)]
    helpers: usize,
    /// Size parameter (2 = minimum bandwidth, k+1 = minimum storage)
    #[arg(short = 's', long)]
    size: usize,
    /// Field modulus; defaults to the smallest usable prime
    #[arg(long)]
    modulus: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print alpha, beta, M, and beta_c, cross-checked two ways
    Params {
        n: usize,
        k: usize,
        d: usize,
        s: usize,
        /// Largest failure count to tabulate (default k)
        #[arg(long = "c")]
        max_c: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Split a file into n share files
    Encode {
        input: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        /// Directory for share-<h>.moul outputs
        #[arg(short, long)]
        outdir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Recover the original file from any k shares
    Decode {
        /// k share files
        #[arg(required = true)]
        shares: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Skip the parity verification of the reconstructed chunks
        #[arg(long)]
        no_verify: bool,
        #[arg(long)]
        json: bool,
    },
    /// Rebuild failed nodes' shares from d helper shares
    Repair {
        /// d helper share files
        #[arg(required = true)]
        shares: Vec<PathBuf>,
        /// Failed node indices, comma-separated
        #[arg(long, value_delimiter = ',')]
        failed: Vec<usize>,
        #[arg(short, long)]
        outdir: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Replay a scenario script against a simulated cluster
    Simulate {
        script: PathBuf,
        #[command(flatten)]
        code: CodeArgs,
        /// RNG seed (or MOULIN_SEED)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Run the self-verification suites
    Verify {
        /// Extend the grids and trial counts
        #[arg(long)]
        deep: bool,
        /// RNG seed (or MOULIN_SEED)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Params { n, k, d, s, max_c, json } => cmd_params(n, k, d, s, max_c, json),
        Command::Encode { input, code, outdir, json } => cmd_encode(&input, &code, &outdir, json),
        Command::Decode { shares, output, no_verify, json } => {
            cmd_decode(&shares, &output, !no_verify, json)
        }
        Command::Repair { shares, failed, outdir, json } => {
            cmd_repair(&shares, &failed, &outdir, json)
        }
        Command::Simulate { script, code, seed, json } => {
            cmd_simulate(&script, &code, resolve_seed(seed), json)
        }
        Command::Verify { deep, seed, json } => cmd_verify(deep, resolve_seed(seed), json),
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("MOULIN_SEED").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(0)
}

fn cmd_params(n: usize, k: usize, d: usize, s: usize, max_c: Option<usize>, json: bool) -> Result<()> {
    let closed = closed_form_params(n, k, d, s)?;
    let ogf = ogf_params(n, k, d, s)?;
    let max_c = max_c.unwrap_or(k).min(k);
    if json {
        println!("{}", serde_json::to_string_pretty(&closed)?);
    } else {
        let m = closed.file_size as f64;
        println!("(n, k, d, s) = ({n}, {k}, {d}, {s})");
        println!("alpha  = {:<8} (per-node storage), alpha/M = {:.6}", closed.alpha, closed.alpha as f64 / m);
        println!("beta   = {:<8} (per-helper repair), beta/M = {:.6}", closed.beta, closed.beta as f64 / m);
        println!("M      = {:<8} (file size)", closed.file_size);
        for c in 1..=max_c {
            println!("beta_{c} = {:<8} (per helper, {c} joint failures)", closed.beta_c[c - 1]);
        }
    }
    if closed != ogf {
        bail!("closed-form and generating-function parameters disagree: {closed:?} vs {ogf:?}");
    }
    if !json {
        println!(
            "cross-check: generating-function coefficients agree (alpha, beta, M, beta_1..beta_{max_c})"
        );
    }
    Ok(())
}

/// Field for coding commands: at least 257 so each byte is one symbol.
fn coding_field(code: &CodeArgs) -> Result<PrimeField> {
    let field = match code.modulus {
        Some(m) => PrimeField::new(m)?,
        None => PrimeField::smallest_prime_at_least((code.nodes as u64).max(257))?,
    };
    if field.modulus() < 257 {
        bail!(
            "modulus {} cannot pack bytes: use a prime of at least 257",
            field.modulus()
        );
    }
    if (field.modulus() as usize) < code.nodes {
        bail!("modulus {} is smaller than n = {}", field.modulus(), code.nodes);
    }
    Ok(field)
}

fn build(code: &CodeArgs, field: PrimeField) -> Result<CodeInstance> {
    let stars = StarConfig::vandermonde(code.nodes, code.recover, code.helpers, field)?;
    Ok(build_instance(code.nodes, code.recover, code.helpers, code.size, field, stars)?)
}

fn rebuild_from_header(h: &ShareHeader) -> Result<CodeInstance> {
    let field = PrimeField::new(h.modulus)?;
    let stars = StarConfig::vandermonde(h.n, h.k, h.d, field)?;
    Ok(build_instance(h.n, h.k, h.d, h.s, field, stars)?)
}

/// Length-prefixed, zero-padded byte stream, one byte per symbol.
fn bytes_to_chunks(data: &[u8], chunk_symbols: usize) -> Vec<Vec<u64>> {
    let mut stream = Vec::with_capacity(8 + data.len());
    stream.extend_from_slice(&(data.len() as u64).to_be_bytes());
    stream.extend_from_slice(data);
    while stream.len() % chunk_symbols != 0 {
        stream.push(0);
    }
    stream
        .chunks(chunk_symbols)
        .map(|c| c.iter().map(|&b| b as u64).collect())
        .collect()
}

fn chunks_to_bytes(chunks: &[Vec<u64>]) -> Result<Vec<u8>> {
    let mut stream = Vec::with_capacity(chunks.len() * chunks.first().map_or(0, Vec::len));
    for chunk in chunks {
        for &sym in chunk {
            if sym > 255 {
                bail!("decoded symbol {sym} does not fit a byte: corrupt share set");
            }
            stream.push(sym as u8);
        }
    }
    if stream.len() < 8 {
        bail!("decoded stream shorter than its length prefix");
    }
    let mut len_bytes = [0u8; 8];
    len_bytes.copy_from_slice(&stream[..8]);
    let len = u64::from_be_bytes(len_bytes) as usize;
    if 8 + len > stream.len() {
        bail!("length prefix {len} exceeds decoded stream");
    }
    Ok(stream[8..8 + len].to_vec())
}

fn share_path(outdir: &Path, node: usize) -> PathBuf {
    outdir.join(format!("share-{node}.moul"))
}

fn cmd_encode(input: &Path, code: &CodeArgs, outdir: &Path, json: bool) -> Result<()> {
    let field = coding_field(code)?;
    let inst = build(code, field)?;
    let params = inst.params().clone();
    let data = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let chunks = bytes_to_chunks(&data, params.file_size as usize);

    std::fs::create_dir_all(outdir)
        .with_context(|| format!("creating {}", outdir.display()))?;
    let mut payloads: Vec<Vec<u64>> =
        vec![Vec::with_capacity(chunks.len() * params.alpha as usize); params.n];
    for chunk in &chunks {
        let phi = inst.encode(chunk)?;
        for share in inst.extract_all(&phi)? {
            payloads[share.node].extend_from_slice(&share.symbols);
        }
    }
    for (h, symbols) in payloads.into_iter().enumerate() {
        let share = ShareFile {
            header: ShareHeader {
                n: params.n,
                k: params.k,
                d: params.d,
                s: params.s,
                modulus: field.modulus(),
                node: h,
                star_scalar: h as u64,
                chunks: chunks.len() as u64,
            },
            symbols,
        };
        write_share(&share_path(outdir, h), &share)?;
    }
    if json {
        println!(
            "{}",
            serde_json::json!({
                "input_bytes": data.len(),
                "chunks": chunks.len(),
                "nodes": params.n,
                "symbols_per_node": chunks.len() * params.alpha as usize,
                "modulus": field.modulus(),
                "outdir": outdir.display().to_string(),
            })
        );
    } else {
        println!(
            "encoded {} bytes into {} chunks x {} nodes ({} symbols per node) in {}",
            data.len(),
            chunks.len(),
            params.n,
            chunks.len() * params.alpha as usize,
            outdir.display()
        );
    }
    Ok(())
}

fn load_consistent_shares(paths: &[PathBuf]) -> Result<Vec<ShareFile>> {
    let shares: Vec<ShareFile> = paths.iter().map(|p| read_share(p)).collect::<Result<_>>()?;
    let first = &shares[0].header;
    let mut seen = BTreeSet::new();
    for (path, sh) in paths.iter().zip(&shares) {
        if !sh.header.compatible(first) {
            bail!("{}: header disagrees with {}", path.display(), paths[0].display());
        }
        if sh.header.node >= sh.header.n {
            bail!("{}: node index out of range", path.display());
        }
        if sh.header.star_scalar != sh.header.node as u64 {
            bail!(
                "{}: non-default star scalar {} for node {}",
                path.display(),
                sh.header.star_scalar,
                sh.header.node
            );
        }
        if !seen.insert(sh.header.node) {
            bail!("duplicate share for node {}", sh.header.node);
        }
    }
    Ok(shares)
}

/// Splits a share file into its per-chunk node contents.
fn chunk_contents(inst: &CodeInstance, share: &ShareFile) -> Result<Vec<NodeContent>> {
    let alpha = inst.params().alpha as usize;
    let expect = alpha * share.header.chunks as usize;
    if share.symbols.len() != expect {
        bail!(
            "share for node {} holds {} symbols, expected {}",
            share.header.node,
            share.symbols.len(),
            expect
        );
    }
    Ok(share
        .symbols
        .chunks(alpha)
        .map(|c| NodeContent { node: share.header.node, symbols: c.to_vec() })
        .collect())
}

fn cmd_decode(share_paths: &[PathBuf], output: &Path, verify: bool, json: bool) -> Result<()> {
    let shares = load_consistent_shares(share_paths)?;
    let header = shares[0].header.clone();
    if shares.len() != header.k {
        bail!("need exactly k = {} shares, got {}", header.k, shares.len());
    }
    let inst = rebuild_from_header(&header)?;
    let per_node: Vec<Vec<NodeContent>> = shares
        .iter()
        .map(|sh| chunk_contents(&inst, sh))
        .collect::<Result<_>>()?;
    let mut chunks = Vec::with_capacity(header.chunks as usize);
    for c in 0..header.chunks as usize {
        let slice: Vec<NodeContent> = per_node.iter().map(|v| v[c].clone()).collect();
        let phi = inst.download(&slice)?;
        // A corrupted share yields a functional that fits the shares it was
        // solved from but breaks the parity checks it was not.
        if verify && !inst.checks_hold(&phi) {
            bail!("chunk {c}: reconstruction violates the parity checks; a share is corrupt");
        }
        chunks.push(inst.decode_message(&phi)?);
    }
    let bytes = chunks_to_bytes(&chunks)?;
    std::fs::write(output, &bytes).with_context(|| format!("writing {}", output.display()))?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "output_bytes": bytes.len(),
                "chunks": header.chunks,
                "verified": verify,
                "output": output.display().to_string(),
            })
        );
    } else {
        println!("decoded {} bytes to {}", bytes.len(), output.display());
    }
    Ok(())
}

fn cmd_repair(share_paths: &[PathBuf], failed: &[usize], outdir: &Path, json: bool) -> Result<()> {
    if failed.is_empty() {
        bail!("no failed node indices given");
    }
    let shares = load_consistent_shares(share_paths)?;
    let header = shares[0].header.clone();
    let mut failing: Vec<usize> = failed.to_vec();
    failing.sort_unstable();
    failing.dedup();
    for &f in &failing {
        if f >= header.n {
            bail!("failed index {f} out of range for n = {}", header.n);
        }
        if shares.iter().any(|sh| sh.header.node == f) {
            bail!("node {f} is listed as failed but a share for it was supplied");
        }
    }
    if shares.len() != header.d {
        bail!("need exactly d = {} helper shares, got {}", header.d, shares.len());
    }
    let inst = rebuild_from_header(&header)?;
    let chunks = header.chunks as usize;
    let per_node: Vec<Vec<NodeContent>> = shares
        .iter()
        .map(|sh| chunk_contents(&inst, sh))
        .collect::<Result<_>>()?;

    let c = failing.len();
    let k = header.k;
    let mut rebuilt_payloads: Vec<Vec<u64>> = vec![Vec::new(); c];
    let per_helper_per_chunk: u64;
    if c >= k {
        // whole-share fallback: the agent downloads and re-extracts
        per_helper_per_chunk = inst.params().alpha;
        for chunk in 0..chunks {
            let slice: Vec<NodeContent> =
                per_node.iter().take(k).map(|v| v[chunk].clone()).collect();
            let phi = inst.download(&slice)?;
            for (i, &f) in failing.iter().enumerate() {
                rebuilt_payloads[i].extend_from_slice(&inst.extract_node(&phi, f)?.symbols);
            }
        }
    } else {
        let chain = inst.complement_chain(&failing)?;
        per_helper_per_chunk = inst.params().per_helper_bandwidth(c);
        for chunk in 0..chunks {
            let messages: Vec<HelpMessage> = per_node
                .iter()
                .map(|v| inst.help_message(&v[chunk], &chain))
                .collect::<Result<_, _>>()?;
            for (i, content) in inst.repair(&messages, &chain)?.into_iter().enumerate() {
                rebuilt_payloads[i].extend_from_slice(&content.symbols);
            }
        }
    }

    std::fs::create_dir_all(outdir)
        .with_context(|| format!("creating {}", outdir.display()))?;
    for (i, &f) in failing.iter().enumerate() {
        let share = ShareFile {
            header: ShareHeader { node: f, star_scalar: f as u64, ..header.clone() },
            symbols: rebuilt_payloads[i].clone(),
        };
        write_share(&share_path(outdir, f), &share)?;
    }
    let expected = inst.params().per_helper_bandwidth(c);
    if json {
        println!(
            "{}",
            serde_json::json!({
                "rebuilt": failing,
                "helpers": header.d,
                "symbols_per_helper_per_chunk": per_helper_per_chunk,
                "expected_beta_c": expected,
                "symbols_per_helper_total": per_helper_per_chunk * chunks as u64,
                "outdir": outdir.display().to_string(),
            })
        );
    } else {
        println!(
            "rebuilt {:?} from {} helpers: {} symbols per helper per chunk (beta_{c} = {}), {} total per helper",
            failing,
            header.d,
            per_helper_per_chunk,
            expected,
            per_helper_per_chunk * chunks as u64,
        );
    }
    Ok(())
}

fn cmd_simulate(script: &Path, code: &CodeArgs, seed: u64, json: bool) -> Result<()> {
    let field = match code.modulus {
        Some(m) => PrimeField::new(m)?,
        None => PrimeField::smallest_prime_at_least((code.nodes as u64).max(257))?,
    };
    let inst = build(code, field)?;
    let text = std::fs::read_to_string(script)
        .with_context(|| format!("reading {}", script.display()))?;
    let mut cluster = Cluster::new(inst, seed).with_policy(HelperPolicy::LowestIndex);
    let report = cluster.run_scenario(&text)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for (i, event) in report.events.iter().enumerate() {
            println!("event {i}: {event:?}");
        }
        for r in &report.ledger.records {
            println!(
                "repair {:?} via {:?}: {} symbols/helper, {} total",
                r.failing, r.helpers, r.symbols_per_helper, r.total
            );
        }
        println!("integrity: {}", if report.integrity_ok { "ok" } else { "FAILED" });
    }
    if !report.integrity_ok {
        bail!("final integrity check failed");
    }
    Ok(())
}

fn cmd_verify(deep: bool, seed: u64, json: bool) -> Result<()> {
    let depth = if deep { Depth::Deep } else { Depth::Standard };
    let results = selfcheck::run_all(depth, seed);
    let mut ok = true;
    if json {
        println!("{}", serde_json::to_string_pretty(&results)?);
        ok = results.iter().all(|r| r.passed);
    } else {
        for r in &results {
            println!(
                "{} {:<28} {}",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.detail
            );
            ok &= r.passed;
        }
    }
    if !ok {
        bail!("verification failed");
    }
    Ok(())
}
