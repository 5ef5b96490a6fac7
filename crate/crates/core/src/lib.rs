//! Moulin exact-repair regenerating codes.
//!
//! An `(n, k, d, alpha, beta, M)` regenerating code stores an `M`-symbol file
//! on `n` nodes of `alpha` symbols each, so that any `k` nodes recover the
//! file and any `d` survivors rebuild a failed node from `beta` symbols per
//! helper — with the failed node's content restored exactly, not just
//! functionally. The construction here assembles the code from graded tensor
//! spaces `T^p(V) ⊗ U ⊗ Λ^q(W)` over a prime field, with parity checks
//! induced by a cowedge map and a repair rule driven by coboundary operators.
//!
//! Module map:
//! - [`finite_field`] — GF(p) arithmetic, exact linear algebra, star-vector
//!   configurations.
//! - [`graded_tensor`] — explicit bases for the graded spaces and the four
//!   structural maps (wedge, cowedge, coboundaries).
//! - [`code_params`] — closed-form and generating-function parameter
//!   computation with cross-validation.
//! - [`moulin_code`] — parity-check assembly, encoding, download, and
//!   single/multi-failure repair.
//! - [`storage_sim`] — a deterministic in-process cluster simulator with a
//!   bandwidth ledger.
//! - [`selfcheck`] — the property suites behind the `verify` CLI command.
//!
//! ```
//! use moulin::finite_field::{PrimeField, StarConfig};
//! use moulin::moulin_code::build_instance;
//!
//! # fn main() -> Result<(), Box<dyn std::error::Error>> {
//! let field = PrimeField::new(7)?;
//! let stars = StarConfig::vandermonde(5, 3, 4, field)?;
//! let code = build_instance(5, 3, 4, 3, field, stars)?;
//!
//! let message: Vec<u64> = (0..code.params().file_size).map(|i| i % 7).collect();
//! let shares = code.extract_all(&code.encode(&message)?)?;
//!
//! // any k = 3 shares recover the message
//! let phi = code.download(&shares[1..4])?;
//! assert_eq!(code.decode_message(&phi)?, message);
//!
//! // any d = 4 survivors rebuild node 0 exactly, beta = 3 symbols each
//! let chain = code.complement_chain(&[0])?;
//! let help = (1..5)
//!     .map(|h| code.help_message(&shares[h], &chain))
//!     .collect::<Result<Vec<_>, _>>()?;
//! assert_eq!(help[0].symbols.len() as u64, code.params().beta);
//! assert_eq!(code.repair(&help, &chain)?[0], shares[0]);
//! # Ok(())
//! # }
//! ```

pub mod code_params;
pub mod combinatorics;
pub mod finite_field;
pub mod graded_tensor;
pub mod moulin_code;
pub mod selfcheck;
pub mod storage_sim;

pub use code_params::CodeParams;
pub use finite_field::{FieldMatrix, PrimeField, StarConfig};
pub use graded_tensor::{Middle, SpaceSig, Tensor};
pub use moulin_code::{CodeInstance, FileFunctional, HelpMessage, NodeContent};
pub use storage_sim::Cluster;
