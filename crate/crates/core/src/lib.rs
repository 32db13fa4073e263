//! Toolkit for the noisy nanopore channel: k-mer state graphs, constrained
//! Markov sources, a segment-duration channel simulator, forward-backward and
//! Viterbi detection, and Monte Carlo achievable-rate estimation.

pub mod channel;
pub mod cli;
pub mod detection;
pub mod error;
pub mod kmer_space;
pub mod logspace;
pub mod oracle;
pub mod rates;
pub mod source;

pub use channel::{simulate, ChannelTrace, NoiseModel, TraceSeed};
pub use detection::{forward_backward, viterbi, DetectorOptions, PosteriorSet, SegmentLikelihood, ViterbiResult};
pub use error::{NncError, Result};
pub use kmer_space::{Base, ChannelMapping, KmerState, StateGraph};
pub use rates::{monte_carlo_rate, MonteCarloConfig, RateEstimate};
pub use source::{parry_kernel, uniform_kernel, DurationModel, MarkovSource};
