use std::io::Write;

use super::{PosteriorSet, ViterbiResult};
use crate::kmer_space::StateGraph;

/// `l,argmax_kmer,max_psi,entropy_bits` per segment.
pub fn write_symbol_report<W: Write>(post: &PosteriorSet, g: &StateGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "l,argmax_kmer,max_psi,entropy_bits")?;
    for l in 1..=post.segments() {
        let (s, p) = post.argmax(l);
        writeln!(w, "{},{},{:.12},{:.12}", l, g.kmer(s), p, post.entropy_bits(l))?;
    }
    Ok(())
}

/// `l,kmer,t_start,t_end` per segment, with inclusive sample ranges.
pub fn write_segmentation_csv<W: Write>(v: &ViterbiResult, g: &StateGraph, mut w: W) -> std::io::Result<()> {
    writeln!(w, "l,kmer,t_start,t_end")?;
    let mut start = 1;
    for (l, (&s, &t)) in v.states.iter().zip(&v.jump_times).enumerate() {
        writeln!(w, "{},{},{},{}", l + 1, g.kmer(s), start, t)?;
        start = t + 1;
    }
    Ok(())
}
