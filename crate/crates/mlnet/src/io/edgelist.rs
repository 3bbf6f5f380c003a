//! Multiplex edge-list files.
//!
//! One edge per line: `layer source target [weight]`, whitespace separated,
//! ids as non-negative integers. Lines starting with `#` are comments,
//! except the two directives
//!
//! ```text
//! #nodes N     declare nodes 0..N-1 even if some never appear in an edge
//! #layers L    declare layers 0..L-1 even if some end up empty
//! ```
//!
//! which exist so that a written network reloads identically even when it
//! has isolated nodes or empty layers. An edge is kept iff its weight is at
//! least `min_weight` (missing weight counts as 1). Kept self-loops are
//! dropped and counted, kept duplicates collapse into one edge and are
//! counted. Node and layer universes are the ids on kept edges plus the
//! directive ranges, densely re-indexed in sorted order.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::MultiLayerNetwork;

/// A parsed network plus the id maps and ingestion counters.
#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: MultiLayerNetwork,
    /// Original node id of each internal index, ascending.
    pub node_ids: Vec<u64>,
    /// Original layer id of each internal index, ascending.
    pub layer_ids: Vec<u64>,
    /// Self-loop lines that met the weight threshold but were dropped.
    pub dropped_self_loops: usize,
    /// Kept edges that repeated an already-kept edge.
    pub collapsed_duplicates: usize,
    /// Edge lines whose weight fell below the threshold.
    pub below_threshold: usize,
}

impl LoadedNetwork {
    /// Internal index of an original node id, if present.
    pub fn node_index(&self, id: u64) -> Option<usize> {
        self.node_ids.binary_search(&id).ok()
    }
}

pub fn load_multiplex_edgelist(path: &Path, min_weight: f64) -> Result<LoadedNetwork> {
    let text = fs::read_to_string(path)?;
    parse_edgelist(&text, min_weight, &path.display().to_string())
}

fn parse_err(path: &str, line: usize, message: String) -> Error {
    Error::Parse { path: path.to_string(), line, message }
}

fn parse_edgelist(text: &str, min_weight: f64, path: &str) -> Result<LoadedNetwork> {
    let mut declared_nodes: Option<u64> = None;
    let mut declared_layers: Option<u64> = None;
    let mut kept: BTreeSet<(u64, u64, u64)> = BTreeSet::new();
    let mut dropped_self_loops = 0usize;
    let mut collapsed_duplicates = 0usize;
    let mut below_threshold = 0usize;

    for (ix, raw) in text.lines().enumerate() {
        let lineno = ix + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            // A directive is '#' immediately followed by its name; anything
            // else (including "# nodes ...") is an ordinary comment.
            let directive = ["nodes", "layers"].into_iter().find_map(|name| {
                let tail = rest.strip_prefix(name)?;
                (tail.is_empty() || tail.starts_with(char::is_whitespace)).then_some((name, tail))
            });
            if let Some((name, tail)) = directive {
                let mut tokens = tail.split_whitespace();
                let value = tokens
                    .next()
                    .ok_or_else(|| parse_err(path, lineno, format!("#{name} needs a count")))?
                    .parse::<u64>()
                    .map_err(|_| {
                        parse_err(path, lineno, format!("#{name} count is not an integer"))
                    })?;
                if tokens.next().is_some() {
                    return Err(parse_err(
                        path,
                        lineno,
                        format!("#{name} takes exactly one count"),
                    ));
                }
                let slot = if name == "nodes" { &mut declared_nodes } else { &mut declared_layers };
                if slot.replace(value).is_some() {
                    return Err(parse_err(path, lineno, format!("duplicate #{name}")));
                }
            }
            continue;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(parse_err(
                path,
                lineno,
                format!("expected 'layer source target [weight]', got {} fields", fields.len()),
            ));
        }
        let mut ids = [0u64; 3];
        for (slot, (name, field)) in ids
            .iter_mut()
            .zip(["layer", "source", "target"].iter().zip(&fields[..3]))
        {
            *slot = field.parse::<u64>().map_err(|_| {
                parse_err(path, lineno, format!("{name} id '{field}' is not a non-negative integer"))
            })?;
        }
        let weight = match fields.get(3) {
            None => 1.0,
            Some(w) => {
                let w: f64 = w.parse().map_err(|_| {
                    parse_err(path, lineno, format!("weight '{w}' is not a number"))
                })?;
                if !w.is_finite() {
                    return Err(parse_err(path, lineno, "weight is not finite".into()));
                }
                w
            }
        };

        if weight < min_weight {
            below_threshold += 1;
            continue;
        }
        let (layer, src, dst) = (ids[0], ids[1], ids[2]);
        if src == dst {
            dropped_self_loops += 1;
            continue;
        }
        if !kept.insert((layer, src, dst)) {
            collapsed_duplicates += 1;
        }
    }

    if kept.is_empty() && (declared_nodes.is_none() || declared_layers.is_none()) {
        return Err(Error::DegenerateInput(format!(
            "{path}: no edges at or above weight {min_weight}"
        )));
    }

    let mut node_set: BTreeSet<u64> = BTreeSet::new();
    let mut layer_set: BTreeSet<u64> = BTreeSet::new();
    for &(l, s, d) in &kept {
        layer_set.insert(l);
        node_set.insert(s);
        node_set.insert(d);
    }
    node_set.extend(0..declared_nodes.unwrap_or(0));
    layer_set.extend(0..declared_layers.unwrap_or(0));
    if node_set.is_empty() || layer_set.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "{path}: declared node and layer counts must be positive"
        )));
    }

    let node_ids: Vec<u64> = node_set.into_iter().collect();
    let layer_ids: Vec<u64> = layer_set.into_iter().collect();
    let n = node_ids.len();
    let mut layers = vec![Array2::<u8>::zeros((n, n)); layer_ids.len()];
    for &(l, s, d) in &kept {
        let li = layer_ids.binary_search(&l).expect("layer id collected above");
        let si = node_ids.binary_search(&s).expect("node id collected above");
        let di = node_ids.binary_search(&d).expect("node id collected above");
        layers[li][[si, di]] = 1;
    }

    Ok(LoadedNetwork {
        network: MultiLayerNetwork::new(layers)?,
        node_ids,
        layer_ids,
        dropped_self_loops,
        collapsed_duplicates,
        below_threshold,
    })
}

/// Writes a network as an edge list that reloads bit-identically: `#nodes`
/// and `#layers` directives first, then one unweighted line per edge in
/// (layer, source, target) order.
pub fn write_edge_list(net: &MultiLayerNetwork, path: &Path) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("#nodes {}\n", net.n()));
    out.push_str(&format!("#layers {}\n", net.num_layers()));
    for (l, a) in net.layers().iter().enumerate() {
        for i in 0..net.n() {
            for j in 0..net.n() {
                if a[[i, j]] == 1 {
                    out.push_str(&format!("{l} {i} {j}\n"));
                }
            }
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}
