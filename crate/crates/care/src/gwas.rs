//! GWAS summary-statistics input: parsing, allele harmonization, and
//! sigma-based LD pruning.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CareError, Result};

/// One SNP's association row from a single GWAS file.
#[derive(Clone, Debug, PartialEq)]
pub struct GwasRecord {
    pub snp_id: String,
    pub effect_allele: String,
    pub other_allele: String,
    /// Per-allele effect in trait units.
    pub beta: f64,
    /// Standard error of `beta`, strictly positive.
    pub se: f64,
    /// Effect-allele frequency in (0, 1), when reported.
    pub eaf: Option<f64>,
    /// Sample size, when reported.
    pub n: Option<u64>,
}

/// One SNP's harmonized exposure/outcome association pair. `beta_y` has
/// already been sign-flipped when the outcome effect allele matched the
/// exposure other allele.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryPair {
    pub snp_id: String,
    pub beta_x: f64,
    pub se_x: f64,
    pub beta_y: f64,
    pub se_y: f64,
}

/// Pairwise linkage disequilibrium between two SNPs.
#[derive(Clone, Debug, PartialEq)]
pub struct LdPair {
    pub snp_a: String,
    pub snp_b: String,
    pub r2: f64,
}

/// Maps file columns to their roles. Header matching is case-insensitive.
#[derive(Clone, Debug)]
pub struct ColumnMap {
    pub snp: String,
    pub effect_allele: String,
    pub other_allele: String,
    pub beta: String,
    pub se: String,
    pub eaf: String,
    pub n: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            snp: "snp".into(),
            effect_allele: "effect_allele".into(),
            other_allele: "other_allele".into(),
            beta: "beta".into(),
            se: "se".into(),
            eaf: "eaf".into(),
            n: "n".into(),
        }
    }
}

/// Result of parsing one GWAS file: records in file order plus the number
/// of malformed rows that were dropped.
#[derive(Clone, Debug)]
pub struct ParsedGwas {
    pub records: Vec<GwasRecord>,
    pub dropped: usize,
}

/// How to treat palindromic (A/T, C/G) SNPs during harmonization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PalindromePolicy {
    /// Drop every palindromic SNP.
    Drop,
    /// Align by comparing effect-allele frequencies to 0.5; drop the SNP if
    /// either frequency lies within `eaf_window` of 0.5 or is missing.
    Infer { eaf_window: f64 },
}

impl Default for PalindromePolicy {
    fn default() -> Self {
        PalindromePolicy::Infer { eaf_window: 0.08 }
    }
}

/// Harmonized pairs plus per-reason drop counts.
#[derive(Clone, Debug, Default)]
pub struct Harmonized {
    pub pairs: Vec<SummaryPair>,
    pub dropped_palindromic: usize,
    pub dropped_irreconcilable: usize,
}

fn open_reader(path: &Path) -> Result<BufReader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|source| CareError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(BufReader::new(file))
}

/// Picks the delimiter from a header line: tab when present, comma otherwise.
fn detect_delimiter(header: &str) -> u8 {
    if header.contains('\t') {
        b'\t'
    } else {
        b','
    }
}

fn column_index(
    header: &csv::StringRecord,
    name: &str,
    required: bool,
    path: &Path,
) -> Result<Option<usize>> {
    let idx = header
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name));
    if idx.is_none() && required {
        return Err(CareError::MissingColumn {
            column: name.to_string(),
            path: path.display().to_string(),
        });
    }
    Ok(idx)
}

/// Parses a delimited GWAS summary file with a header row.
///
/// The delimiter is auto-detected from the header (tab preferred, comma
/// fallback) unless `delimiter` overrides it. Rows with a non-finite beta
/// or standard error, `se <= 0`, an empty SNP id, or missing alleles are
/// dropped and counted. An unparseable or out-of-range `eaf`/`n` value only
/// clears that optional field.
pub fn parse_gwas(
    path: impl AsRef<Path>,
    columns: &ColumnMap,
    delimiter: Option<u8>,
) -> Result<ParsedGwas> {
    let path = path.as_ref();
    let delim = match delimiter {
        Some(d) => d,
        None => {
            let mut first = String::new();
            open_reader(path)?
                .read_line(&mut first)
                .map_err(|source| CareError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
            detect_delimiter(&first)
        }
    };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .flexible(true)
        .from_reader(open_reader(path)?);

    let header = reader
        .headers()
        .map_err(|e| CareError::Domain(format!("bad header in '{}': {e}", path.display())))?
        .clone();

    let snp = column_index(&header, &columns.snp, true, path)?.unwrap();
    let ea = column_index(&header, &columns.effect_allele, true, path)?.unwrap();
    let oa = column_index(&header, &columns.other_allele, true, path)?.unwrap();
    let beta = column_index(&header, &columns.beta, true, path)?.unwrap();
    let se = column_index(&header, &columns.se, true, path)?.unwrap();
    let eaf = column_index(&header, &columns.eaf, false, path)?;
    let n = column_index(&header, &columns.n, false, path)?;

    let mut records = Vec::new();
    let mut dropped = 0usize;
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                dropped += 1;
                continue;
            }
        };
        let field = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let beta_val = field(beta).parse::<f64>();
        let se_val = field(se).parse::<f64>();
        let snp_id = field(snp).to_string();
        let effect_allele = field(ea).to_ascii_uppercase();
        let other_allele = field(oa).to_ascii_uppercase();
        match (beta_val, se_val) {
            (Ok(b), Ok(s))
                if b.is_finite()
                    && s.is_finite()
                    && s > 0.0
                    && !snp_id.is_empty()
                    && !effect_allele.is_empty()
                    && !other_allele.is_empty() =>
            {
                let eaf_val = eaf
                    .and_then(|i| field(i).parse::<f64>().ok())
                    .filter(|f| f.is_finite() && *f > 0.0 && *f < 1.0);
                let n_val = n.and_then(|i| field(i).parse::<u64>().ok()).filter(|&v| v > 0);
                records.push(GwasRecord {
                    snp_id,
                    effect_allele,
                    other_allele,
                    beta: b,
                    se: s,
                    eaf: eaf_val,
                    n: n_val,
                });
            }
            _ => dropped += 1,
        }
    }

    if records.is_empty() {
        return Err(CareError::EmptyInput(path.display().to_string()));
    }
    Ok(ParsedGwas { records, dropped })
}

fn complement_base(b: char) -> Option<char> {
    match b {
        'A' => Some('T'),
        'T' => Some('A'),
        'C' => Some('G'),
        'G' => Some('C'),
        _ => None,
    }
}

fn complement_allele(allele: &str) -> Option<String> {
    allele.chars().map(complement_base).collect()
}

fn is_palindromic(effect: &str, other: &str) -> bool {
    effect.len() == 1 && complement_allele(effect).as_deref() == Some(other)
}

/// Sign of the outcome beta after aligning outcome alleles to the exposure
/// pair, or `None` when the alleles cannot be reconciled.
fn align_sign(exp_ea: &str, exp_oa: &str, out_ea: &str, out_oa: &str) -> Option<f64> {
    if out_ea == exp_ea && out_oa == exp_oa {
        return Some(1.0);
    }
    if out_ea == exp_oa && out_oa == exp_ea {
        return Some(-1.0);
    }
    let (cea, coa) = (complement_allele(out_ea)?, complement_allele(out_oa)?);
    if cea == exp_ea && coa == exp_oa {
        return Some(1.0);
    }
    if cea == exp_oa && coa == exp_ea {
        return Some(-1.0);
    }
    None
}

/// Inner-joins exposure and outcome records on SNP id and aligns alleles.
///
/// Swapped outcome alleles flip the sign of `beta_y`; strand complements
/// are resolved before the comparison. Palindromic SNPs follow `policy`.
/// Duplicate ids keep the first occurrence. Output preserves exposure file
/// order. Fails when fewer than 3 pairs survive, since downstream selection
/// needs at least 3 instruments.
pub fn harmonize(
    exposure: &[GwasRecord],
    outcome: &[GwasRecord],
    policy: PalindromePolicy,
) -> Result<Harmonized> {
    let mut out_index: HashMap<&str, &GwasRecord> = HashMap::with_capacity(outcome.len());
    for rec in outcome {
        out_index.entry(rec.snp_id.as_str()).or_insert(rec);
    }

    let mut result = Harmonized::default();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for exp in exposure {
        if seen.insert(exp.snp_id.as_str(), ()).is_some() {
            continue;
        }
        let Some(out) = out_index.get(exp.snp_id.as_str()) else {
            continue;
        };

        let sign = if is_palindromic(&exp.effect_allele, &exp.other_allele) {
            match policy {
                PalindromePolicy::Drop => {
                    result.dropped_palindromic += 1;
                    continue;
                }
                PalindromePolicy::Infer { eaf_window } => {
                    let Some(base) = align_sign(
                        &exp.effect_allele,
                        &exp.other_allele,
                        &out.effect_allele,
                        &out.other_allele,
                    ) else {
                        result.dropped_irreconcilable += 1;
                        continue;
                    };
                    let (Some(eaf_x), Some(eaf_y)) = (exp.eaf, out.eaf) else {
                        result.dropped_palindromic += 1;
                        continue;
                    };
                    // The outcome frequency expressed for the exposure effect
                    // allele under the string alignment.
                    let aligned_eaf_y = if base > 0.0 { eaf_y } else { 1.0 - eaf_y };
                    if (eaf_x - 0.5).abs() < eaf_window || (eaf_y - 0.5).abs() < eaf_window {
                        result.dropped_palindromic += 1;
                        continue;
                    }
                    if (eaf_x - 0.5) * (aligned_eaf_y - 0.5) > 0.0 {
                        base
                    } else {
                        // Frequencies disagree: the outcome row is on the
                        // opposite strand, which for a palindrome swaps the
                        // alleles relative to the string match.
                        -base
                    }
                }
            }
        } else {
            match align_sign(
                &exp.effect_allele,
                &exp.other_allele,
                &out.effect_allele,
                &out.other_allele,
            ) {
                Some(s) => s,
                None => {
                    result.dropped_irreconcilable += 1;
                    continue;
                }
            }
        };

        result.pairs.push(SummaryPair {
            snp_id: exp.snp_id.clone(),
            beta_x: exp.beta,
            se_x: exp.se,
            beta_y: sign * out.beta,
            se_y: out.se,
        });
    }

    if result.pairs.len() < 3 {
        return Err(CareError::InsufficientOverlap {
            found: result.pairs.len(),
            required: 3,
        });
    }
    Ok(result)
}

/// Greedy sigma-based LD pruning.
///
/// Repeatedly keeps the remaining SNP with the smallest exposure standard
/// error (ties broken by `snp_id`) and removes every SNP linked to it with
/// `r2 > r2_threshold`. Keeping the smallest-sigma variant rather than the
/// smallest p-value avoids reintroducing a selection on the effect size.
/// Output preserves the input order of survivors; ids absent from `pairs`
/// are ignored; SNPs absent from `ld` are treated as unlinked.
pub fn sigma_prune(
    pairs: &[SummaryPair],
    ld: &[LdPair],
    r2_threshold: f64,
) -> Result<Vec<SummaryPair>> {
    if !(r2_threshold > 0.0 && r2_threshold <= 1.0) {
        return Err(CareError::Config(format!(
            "r2_threshold must be in (0, 1], got {r2_threshold}"
        )));
    }

    let index: HashMap<&str, usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, p)| (p.snp_id.as_str(), i))
        .collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); pairs.len()];
    for link in ld {
        if link.r2 <= r2_threshold {
            continue;
        }
        let (Some(&a), Some(&b)) = (index.get(link.snp_a.as_str()), index.get(link.snp_b.as_str()))
        else {
            continue;
        };
        if a == b {
            continue;
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }

    // Visiting SNPs in (se_x, snp_id) order and skipping ones already removed
    // is equivalent to repeatedly extracting the argmin.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        pairs[a]
            .se_x
            .partial_cmp(&pairs[b].se_x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| pairs[a].snp_id.cmp(&pairs[b].snp_id))
    });

    let mut removed = vec![false; pairs.len()];
    let mut kept = vec![false; pairs.len()];
    for i in order {
        if removed[i] {
            continue;
        }
        kept[i] = true;
        removed[i] = true;
        for &j in &adjacency[i] {
            removed[j] = true;
        }
    }

    Ok(pairs
        .iter()
        .enumerate()
        .filter(|(i, _)| kept[*i])
        .map(|(_, p)| p.clone())
        .collect())
}

/// Parses an LD file with header columns `snp_a`, `snp_b`, `r2`. Rows with
/// an r² outside [0, 1] or identical ids are dropped and counted.
pub fn parse_ld(path: impl AsRef<Path>, delimiter: Option<u8>) -> Result<(Vec<LdPair>, usize)> {
    let path = path.as_ref();
    let delim = match delimiter {
        Some(d) => d,
        None => {
            let mut first = String::new();
            open_reader(path)?
                .read_line(&mut first)
                .map_err(|source| CareError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
            detect_delimiter(&first)
        }
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .flexible(true)
        .from_reader(open_reader(path)?);
    let header = reader
        .headers()
        .map_err(|e| CareError::Domain(format!("bad header in '{}': {e}", path.display())))?
        .clone();
    let a = column_index(&header, "snp_a", true, path)?.unwrap();
    let b = column_index(&header, "snp_b", true, path)?.unwrap();
    let r2 = column_index(&header, "r2", true, path)?.unwrap();

    let mut out = Vec::new();
    let mut dropped = 0usize;
    for row in reader.records() {
        let Ok(row) = row else {
            dropped += 1;
            continue;
        };
        let field = |i: usize| row.get(i).map(str::trim).unwrap_or("");
        let snp_a = field(a).to_string();
        let snp_b = field(b).to_string();
        match field(r2).parse::<f64>() {
            Ok(v) if (0.0..=1.0).contains(&v) && !snp_a.is_empty() && snp_a != snp_b => {
                out.push(LdPair { snp_a, snp_b, r2: v });
            }
            _ => dropped += 1,
        }
    }
    Ok((out, dropped))
}

/// Writes harmonized pairs as TSV with full round-trip float precision.
pub fn write_pairs_tsv<W: Write>(pairs: &[SummaryPair], mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "snp_id\tbeta_x\tse_x\tbeta_y\tse_y")?;
    for p in pairs {
        writeln!(
            writer,
            "{}\t{}\t{}\t{}\t{}",
            p.snp_id, p.beta_x, p.se_x, p.beta_y, p.se_y
        )?;
    }
    Ok(())
}

/// Reads pairs written by [`write_pairs_tsv`].
pub fn read_pairs_tsv<R: BufRead>(reader: R) -> Result<Vec<SummaryPair>> {
    let mut pairs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CareError::Io {
            path: "<pairs tsv>".into(),
            source,
        })?;
        if lineno == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(CareError::Domain(format!(
                "pairs TSV line {} has {} fields, expected 5",
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| CareError::Domain(format!("pairs TSV line {}: {e}", lineno + 1)))
        };
        pairs.push(SummaryPair {
            snp_id: fields[0].to_string(),
            beta_x: parse(fields[1])?,
            se_x: parse(fields[2])?,
            beta_y: parse(fields[3])?,
            se_y: parse(fields[4])?,
        });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn record(id: &str, ea: &str, oa: &str, beta: f64) -> GwasRecord {
        GwasRecord {
            snp_id: id.into(),
            effect_allele: ea.into(),
            other_allele: oa.into(),
            beta,
            se: 0.01,
            eaf: Some(0.3),
            n: None,
        }
    }

    #[test]
    fn parses_standard_rows() {
        let f = write_file("snp\teffect_allele\tother_allele\tbeta\tse\teaf\nrs1\tA\tG\t0.02\t0.004\t0.31\n");
        let parsed = parse_gwas(f.path(), &ColumnMap::default(), None).unwrap();
        assert_eq!(parsed.dropped, 0);
        assert_eq!(
            parsed.records,
            vec![GwasRecord {
                snp_id: "rs1".into(),
                effect_allele: "A".into(),
                other_allele: "G".into(),
                beta: 0.02,
                se: 0.004,
                eaf: Some(0.31),
                n: None,
            }]
        );
    }

    #[test]
    fn drops_zero_se_rows() {
        let f = write_file(
            "snp\teffect_allele\tother_allele\tbeta\tse\nrs1\tA\tG\t0.02\t0\nrs2\tA\tG\t0.01\t0.004\n",
        );
        let parsed = parse_gwas(f.path(), &ColumnMap::default(), None).unwrap();
        assert_eq!(parsed.dropped, 1);
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].snp_id, "rs2");
    }

    #[test]
    fn counts_malformed_rows_in_synthetic_file() {
        // 100 rows, 3 malformed: one NaN beta, one negative se, one empty id.
        let mut content = String::from("snp,effect_allele,other_allele,beta,se\n");
        for i in 0..97 {
            content.push_str(&format!("rs{i},A,G,0.01,0.002\n"));
        }
        content.push_str("rs97,A,G,NaN,0.002\n");
        content.push_str("rs98,A,G,0.01,-1\n");
        content.push_str(",A,G,0.01,0.002\n");
        let f = write_file(&content);
        let parsed = parse_gwas(f.path(), &ColumnMap::default(), None).unwrap();
        assert_eq!(parsed.records.len(), 97);
        assert_eq!(parsed.dropped, 3);
    }

    #[test]
    fn missing_required_column_is_named() {
        let f = write_file("snp\teffect_allele\tbeta\tse\nrs1\tA\t0.02\t0.004\n");
        let err = parse_gwas(f.path(), &ColumnMap::default(), None).unwrap_err();
        match err {
            CareError::MissingColumn { column, .. } => assert_eq!(column, "other_allele"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_file("snp\teffect_allele\tother_allele\tbeta\tse\n");
        assert!(matches!(
            parse_gwas(f.path(), &ColumnMap::default(), None),
            Err(CareError::EmptyInput(_))
        ));
    }

    #[test]
    fn comma_fallback_detection() {
        let f = write_file("snp,effect_allele,other_allele,beta,se\nrs1,A,G,0.02,0.004\n");
        let parsed = parse_gwas(f.path(), &ColumnMap::default(), None).unwrap();
        assert_eq!(parsed.records.len(), 1);
    }

    #[test]
    fn swapped_alleles_flip_sign() {
        let exposure = vec![record("rs1", "A", "G", 0.02), record("rs2", "A", "G", 0.01), record("rs3", "A", "G", 0.01)];
        let outcome = vec![record("rs1", "G", "A", 0.01), record("rs2", "A", "G", 0.03), record("rs3", "A", "G", 0.02)];
        let h = harmonize(&exposure, &outcome, PalindromePolicy::Drop).unwrap();
        assert_eq!(h.pairs[0].beta_y, -0.01);
        assert_eq!(h.pairs[1].beta_y, 0.03);
    }

    #[test]
    fn palindrome_drop_policy() {
        let exposure = vec![
            record("rs1", "A", "T", 0.02),
            record("rs2", "A", "G", 0.01),
            record("rs3", "C", "G", 0.01),
            record("rs4", "A", "G", 0.01),
            record("rs5", "A", "G", 0.01),
        ];
        let outcome = exposure.clone();
        let h = harmonize(&exposure, &outcome, PalindromePolicy::Drop).unwrap();
        assert_eq!(h.dropped_palindromic, 2);
        assert!(h.pairs.iter().all(|p| p.snp_id != "rs1" && p.snp_id != "rs3"));
    }

    #[test]
    fn strand_complement_alignment() {
        // Exposure A/G; outcome on the other strand is T/C (same direction).
        let exposure = vec![record("rs1", "A", "G", 0.02), record("rs2", "A", "G", 0.01), record("rs3", "A", "G", 0.01)];
        let mut outcome = exposure.clone();
        outcome[0].effect_allele = "T".into();
        outcome[0].other_allele = "C".into();
        outcome[0].beta = 0.05;
        let h = harmonize(&exposure, &outcome, PalindromePolicy::Drop).unwrap();
        assert_eq!(h.pairs[0].beta_y, 0.05);
    }

    #[test]
    fn insufficient_overlap_is_an_error() {
        let exposure = vec![record("rs1", "A", "G", 0.02)];
        let outcome = vec![record("rs1", "A", "G", 0.01)];
        assert!(matches!(
            harmonize(&exposure, &outcome, PalindromePolicy::Drop),
            Err(CareError::InsufficientOverlap { found: 1, .. })
        ));
    }

    fn pair(id: &str, se_x: f64) -> SummaryPair {
        SummaryPair {
            snp_id: id.into(),
            beta_x: 0.01,
            se_x,
            beta_y: 0.005,
            se_y: 0.01,
        }
    }

    #[test]
    fn empty_ld_prunes_nothing() {
        let pairs = vec![pair("a", 0.001), pair("b", 0.002)];
        let out = sigma_prune(&pairs, &[], 0.001).unwrap();
        assert_eq!(out, pairs);
    }

    #[test]
    fn smallest_se_wins_within_linked_group() {
        let pairs = vec![pair("a", 0.001), pair("b", 0.002)];
        let ld = vec![LdPair {
            snp_a: "a".into(),
            snp_b: "b".into(),
            r2: 0.5,
        }];
        let out = sigma_prune(&pairs, &ld, 0.001).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].snp_id, "a");
    }

    #[test]
    fn ld_below_threshold_keeps_both() {
        let pairs = vec![pair("a", 0.001), pair("b", 0.002)];
        let ld = vec![LdPair {
            snp_a: "a".into(),
            snp_b: "b".into(),
            r2: 0.0005,
        }];
        let out = sigma_prune(&pairs, &ld, 0.001).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn unknown_ld_ids_are_ignored() {
        let pairs = vec![pair("a", 0.001)];
        let ld = vec![LdPair {
            snp_a: "a".into(),
            snp_b: "zzz".into(),
            r2: 0.9,
        }];
        let out = sigma_prune(&pairs, &ld, 0.001).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn tie_breaks_lexicographically() {
        let pairs = vec![pair("b", 0.001), pair("a", 0.001)];
        let ld = vec![LdPair {
            snp_a: "a".into(),
            snp_b: "b".into(),
            r2: 0.9,
        }];
        let out = sigma_prune(&pairs, &ld, 0.001).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].snp_id, "a");
    }
}
