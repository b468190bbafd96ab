//! Implementations behind the subcommands. Shared conventions:
//!
//! * every emitted JSON document carries a `provenance` object with the tool
//!   version, the seed in effect (null when the command is deterministic),
//!   and the parameters as resolved after defaulting;
//! * file-system failures map to exit 2, everything content-related to 1.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::anyhow;
use serde_json::{json, Map, Value};

use deident_core::anonymize::{obfuscate_table, AnonymizeConfig};
use deident_core::attack::{reidentification_rate, AdversaryView, ReidentificationSpec};
use deident_core::adversarial::{
    lp_norm, universal_perturbation, AffineClassifier, PNorm, UniversalConfig,
};
use deident_core::celeba::{parse_celeba_attrs, parse_identity_map, ParseError};
use deident_core::image::{
    blur, mask, ms_ssim, pixelate, psnr, read_pnm, ssim, write_pnm, Image, ImageError, MaskRect,
    SsimParams, MS_SSIM_WEIGHTS,
};
use deident_core::rng::RNG_ALGORITHM;
use deident_core::table::marginal_distribution;
use deident_core::{
    build_table, privacy_report, AttributeTable, GroundDistance, PrivacyReport, RandomSource,
};

use crate::{
    usage, AnonymizeArgs, AttackArgs, CliError, CliResult, ImgObfuscateArgs, ImgQualityArgs,
    IngestArgs, PerturbArgs, ReportArgs,
};

// ---------------------------------------------------------------------------
// shared plumbing

fn read_to_string(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Io(anyhow!("reading {}: {e}", path.display())))
}

fn open_reader(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(anyhow!("opening {}: {e}", path.display())))
}

fn write_string(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(anyhow!("writing {}: {e}", path.display())))
}

/// Content errors in an annotation stream are usage problems; only a failing
/// read of an already-open file counts as an I/O error.
fn map_parse(e: ParseError) -> CliError {
    match e {
        ParseError::Io(_) => CliError::Io(e.into()),
        _ => usage(e),
    }
}

fn map_image(e: ImageError) -> CliError {
    match e {
        ImageError::Io(_) => CliError::Io(e.into()),
        _ => usage(e),
    }
}

fn provenance(seed: Option<u64>, parameters: Value) -> Value {
    let mut prov = Map::new();
    prov.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    prov.insert("seed".into(), json!(seed));
    if seed.is_some() {
        prov.insert("rng".into(), json!(RNG_ALGORITHM));
    }
    prov.insert("parameters".into(), parameters);
    Value::Object(prov)
}

fn resolve_seed(requested: Option<u64>) -> u64 {
    requested.unwrap_or_else(rand::random)
}

fn pretty(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable value");
    text.push('\n');
    text
}

/// Prints to stdout, or writes to `out` when given.
fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => write_string(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_name_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_ground(text: &str) -> CliResult<GroundDistance> {
    match text {
        "binary" => Ok(GroundDistance::Binary),
        "uniform" => Ok(GroundDistance::Uniform),
        "ordinal" => Ok(GroundDistance::Ordinal),
        other => Err(usage(anyhow!(
            "unknown ground distance {other:?}; use binary, uniform, or ordinal"
        ))),
    }
}

fn load_table(path: &Path) -> CliResult<AttributeTable> {
    AttributeTable::from_json(&read_to_string(path)?).map_err(usage)
}

/// Re-serializes a table with a provenance header. The result still loads
/// through the ordinary table reader, which ignores the extra key.
fn table_with_provenance(table: &AttributeTable, prov: &Value) -> String {
    let mut doc: Value = serde_json::from_str(&table.to_json()).expect("fresh table JSON");
    doc.as_object_mut()
        .expect("table JSON is an object")
        .insert("provenance".into(), prov.clone());
    pretty(&doc)
}

/// Infinite budgets have no JSON number; mirror the epsilon encoding.
fn budget_json(value: f64) -> Value {
    if value.is_finite() {
        json!(value)
    } else {
        json!("inf")
    }
}

// ---------------------------------------------------------------------------
// ingest

pub fn ingest(args: IngestArgs) -> CliResult<()> {
    let (schema, rows) = parse_celeba_attrs(open_reader(&args.attrs)?).map_err(map_parse)?;
    let identities = parse_identity_map(open_reader(&args.identities)?).map_err(map_parse)?;
    let table = build_table(schema, rows, &identities).map_err(usage)?;

    let prov = provenance(
        None,
        json!({
            "attrs": args.attrs.display().to_string(),
            "identities": args.identities.display().to_string(),
            "out": args.out.display().to_string(),
        }),
    );
    write_string(&args.out, &table_with_provenance(&table, &prov))?;

    let mut marginals = Map::new();
    for name in table.schema().names() {
        let dist = marginal_distribution(&table, name).map_err(usage)?;
        marginals.insert(name.clone(), json!(dist.mass_of(1)));
    }
    let distinct: BTreeSet<&str> = table
        .records()
        .iter()
        .map(|r| r.identity_id.as_str())
        .collect();
    let summary = json!({
        "provenance": prov,
        "table": args.out.display().to_string(),
        "records": table.len(),
        "attributes": table.schema().len(),
        "identities": distinct.len(),
        "marginals": Value::Object(marginals),
    });
    emit(None, &pretty(&summary))
}

// ---------------------------------------------------------------------------
// report

fn render_text_report(report: &PrivacyReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "records: {}  classes: {}  quasi: {}\n",
        report.table_size,
        report.class_count,
        report.quasi.join(", ")
    ));
    out.push_str(&format!("k-anonymity: {}\n", report.k));
    for s in &report.sensitive {
        let key = s
            .worst_class_key
            .iter()
            .map(|(name, v)| format!("{name}={v}"))
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!(
            "{}: l = {:.6}, t = {:.6}  (worst class: {})\n",
            s.attribute,
            s.l,
            s.t,
            if key.is_empty() { "entire table" } else { &key }
        ));
    }
    out
}

pub fn report(args: ReportArgs) -> CliResult<()> {
    let table = load_table(&args.table)?;
    let quasi = parse_name_list(&args.quasi);
    let sensitive = parse_name_list(&args.sensitive);
    let ground = parse_ground(&args.ground_distance)?;
    let report = privacy_report(&table, &quasi, &sensitive, ground).map_err(usage)?;

    let text = match args.format.as_str() {
        "json" => {
            let prov = provenance(
                None,
                json!({
                    "table": args.table.display().to_string(),
                    "quasi": quasi,
                    "sensitive": sensitive,
                    "ground_distance": args.ground_distance,
                }),
            );
            pretty(&json!({ "provenance": prov, "report": report }))
        }
        "text" => render_text_report(&report),
        other => {
            return Err(usage(anyhow!(
                "unknown format {other:?}; use json or text"
            )))
        }
    };
    emit(args.out.as_deref(), &text)
}

// ---------------------------------------------------------------------------
// anonymize

pub fn anonymize(args: AnonymizeArgs) -> CliResult<()> {
    let table = load_table(&args.table)?;
    let config: AnonymizeConfig =
        serde_json::from_str(&read_to_string(&args.config)?).map_err(usage)?;
    let sensitive = parse_name_list(&args.sensitive);
    let quasi = match &args.quasi {
        Some(list) => parse_name_list(list),
        None => table
            .schema()
            .names()
            .iter()
            .filter(|n| !sensitive.contains(n))
            .cloned()
            .collect(),
    };
    let ground = parse_ground(&args.ground_distance)?;
    let seed = resolve_seed(args.seed);

    let result = obfuscate_table(&table, &config, &RandomSource::new(seed)).map_err(usage)?;
    let before = privacy_report(&table, &quasi, &sensitive, ground).map_err(usage)?;
    let after = privacy_report(&result.table, &quasi, &sensitive, ground).map_err(usage)?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| CliError::Io(anyhow!("creating {}: {e}", args.out_dir.display())))?;
    let prov = provenance(
        Some(seed),
        json!({
            "table": args.table.display().to_string(),
            "config": config,
            "quasi": quasi,
            "sensitive": sensitive,
            "ground_distance": args.ground_distance,
        }),
    );

    let table_path = args.out_dir.join("table.json");
    write_string(&table_path, &table_with_provenance(&result.table, &prov))?;

    let trace_path = args.out_dir.join("trace.jsonl");
    let mut trace_text = String::new();
    for trace in &result.traces {
        trace_text.push_str(&serde_json::to_string(trace).expect("serializable trace"));
        trace_text.push('\n');
    }
    write_string(&trace_path, &trace_text)?;

    let before_path = args.out_dir.join("report_before.json");
    write_string(
        &before_path,
        &pretty(&json!({ "provenance": prov, "report": before })),
    )?;
    let after_path = args.out_dir.join("report_after.json");
    write_string(
        &after_path,
        &pretty(&json!({ "provenance": prov, "report": after })),
    )?;

    let flipped: usize = result
        .traces
        .iter()
        .flat_map(|t| &t.decisions)
        .filter(|d| d.perturbed)
        .count();
    let summary = json!({
        "provenance": prov,
        "outputs": {
            "table": table_path.display().to_string(),
            "trace": trace_path.display().to_string(),
            "report_before": before_path.display().to_string(),
            "report_after": after_path.display().to_string(),
        },
        "k_before": before.k,
        "k_after": after.k,
        "flipped_values": flipped,
        "composed_epsilon_per_record": budget_json(
            config.composed_epsilon(table.schema().len())
        ),
    });
    emit(None, &pretty(&summary))
}

// ---------------------------------------------------------------------------
// attack

pub fn attack(args: AttackArgs) -> CliResult<()> {
    let before = load_table(&args.before)?;
    let after = load_table(&args.after)?;
    let mut subsets = Vec::new();
    for part in args.subsets.split(';') {
        let subset = parse_name_list(part);
        if subset.is_empty() {
            return Err(usage(anyhow!(
                "empty attribute subset in {:?}; separate subsets with ';' and \
                 attributes with ','",
                args.subsets
            )));
        }
        subsets.push(subset);
    }
    let view = match args.view.as_str() {
        "original" => AdversaryView::Original,
        "obfuscated" => AdversaryView::Obfuscated,
        other => {
            return Err(usage(anyhow!(
                "unknown view {other:?}; use original or obfuscated"
            )))
        }
    };
    let seed = resolve_seed(args.seed);
    let spec = ReidentificationSpec {
        subsets,
        samples_per_subset: args.samples,
        view,
    };
    let summary =
        reidentification_rate(&before, &after, &spec, &RandomSource::new(seed)).map_err(usage)?;

    let prov = provenance(
        Some(seed),
        json!({
            "before": args.before.display().to_string(),
            "after": args.after.display().to_string(),
            "spec": spec,
        }),
    );
    emit(
        args.out.as_deref(),
        &pretty(&json!({ "provenance": prov, "summary": summary })),
    )
}

// ---------------------------------------------------------------------------
// perturb

pub fn perturb(args: PerturbArgs) -> CliResult<()> {
    let clf = AffineClassifier::from_json(&read_to_string(&args.classifier)?).map_err(usage)?;
    let points: Vec<Vec<f64>> =
        serde_json::from_str(&read_to_string(&args.points)?).map_err(usage)?;
    let norm = match args.norm.as_str() {
        "l2" => PNorm::L2,
        "linf" => PNorm::LInf,
        other => return Err(usage(anyhow!("unknown norm {other:?}; use l2 or linf"))),
    };
    if args.overshoot < 0.0 || args.overshoot.is_nan() {
        return Err(usage(anyhow!(
            "overshoot must be non-negative, got {}",
            args.overshoot
        )));
    }
    if args.max_iters == 0 {
        return Err(usage(anyhow!("max-iters must be at least 1")));
    }
    if let Some(cap) = args.step_cap {
        if cap <= 0.0 || cap.is_nan() {
            return Err(usage(anyhow!("step-cap must be positive, got {cap}")));
        }
    }
    let mut config = UniversalConfig::new(args.xi, args.delta).map_err(usage)?;
    config.norm = norm;
    config.overshoot = args.overshoot;
    config.max_outer_iters = args.max_iters;
    config.step_cap = args.step_cap;

    let seed = resolve_seed(args.seed);
    let result =
        universal_perturbation(&points, &clf, &config, &RandomSource::new(seed)).map_err(usage)?;

    let prov = provenance(
        Some(seed),
        json!({
            "classifier": args.classifier.display().to_string(),
            "points": args.points.display().to_string(),
            "xi": args.xi,
            "delta": args.delta,
            "norm": args.norm,
            "overshoot": args.overshoot,
            "max_iters": args.max_iters,
            "step_cap": args.step_cap,
        }),
    );
    let doc = json!({
        "provenance": prov,
        "v": result.v,
        "norm": args.norm,
        "norm_value": lp_norm(&result.v, norm),
        "fooling_rate": result.fooling_rate,
        "iterations": result.iterations,
        "n_points": points.len(),
        "dim": clf.dim(),
    });
    emit(args.out.as_deref(), &pretty(&doc))
}

// ---------------------------------------------------------------------------
// img

fn read_image(path: &Path) -> CliResult<Image> {
    let mut reader = open_reader(path)?;
    read_pnm(&mut reader).map_err(map_image)
}

fn write_image(path: &Path, image: &Image) -> CliResult<()> {
    let file = File::create(path)
        .map_err(|e| CliError::Io(anyhow!("creating {}: {e}", path.display())))?;
    let mut writer = BufWriter::new(file);
    write_pnm(image, &mut writer).map_err(map_image)?;
    writer
        .flush()
        .map_err(|e| CliError::Io(anyhow!("writing {}: {e}", path.display())))
}

fn parse_fixed_numbers<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|e| usage(anyhow!("bad {what} component {tok:?}: {e}")))
        })
        .collect()
}

pub fn img_obfuscate(args: ImgObfuscateArgs) -> CliResult<()> {
    let image = read_image(&args.input)?;
    let (result, parameters) = match args.method.as_str() {
        "blur" => (
            blur(&image, args.sigma, args.kernel).map_err(map_image)?,
            json!({ "method": "blur", "sigma": args.sigma, "kernel": args.kernel }),
        ),
        "pixelate" => (
            pixelate(&image, args.block).map_err(map_image)?,
            json!({ "method": "pixelate", "block": args.block }),
        ),
        "mask" => {
            let rect_text = args
                .rect
                .as_deref()
                .ok_or_else(|| usage(anyhow!("mask needs --rect x,y,width,height")))?;
            let parts: Vec<usize> = parse_fixed_numbers(rect_text, "rect")?;
            if parts.len() != 4 {
                return Err(usage(anyhow!(
                    "--rect wants four numbers x,y,width,height, got {rect_text:?}"
                )));
            }
            let rect = MaskRect {
                x: parts[0],
                y: parts[1],
                width: parts[2],
                height: parts[3],
            };
            let color: Vec<u8> = match args.color.as_deref() {
                Some(text) => parse_fixed_numbers(text, "color")?,
                None => vec![0; image.channels()],
            };
            (
                mask(&image, rect, &color).map_err(map_image)?,
                json!({ "method": "mask", "rect": parts, "color": color }),
            )
        }
        other => {
            return Err(usage(anyhow!(
                "unknown method {other:?}; use blur, pixelate, or mask"
            )))
        }
    };

    write_image(&args.output, &result)?;
    let mut params = parameters;
    let obj = params.as_object_mut().expect("parameter object");
    obj.insert("input".into(), json!(args.input.display().to_string()));
    obj.insert("output".into(), json!(args.output.display().to_string()));
    let summary = json!({
        "provenance": provenance(None, params),
        "output": args.output.display().to_string(),
        "width": result.width(),
        "height": result.height(),
        "channels": result.channels(),
    });
    emit(None, &pretty(&summary))
}

pub fn img_quality(args: ImgQualityArgs) -> CliResult<()> {
    let reference = read_image(&args.reference)?;
    let test = read_image(&args.test)?;
    let params = SsimParams {
        window: args.window,
        ..SsimParams::default()
    };
    let weights: Vec<f64> = match args.weights.as_deref() {
        Some(text) => parse_fixed_numbers(text, "weight")?,
        None if args.levels == 1 => vec![1.0],
        None if args.levels == MS_SSIM_WEIGHTS.len() => MS_SSIM_WEIGHTS.to_vec(),
        None => {
            return Err(usage(anyhow!(
                "no default weights for {} scales; pass --weights",
                args.levels
            )))
        }
    };

    let psnr_value = psnr(&reference, &test).map_err(map_image)?;
    let ssim_value = ssim(&reference, &test, &params).map_err(map_image)?;
    let ms_value = ms_ssim(&reference, &test, args.levels, &weights, &params).map_err(map_image)?;

    let prov = provenance(
        None,
        json!({
            "reference": args.reference.display().to_string(),
            "test": args.test.display().to_string(),
            "window": args.window,
            "levels": args.levels,
            "weights": weights,
        }),
    );
    let doc = json!({
        "provenance": prov,
        "psnr": psnr_value,
        "ssim": ssim_value,
        "ms_ssim": ms_value,
    });
    emit(args.out.as_deref(), &pretty(&doc))
}
