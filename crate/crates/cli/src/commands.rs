use std::fs;

use anyhow::{bail, Context, Result};
use degulab_core::construction::{
    audit_degree_sums, build_construction_with, compute_schedule, verify_homogeneity, AuditMode,
    ConstructionBundle, ConstructionParams, LayerStorage, SeparatorSharing,
};
use degulab_core::graph::VertexSet;
use degulab_core::hosts::{embed_into_almost_regular, random_equipartition_degularity};
use degulab_core::io::save_dgl;
use degulab_core::pair::{check_degular, check_regular_exhaustive, degree_witness_irregularity};
use degulab_core::partition::{
    cascade_audit, check_degular_partition, min_complexity_search, CascadeConfig, SearchConfig, SearchMode,
};
use degulab_core::rounding::{audit_rounding, round_to_simple, round_with_retries, AuditConfig, LogBase};
use degulab_core::separators::{
    build_separator_with, verify_separator, BipartitionSystem, SeparatorConfig, SeparatorJson, SEPARATOR_BALANCE,
};
use degulab_core::tournaments::verify_layer;
use degulab_core::Partition;
use serde::Serialize;
use serde_json::json;

use crate::output::{
    envelope, load_graph, load_json, manifest_path, print_csv, print_json, write_csv, write_json,
};
use crate::{
    AuditRoundArgs, BundleArgs, CascadeArgs, CheckPairArgs, CheckPartitionArgs, Command, ConstructArgs,
    EmbedArgs, EquipartitionArgs, Format, LogBaseArg, ModeArg, ReportArgs, RoundArgs, ScheduleArgs, SearchArgs,
    SeparatorArgs,
};

pub enum Outcome {
    Pass,
    Fail,
}

impl From<bool> for Outcome {
    fn from(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

pub fn run(cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Construct(a) => construct(a),
        Command::Verify(a) => verify(a),
        Command::CheckPair(a) => check_pair(a),
        Command::CheckPartition(a) => check_partition(a),
        Command::Search(a) => search(a),
        Command::CascadeAudit(a) => cascade(a),
        Command::Round(a) => round(a),
        Command::AuditRound(a) => audit_round(a),
        Command::Embed(a) => embed(a),
        Command::Equipartition(a) => equipartition(a),
        Command::Separator(a) => separator(a),
        Command::Schedule(a) => schedule(a),
        Command::Report(a) => report(a),
    }
}

fn params(b: &BundleArgs) -> ConstructionParams {
    let mut p = ConstructionParams::new(b.n, b.s, b.delta, b.c_exp, b.seed);
    if b.per_block {
        p.sharing = SeparatorSharing::PerBlock;
    }
    p
}

fn build(b: &BundleArgs) -> Result<ConstructionBundle> {
    build_construction_with(&params(b)).context("building the construction")
}

fn construct(a: &ConstructArgs) -> Result<Outcome> {
    let mut p = params(&a.bundle);
    if a.total_only {
        p.storage = LayerStorage::TotalOnly;
    }
    let bundle = build_construction_with(&p).context("building the construction")?;
    save_dgl(&bundle.total, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let manifest_file = manifest_path(&a.out);
    write_json(&envelope("construct", a, bundle.manifest()), &manifest_file)?;
    print_json(&envelope(
        "construct",
        a,
        json!({
            "graph": a.out,
            "manifest": manifest_file,
            "n": bundle.total.n(),
            "edges": bundle.total.edge_count(),
            "total_weight": bundle.total.total_weight(),
            "warnings": bundle.warnings,
        }),
    ))?;
    Ok(Outcome::Pass)
}

#[derive(Serialize)]
struct LevelDegreeRow {
    r: usize,
    target: f64,
    max_abs_deviation: f64,
    mode: AuditMode,
    pass: bool,
}

fn degree_rows(bundle: &ConstructionBundle) -> Result<Vec<LevelDegreeRow>> {
    (1..=bundle.s())
        .map(|r| {
            let rep = audit_degree_sums(bundle, r)?;
            Ok(LevelDegreeRow {
                r,
                target: rep.target,
                max_abs_deviation: rep.max_abs_deviation,
                mode: rep.mode,
                pass: rep.pass,
            })
        })
        .collect()
}

fn mode_name(m: AuditMode) -> &'static str {
    match m {
        AuditMode::Exact => "exact",
        AuditMode::ReportOnly => "report-only",
    }
}

fn verify(a: &BundleArgs) -> Result<Outcome> {
    let bundle = build(a)?;
    let homogeneity = verify_homogeneity(&bundle);
    let degree_sums = degree_rows(&bundle)?;
    let tournaments: Vec<_> = bundle.assignments.iter().map(|x| verify_layer(&x.tournament)).collect();
    let separators: Vec<_> = bundle
        .assignments
        .iter()
        .flat_map(|x| x.separators.iter().map(|s| verify_separator(s, SEPARATOR_BALANCE)))
        .collect();
    let finest = bundle.level_partition(bundle.s());
    let finest_check = if finest.ell() >= 2 {
        let zero = check_degular_partition(&bundle.total, &finest, 0.0)?;
        let admissible = 1.0 / finest.ell() as f64;
        let degree = check_degular_partition(&bundle.total, &finest, admissible)?;
        Some(json!({
            "ell": finest.ell(),
            "bad_pairs_at_zero": zero.bad_pairs.len(),
            "eps_admissible": admissible,
            "degree_form_at_admissible": degree.degree_form,
        }))
    } else {
        None
    };
    let finest_ok = finest_check
        .as_ref()
        .is_none_or(|c| c["bad_pairs_at_zero"] == 0 && c["degree_form_at_admissible"] == true);
    let pass = homogeneity.pass
        && degree_sums.iter().all(|r| r.pass)
        && tournaments.iter().all(|t| t.pass)
        && separators.iter().all(|s| s.pass)
        && finest_ok;
    match a.format {
        Format::Csv => print_csv(
            &["r", "max_abs_deviation", "mode"],
            &degree_sums
                .iter()
                .map(|r| vec![r.r.to_string(), r.max_abs_deviation.to_string(), mode_name(r.mode).into()])
                .collect::<Vec<_>>(),
        )?,
        Format::Json => print_json(&envelope(
            "verify",
            a,
            json!({
                "pass": pass,
                "homogeneity": homogeneity,
                "degree_sums": degree_sums,
                "tournaments": tournaments,
                "separators": separators,
                "finest_level": finest_check,
                "manifest": bundle.manifest(),
            }),
        ))?,
    }
    Ok(pass.into())
}

fn check_pair(a: &CheckPairArgs) -> Result<Outcome> {
    let g = load_graph(&a.input.graph, a.input.n)?;
    let sa: VertexSet = VertexSet::new(load_json(&a.a)?)?;
    let sb: VertexSet = VertexSet::new(load_json(&a.b)?)?;
    let degular = check_degular(&g, &sa, &sb, a.eps)?;
    let mut pass = degular.pass;
    let regular = if a.regular {
        let r = check_regular_exhaustive(&g, &sa, &sb, a.eps)?;
        pass &= r.pass;
        Some(r)
    } else {
        None
    };
    let witness = degree_witness_irregularity(&g, &sa, &sb, a.eps)?;
    print_json(&envelope(
        "check-pair",
        a,
        json!({ "pass": pass, "degular": degular, "regular": regular, "degree_witness": witness }),
    ))?;
    Ok(pass.into())
}

fn check_partition(a: &CheckPartitionArgs) -> Result<Outcome> {
    let g = load_graph(&a.input.graph, a.input.n)?;
    let p: Partition = load_json(&a.partition)?;
    let v = check_degular_partition(&g, &p, a.eps)?;
    print_json(&envelope("check-partition", a, &v))?;
    Ok(v.pass.into())
}

fn search(a: &SearchArgs) -> Result<Outcome> {
    let g = load_graph(&a.input.graph, a.input.n)?;
    let cfg = SearchConfig {
        mode: match a.mode {
            ModeArg::Exhaustive => SearchMode::Exhaustive,
            ModeArg::LocalSearch => SearchMode::LocalSearch,
        },
        budget: a.budget,
        restarts: a.restarts,
        steps_per_run: a.steps,
        initial_temperature: a.temperature,
        cooling: a.cooling,
        start: a.start.as_deref().map(load_json).transpose()?,
    };
    let r = min_complexity_search(&g, a.eps, &cfg, a.seed)?;
    if let (Some(out), Some(p)) = (&a.out, &r.partition) {
        write_json(p, out)?;
    }
    print_json(&envelope("search", a, &r))?;
    Ok(r.partition.is_some().into())
}

fn cascade(a: &CascadeArgs) -> Result<Outcome> {
    let bundle = build(&a.bundle)?;
    let z = match &a.partition {
        Some(path) => load_json(path)?,
        None => {
            if a.level > bundle.s() {
                bail!("--level {} exceeds s = {}", a.level, bundle.s());
            }
            bundle.level_partition(a.level)
        }
    };
    let rep = cascade_audit(&bundle, &z, a.eps, a.beta, a.mu, &CascadeConfig { n_floor: a.n_floor })?;
    match a.bundle.format {
        Format::Csv => print_csv(&["r", "beta_r", "bad_pair_count"], &cascade_rows(&rep))?,
        Format::Json => print_json(&envelope("cascade-audit", a, &rep))?,
    }
    Ok(rep.pass.into())
}

fn cascade_rows(rep: &degulab_core::partition::CascadeReport) -> Vec<Vec<String>> {
    rep.csv_rows()
        .into_iter()
        .map(|(r, b, c)| vec![r.to_string(), b.to_string(), c.map(|x| x.to_string()).unwrap_or_default()])
        .collect()
}

fn round(a: &RoundArgs) -> Result<Outcome> {
    let g = load_graph(&a.input.graph, a.input.n)?;
    let (simple, seed_used, audit, retries) = if a.retries > 0 {
        let mut cfg = AuditConfig::new(a.zeta, a.samples, a.seed);
        cfg.min_size = a.min_size;
        let out = round_with_retries(&g, a.seed, &cfg, a.retries)?;
        (out.graph, out.seed, Some(out.audit), out.retries)
    } else {
        (round_to_simple(&g, a.seed), a.seed, None, 0)
    };
    save_dgl(&simple, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let summary = json!({
        "graph": a.out,
        "edges": simple.edge_count(),
        "expected_edges": g.total_weight(),
        "seed_used": seed_used,
        "retries": retries,
        "audit": audit,
    });
    write_json(&envelope("round", a, &summary), &manifest_path(&a.out))?;
    print_json(&envelope("round", a, &summary))?;
    Ok(Outcome::Pass)
}

fn audit_round(a: &AuditRoundArgs) -> Result<Outcome> {
    let gw = load_graph(&a.weighted, a.n)?;
    let gs = load_graph(&a.simple, a.n)?;
    let cfg = AuditConfig {
        zeta: a.zeta,
        samples: a.samples,
        min_size: a.min_size,
        log_base: match a.log_base {
            LogBaseArg::E => LogBase::Natural,
            LogBaseArg::Two => LogBase::Two,
            LogBaseArg::Ten => LogBase::Ten,
        },
        seed: a.seed,
    };
    let rep = audit_rounding(&gw, &gs, &cfg)?;
    print_json(&envelope("audit-round", a, &rep))?;
    Ok(rep.pass.into())
}

fn embed(a: &EmbedArgs) -> Result<Outcome> {
    let g = load_graph(&a.input.graph, a.input.n)?;
    let e = embed_into_almost_regular(&g)?;
    save_dgl(&e.host, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    print_json(&envelope("embed", a, &e.report))?;
    Ok((e.report.induced_matches && e.report.spread <= 1).into())
}

fn equipartition(a: &EquipartitionArgs) -> Result<Outcome> {
    let g = load_graph(&a.input.graph, a.input.n)?;
    let rep = random_equipartition_degularity(&g, a.parts, a.eps, a.seed)?;
    if let Some(out) = &a.out {
        write_json(&rep.partition, out)?;
    }
    print_json(&envelope("equipartition", a, &rep))?;
    Ok(rep.verdict.bad_pairs.is_empty().into())
}

fn separator(a: &SeparatorArgs) -> Result<Outcome> {
    if let Some(path) = &a.verify {
        let json: SeparatorJson = load_json(path)?;
        let sys = BipartitionSystem::from_json(&json)?;
        let rep = verify_separator(&sys, SEPARATOR_BALANCE);
        print_json(&envelope("separator", a, &rep))?;
        return Ok(rep.pass.into());
    }
    let (Some(m), Some(d)) = (a.m, a.d) else {
        bail!("separator needs --m and --d, or --verify FILE");
    };
    let built = build_separator_with(m, d, a.c_exp, a.seed, &SeparatorConfig { retry_cap: a.retry_cap })?;
    let rep = verify_separator(&built.system, SEPARATOR_BALANCE);
    if let Some(out) = &a.out {
        write_json(&built.system.to_json(), out)?;
    }
    print_json(&envelope(
        "separator",
        a,
        json!({ "stage": built.stage, "attempts": built.attempts, "report": rep, "separator": built.system.to_json() }),
    ))?;
    Ok(rep.pass.into())
}

fn schedule(a: &ScheduleArgs) -> Result<Outcome> {
    let sch = compute_schedule(a.s, a.c_exp)?;
    match a.format {
        Format::Json => print_json(&envelope("schedule", a, &sch))?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..=a.s)
                .map(|r| {
                    vec![
                        r.to_string(),
                        sch.m[r].to_string(),
                        if r >= 1 { sch.big_m[r - 1].to_string() } else { String::new() },
                        if r >= 1 { sch.tournament_degree(r).to_string() } else { String::new() },
                    ]
                })
                .collect();
            print_csv(&["r", "m_r", "M_r", "D_r"], &rows)?;
        }
    }
    Ok(Outcome::Pass)
}

fn report(a: &ReportArgs) -> Result<Outcome> {
    let bundle = build(&a.bundle)?;
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let degree_sums = degree_rows(&bundle)?;
    write_csv(
        &a.out_dir.join("degree_sums.csv"),
        &["r", "max_abs_deviation"],
        &degree_sums
            .iter()
            .map(|r| vec![r.r.to_string(), r.max_abs_deviation.to_string()])
            .collect::<Vec<_>>(),
    )?;
    // one coarse partition per level exercises the failure path at r = level + 1
    let mut cascades = Vec::new();
    let mut rows = Vec::new();
    for level in 1..bundle.s() {
        let z = bundle.level_partition(level);
        let rep = cascade_audit(&bundle, &z, a.eps, 0.0, a.mu, &CascadeConfig::default())?;
        for mut row in cascade_rows(&rep) {
            row.insert(0, level.to_string());
            rows.push(row);
        }
        cascades.push(rep);
    }
    write_csv(&a.out_dir.join("cascade.csv"), &["z_level", "r", "beta_r", "bad_pair_count"], &rows)?;
    let pass = degree_sums.iter().all(|r| r.pass) && cascades.iter().all(|c| c.pass);
    write_json(
        &envelope(
            "report",
            a,
            json!({ "pass": pass, "manifest": bundle.manifest(), "degree_sums": degree_sums, "cascades": cascades }),
        ),
        &a.out_dir.join("report.json"),
    )?;
    print_json(&envelope("report", a, json!({ "pass": pass, "out_dir": a.out_dir })))?;
    Ok(pass.into())
}
