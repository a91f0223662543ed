use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use trisk_lts::harness::{
    convergence_study, gain_percent, mesh_metrics, optimal_ratio, reference_solution, run_report, run_simulation,
    write_run_outputs, RunConfig,
};
use trisk_lts::mesh::{generate_icosphere_mesh, generate_refined_mesh, read_mesh, write_mesh, RefineSpec};
use trisk_lts::operators::read_field_dump;
use trisk_lts::partition::{
    check_plan, class_name, concentrate_interface, imbalance_metrics, make_block_plan, partition_multiconstraint,
    plan_summary_csv, read_partition_file, write_partition_file, CellGraph,
};
use trisk_lts::regions::{build_region_map, fine_by_size, fine_in_cap, read_region_file, validate, write_region_file, RegionClass};
use trisk_lts::{Error, Result};

use crate::{ConvergeArgs, MeshArgs, Overrides, PartitionArgs, RegionsArgs, ReportArgs, RunArgs};

/// `# key = value` lines naming the subcommand and its effective settings.
fn header(command: &str, settings: &[(&str, String)]) -> String {
    let mut s = format!("trisk-lts {command} {}\n", env!("CARGO_PKG_VERSION"));
    for (k, v) in settings {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

fn commented(text: &str) -> String {
    text.lines().map(|l| format!("# {l}\n")).collect()
}

/// Prepends the header as `#` comments to a file that was just written.
fn stamp(path: &Path, head: &str) -> Result<()> {
    let body = std::fs::read_to_string(path)?;
    std::fs::write(path, commented(head) + &body)?;
    Ok(())
}

fn lon_lat(v: &[f64]) -> Result<(f64, f64)> {
    match v {
        [lon, lat] => Ok((*lon, *lat)),
        _ => Err(Error::Usage(format!("expected LON,LAT, got {} values", v.len()))),
    }
}

fn opt<T: std::fmt::Debug>(v: &Option<T>) -> String {
    match v {
        Some(x) => format!("{x:?}"),
        None => "none".into(),
    }
}

pub fn mesh(a: MeshArgs) -> Result<()> {
    let refined = a.refine_factor > 1;
    let center = a.refine_center.as_deref().map(lon_lat).transpose()?;
    if refined && (center.is_none() || a.refine_radius.is_none()) {
        return Err(Error::Usage("--refine-factor > 1 needs --refine-center and --refine-radius".into()));
    }
    let head = header(
        "mesh",
        &[
            ("level", a.level.to_string()),
            ("refine_center", opt(&center)),
            ("refine_radius", opt(&a.refine_radius)),
            ("refine_factor", a.refine_factor.to_string()),
            ("lloyd", a.lloyd.to_string()),
            ("radius", a.radius.to_string()),
        ],
    );
    let mesh = if refined {
        let (lon, lat) = center.unwrap_or_default();
        let spec = RefineSpec {
            center: (lon.to_radians(), lat.to_radians()),
            radius: a.refine_radius.unwrap_or_default().to_radians(),
            factor: a.refine_factor,
        };
        generate_refined_mesh(a.level, spec, a.lloyd, a.radius)?
    } else {
        generate_icosphere_mesh(a.level, a.lloyd, a.radius)?
    };
    write_mesh(&mesh, &a.out)?;
    stamp(&a.out, &head)?;
    print!("{}", commented(&head));
    println!("cells {}", mesh.n_cells());
    println!("edges {}", mesh.n_edges());
    println!("vertices {}", mesh.n_vertices());
    println!("A_ls {:.4}", mesh.area_ratio());
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn regions(a: RegionsArgs) -> Result<()> {
    let mesh = read_mesh(&a.mesh)?;
    let center = a.cap_center.as_deref().map(lon_lat).transpose()?;
    let fine = match (center, a.cap_radius, a.fine_size_ratio) {
        (Some((lon, lat)), Some(r), None) => fine_in_cap(&mesh, (lon.to_radians(), lat.to_radians()), r.to_radians()),
        (None, None, Some(ratio)) => fine_by_size(&mesh, ratio),
        _ => return Err(Error::Usage("give --cap-center with --cap-radius, or --fine-size-ratio".into())),
    };
    let head = header(
        "regions",
        &[
            ("mesh", a.mesh.display().to_string()),
            ("cap_center", opt(&center)),
            ("cap_radius", opt(&a.cap_radius)),
            ("fine_size_ratio", opt(&a.fine_size_ratio)),
            ("width", a.width.to_string()),
        ],
    );
    let map = build_region_map(&mesh, |i| fine[i], a.width)?;
    let report = validate(&mesh, &map);
    if !report.is_valid() {
        for v in report.violations.iter().take(20) {
            eprintln!("  {v}");
        }
        return Err(Error::Invariant(format!("{} region violations", report.violations.len())));
    }
    write_region_file(&map, &a.out)?;
    stamp(&a.out, &head)?;
    let (a_ls, c_cf) = mesh_metrics(&mesh, &map);
    print!("{}", commented(&head));
    println!("fine {}", report.n_fine);
    println!("interface1 {}", report.n_interface1);
    println!("interface2 {}", report.n_interface2);
    println!("coarse {}", report.n_coarse);
    println!("underline_fine {}", report.n_underline_fine);
    println!("A_ls {a_ls:.4}");
    println!("C_cf {c_cf:.4}");
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn partition(a: PartitionArgs) -> Result<()> {
    let mesh = read_mesh(&a.mesh)?;
    let map = read_region_file(&mesh, &a.regions)?;
    let case = a.case.to_ascii_uppercase();
    let head = header(
        "partition",
        &[
            ("mesh", a.mesh.display().to_string()),
            ("regions", a.regions.display().to_string()),
            ("ranks", a.ranks.to_string()),
            ("case", case.clone()),
            ("import_part", opt(&a.import_part.as_ref().map(|p| p.display().to_string()))),
            ("seed", a.seed.to_string()),
        ],
    );
    std::fs::create_dir_all(&a.out)?;
    let graph = CellGraph::from_mesh(&mesh, Some(&map))?;
    let graph_path = a.out.join("mesh.graph");
    std::fs::write(&graph_path, graph.to_metis())?;
    let labels = match &a.import_part {
        Some(p) => read_partition_file(p, a.ranks, mesh.n_cells())?,
        None => partition_multiconstraint(&graph, a.ranks, a.seed)?,
    };
    let part_path = a.out.join(format!("mesh.graph.part.{}", a.ranks));
    write_partition_file(&labels, &part_path)?;

    let mut plan = make_block_plan(&mesh, &map, &labels, a.ranks)?;
    if case == "C" {
        plan = concentrate_interface(&mesh, &map, &plan);
    }
    let problems = check_plan(&mesh, &map, &plan);
    if !problems.is_empty() {
        for p in problems.iter().take(20) {
            eprintln!("  {p}");
        }
        return Err(Error::Invariant(format!("{} plan violations", problems.len())));
    }
    let plan_path = a.out.join("plan.csv");
    std::fs::write(&plan_path, commented(&head) + &plan_summary_csv(&plan))?;

    let rep = imbalance_metrics(&plan);
    print!("{}", commented(&head));
    println!("blocks {}", plan.n_blocks());
    for class in [RegionClass::Fine, RegionClass::Coarse, RegionClass::Interface] {
        println!("imbalance {} {:.4}", class_name(class), rep.ratio(class));
    }
    println!("imbalance total {:.4}", rep.total_ratio);
    for (k, counts) in rep.rank_counts.iter().enumerate() {
        println!("rank {k} fine {} coarse {} interface {}", counts[0], counts[1], counts[2]);
    }
    for (k, class) in &rep.idle {
        println!("idle rank {k} during {} phase", class_name(*class));
    }
    println!("wrote {} {} {}", graph_path.display(), part_path.display(), plan_path.display());
    Ok(())
}

fn apply(cfg: &mut RunConfig, o: &Overrides) {
    if let Some(s) = &o.scheme {
        cfg.scheme = s.clone();
        cfg.order = o.order;
    } else if o.order.is_some() {
        cfg.order = o.order;
    }
    if let Some(m) = o.m {
        cfg.m = m;
    }
    if let Some(x) = o.dt_coarse {
        cfg.dt_coarse = x;
    }
    if let Some(x) = o.duration {
        cfg.duration = x;
    }
    if let Some(x) = o.ranks {
        cfg.n_ranks = Some(x);
    }
    if let Some(x) = &o.case {
        cfg.case = Some(x.clone());
    }
    if let Some(x) = o.layers {
        cfg.layers_replication = x;
    }
    if let Some(x) = o.seed {
        cfg.seed = x;
    }
    if let Some(x) = &o.out {
        cfg.output_dir = x.clone();
    }
}

pub fn run(a: RunArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&a.config)?;
    apply(&mut cfg, &a.overrides);
    let scheme = cfg.scheme_config()?;
    let head = format!("trisk-lts run {}\n{}", env!("CARGO_PKG_VERSION"), cfg.to_toml());
    let mesh = cfg.mesh()?;
    let map = cfg.region_map(&mesh)?;
    let plan = cfg.partition_plan(&mesh, map.as_ref())?;
    let out = run_simulation(&mesh, map.as_ref(), plan, &scheme, &cfg.test_case(), cfg.duration)?;
    write_run_outputs(&out, &mesh, map.as_ref(), &scheme, &cfg.output_dir, &head)?;
    print!("{}", run_report(&out, &mesh, map.as_ref(), &scheme, &commented(&head)));
    println!("wrote {}", cfg.output_dir.display());
    Ok(())
}

pub fn converge(a: ConvergeArgs) -> Result<()> {
    let mut cfg = RunConfig::load(&a.config)?;
    apply(&mut cfg, &a.overrides);
    let scheme = cfg.scheme_config()?;
    let mesh = cfg.mesh()?;
    let map = cfg.region_map(&mesh)?;
    let tc = cfg.test_case();
    let mut head = format!("trisk-lts converge {}\n{}", env!("CARGO_PKG_VERSION"), cfg.to_toml());
    let _ = writeln!(head, "dts = {:?}", a.dts);
    let dt_min = a.dts.iter().cloned().fold(f64::INFINITY, f64::min);
    let dt_ref = a.dt_ref.unwrap_or(dt_min / 20.0);
    let _ = writeln!(head, "dt_ref = {dt_ref}");
    let reference = reference_solution(&mesh, &tc, dt_ref, cfg.duration)?;
    let r = convergence_study(
        &mesh,
        map.as_ref(),
        &tc,
        scheme.scheme,
        scheme.m,
        &a.dts,
        cfg.duration,
        Some((&reference, dt_ref)),
    )?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join(format!("convergence_{}_M{}.csv", scheme.scheme, scheme.m));
    std::fs::write(&path, commented(&head) + &r.to_csv())?;
    print!("{}", commented(&head));
    print!("{}", r.to_csv());
    println!("slope_h {:.4}", r.slope_h);
    println!("slope_u {:.4}", r.slope_u);
    println!("monotone {}", r.monotone);
    println!("wrote {}", path.display());
    Ok(())
}

fn in_dir(p: &Path, file: &str) -> PathBuf {
    if p.is_dir() {
        p.join(file)
    } else {
        p.to_path_buf()
    }
}

/// Total cell and edge evaluations from a `ledger.csv`.
fn ledger_totals(path: &Path) -> Result<(u64, u64)> {
    let text = std::fs::read_to_string(path)?;
    for (k, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("total,all,") {
            let mut it = rest.split(',').map(str::parse::<u64>);
            return match (it.next(), it.next()) {
                (Some(Ok(c)), Some(Ok(e))) => Ok((c, e)),
                _ => Err(Error::Config(format!("{}:{}: malformed totals row", path.display(), k + 1))),
            };
        }
    }
    Err(Error::Config(format!("{}: no totals row", path.display())))
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    if n > 0.0 {
        d / n
    } else {
        d
    }
}

pub fn report(a: ReportArgs) -> Result<()> {
    let mut any = false;
    if let Some(v) = &a.optimal_ratio {
        any = true;
        let r = optimal_ratio(v[0], v[1], v[2], v[3])?;
        println!("optimal_ratio {r:.3}");
    }
    if let Some(v) = &a.gain {
        any = true;
        println!("gain_percent {:.4}", gain_percent(v[0], v[1])?);
    }
    if let Some(v) = &a.compare {
        any = true;
        let (ha, ua, _) = read_field_dump(in_dir(&v[0], "fields_final.csv"))?;
        let (hb, ub, _) = read_field_dump(in_dir(&v[1], "fields_final.csv"))?;
        if ha.len() != hb.len() || ua.len() != ub.len() {
            return Err(Error::Usage("the two runs use different meshes".into()));
        }
        println!("rel_l2_h {:.3e}", rel_l2(&ha, &hb));
        println!("rel_l2_u {:.3e}", rel_l2(&ua, &ub));
    }
    if let Some(v) = &a.work {
        any = true;
        let (ca, ea) = ledger_totals(&in_dir(&v[0], "ledger.csv"))?;
        let (cb, eb) = ledger_totals(&in_dir(&v[1], "ledger.csv"))?;
        println!("cell_evals {ca} {cb}");
        println!("edge_evals {ea} {eb}");
        println!("work_ratio {:.4}", ca as f64 / cb as f64);
    }
    if let (Some(m), Some(r)) = (&a.mesh, &a.regions) {
        any = true;
        let mesh = read_mesh(m)?;
        let map = read_region_file(&mesh, r)?;
        let (a_ls, c_cf) = mesh_metrics(&mesh, &map);
        let (f, i1, i2, c) = map.counts();
        println!("A_ls {a_ls:.4}");
        println!("C_cf {c_cf:.4}");
        println!("cells fine {f} interface1 {i1} interface2 {i2} coarse {c}");
        for m in [2u64, 4] {
            if let Ok(r) = optimal_ratio(mesh.n_cells() as u64, (i1 + i2 + c) as u64, f as u64, m) {
                println!("optimal_ratio_M{m} {r:.3}");
            }
        }
    }
    if !any {
        return Err(Error::Usage(
            "nothing to report; give --optimal-ratio, --gain, --compare, --work or --mesh/--regions".into(),
        ));
    }
    Ok(())
}
