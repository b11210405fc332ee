//! `fkobs`: batch front-end for the verification suite, the rate and Green
//! function solvers and the Monte Carlo campaigns.

mod commands;
mod failure;
mod output;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};

use commands::Ctx;
use failure::Failure;
use output::{Format, Output};
use settings::Settings;

fn opt(id: &'static str, help: &'static str) -> Arg {
    Arg::new(id).long(id.replace('_', "-")).help(help).num_args(1)
}

fn switch(id: &'static str, help: &'static str) -> Arg {
    Arg::new(id)
        .long(id.replace('_', "-"))
        .help(help)
        .action(ArgAction::SetTrue)
}

fn sampling_args() -> [Arg; 3] {
    [
        opt("sweeps", "measured sweeps over all chains").default_value("100000"),
        opt("chains", "independent chains").default_value("4"),
        opt("burn_in", "discarded sweeps per chain").default_value("100"),
    ]
}

fn cli() -> Command {
    Command::new("fkobs")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Fermionic observable of the planar FK-Ising model: exact checks, decay rates, Monte Carlo")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .args([
            opt("p", "bond density").global(true).conflicts_with("beta"),
            opt("beta", "Ising inverse temperature").global(true),
            opt("seed", "random seed").global(true).default_value("20240611"),
            opt("workers", "worker threads (default: all cores)").global(true),
            opt("out", "output directory").global(true).default_value("fkobs-out"),
            opt("format", "table format")
                .global(true)
                .value_parser(["csv", "json"])
                .default_value("csv"),
            opt("cap", "largest number of random bonds to enumerate")
                .global(true)
                .default_value("24"),
            opt("tol", "solver tolerance").global(true).default_value("1e-12"),
            Arg::new("config")
                .long("config")
                .global(true)
                .num_args(1)
                .value_parser(value_parser!(PathBuf))
                .help("flat key = value file; flags take precedence"),
            switch("verbose", "log progress").short('v').global(true),
        ])
        .subcommand(
            Command::new("verify")
                .about("Run the exact-identity suite on the domain catalog and the p grid")
                .arg(switch("inject_fault", "perturb one observable value (test hook)").hide(true)),
        )
        .subcommand(
            Command::new("rate")
                .about("Solve the rate equation for a direction")
                .arg(opt("direction", "lattice direction a1,a2").default_value("1,0")),
        )
        .subcommand(
            Command::new("green")
                .about("Massive Green function and its decay-rate series")
                .args([
                    opt("mass", "mass m in (0, 1), instead of --p/--beta"),
                    opt("radius", "truncation radius").default_value("400"),
                    opt("direction", "lattice direction a1,a2").default_value("1,0"),
                    opt("n", "distances, list or range").default_value("50,100,150"),
                    switch("no_field", "skip the field file"),
                ]),
        )
        .subcommand(
            Command::new("strip")
                .about("Strip crossing probabilities and their ratios")
                .args([
                    opt("heights", "strip heights, list or range").default_value("2..7"),
                    opt("halfwidth", "Monte Carlo strip halfwidth").default_value("64"),
                    opt("exact_halfwidth", "halfwidth of the exact comparison, 0 to skip").default_value("12"),
                ])
                .args(sampling_args()),
        )
        .subcommand(
            Command::new("sample")
                .about("Two-point Monte Carlo campaign with a decay-rate fit")
                .args([
                    opt("preset", "named parameter set (desk)"),
                    opt("box_size", "side of the free box").default_value("64"),
                    opt("direction", "lattice direction a1,a2").default_value("1,0"),
                    opt("ns", "distances, list or range").default_value("4..14"),
                    opt("prefactor", "power-law exponent removed before fitting").default_value("0.5"),
                    switch("no_fit", "skip the rate fit"),
                ])
                .args(sampling_args()),
        )
        .subcommand(Command::new("report").about("Summarise the JSON outputs of a directory"))
}

fn argument_ids(name: &str) -> Vec<String> {
    let mut cmd = cli();
    cmd.build();
    cmd.find_subcommand(name)
        .map(|c| {
            c.get_arguments()
                .map(|a| a.get_id().to_string())
                .filter(|id| id != "help" && id != "version")
                .collect()
        })
        .unwrap_or_default()
}

fn run(name: &str, sub: &ArgMatches) -> Result<(), Failure> {
    let config = sub.get_one::<PathBuf>("config").map(PathBuf::as_path);
    let settings = Settings::resolve(sub, &argument_ids(name), config)?;
    if let Some(w) = settings.get::<usize>("workers")? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build_global()
            .map_err(|e| Failure::invalid(format!("worker pool: {e}")))?;
    }
    let format = match settings.str("format") {
        Some("json") => Format::Json,
        Some("csv") | None => Format::Csv,
        Some(other) => return Err(Failure::invalid(format!("unknown format `{other}`"))),
    };
    let dir = PathBuf::from(settings.require::<String>("out")?);
    let out = Output::new(&dir, format, name, settings.provenance())?;
    let mut ctx = Ctx { settings, out };
    let result = match name {
        "verify" => commands::verify(&mut ctx),
        "rate" => commands::rate(&mut ctx),
        "green" => commands::green(&mut ctx),
        "strip" => commands::strip(&mut ctx),
        "sample" => commands::sample(&mut ctx),
        "report" => commands::report(&mut ctx),
        _ => unreachable!("clap rejects unknown subcommands"),
    };
    ctx.out.finish()?;
    result
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand required");
    let level = if sub.get_flag("verbose") { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(name, sub) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
