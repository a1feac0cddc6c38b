use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use orthovoronoi::generators::generate;
use orthovoronoi::pipeline::{run, RunConfig};
use orthovoronoi::shape::shape_to_string;
use orthovoronoi::subdivision::BvhMode;

#[derive(Parser)]
#[command(name = "orthovoronoi", version, about = "Exact L-infinity medial axis of orthogonal polygons and polyhedra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bvh {
    Auto,
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the diagram of a shape document.
    Compute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// SVG render (2D only).
        #[arg(long, conflicts_with = "obj")]
        svg: Option<PathBuf>,
        /// OBJ line-set render (3D only).
        #[arg(long)]
        obj: Option<PathBuf>,
        /// Fail unless the document has this dimension.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 32)]
        max_depth: u32,
        #[arg(long, value_enum, default_value_t = Bvh::Auto)]
        bvh: Bvh,
        /// Contract chains of degree-2 nodes.
        #[arg(long)]
        contract: bool,
        /// Print the stats document on stdout (wall time goes to stderr).
        #[arg(long)]
        stats: bool,
        /// Compare against the brute-force oracle on a (k+1)^d grid.
        #[arg(long, value_name = "K")]
        grid_check: Option<usize>,
    },
    /// Write a random shape document.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 40)]
        sites: usize,
        #[arg(long, default_value_t = 0)]
        holes: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Compute { input, output, svg, obj, dim, max_depth, bvh, contract, stats, grid_check } => {
            let config = RunConfig {
                input,
                output,
                svg,
                obj,
                dimension: dim,
                max_depth,
                bvh: match bvh {
                    Bvh::Auto => BvhMode::Auto,
                    Bvh::On => BvhMode::On,
                    Bvh::Off => BvhMode::Off,
                },
                contract,
                stats,
                grid_check,
            };
            match run(&config) {
                Ok(out) => {
                    if let Some(text) = out.stats_text {
                        print!("{text}");
                        eprintln!("wall time: {:.3} ms", out.computation.elapsed.as_secs_f64() * 1e3);
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Generate { seed, dim, sites, holes, out } => match generate(seed, dim, sites, holes) {
            Ok(shape) => match std::fs::write(&out, shape_to_string(&shape)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {}: {e}", out.display());
                    ExitCode::from(1)
                }
            },
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
    }
}
