use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use curvedsurf::io::Encoding;
use curvedsurf::studies::{self, AnalyticGeometry, ConvertConfig, InitialSurface, Refinement};
use curvedsurf::{Error, Result};

/// Curved higher-order surface meshes: geometric error studies, a vector
/// Helmholtz solver, mean curvature flow and mesh conversion.
#[derive(Parser)]
#[command(name = "curvedsurf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Max-norm errors of position, normal and mean curvature under refinement.
    GeometryErrors {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Polynomial orders, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        order: Vec<usize>,
        /// Number of refinement levels.
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// First refinement level.
        #[arg(long, default_value_t = 2)]
        first_level: usize,
        /// Placement of new vertices when refining the reference grid.
        #[arg(long, value_enum, default_value_t = RefinementArg::Projected)]
        refinement: RefinementArg,
        #[arg(long)]
        quad_degree: Option<usize>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Vector Helmholtz problem on the unit sphere with r = k.
    Helmholtz {
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        order: Vec<usize>,
        /// Number of refinement levels, starting at level 0.
        #[arg(long, default_value_t = 5)]
        levels: usize,
        /// Penalty factor; the weight is beta / h^2.
        #[arg(long, default_value_t = 10.0)]
        beta: f64,
        #[arg(long)]
        quad_degree: Option<usize>,
        /// Level-0 mesh (.msh or .vtu); an icosahedron by default.
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Mean curvature flow of a discrete parametrization.
    Mcf {
        #[command(flatten)]
        surface: SurfaceArgs,
        /// Initial surface from a mesh file instead of --geometry.
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Order of the parametrization.
        #[arg(long, default_value_t = 2)]
        order: usize,
        /// Refinements of the base mesh.
        #[arg(long, default_value_t = 2)]
        levels: usize,
        /// Time step; 0.1 h^2 by default.
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 0.2)]
        t_end: f64,
        /// Radial amplitude a of (1 + a cos(3 phi) sin^2(theta)) x.
        #[arg(long, default_value_t = 0.2)]
        perturbation: f64,
        /// Number of VTU snapshots besides the initial state.
        #[arg(long, default_value_t = 10)]
        snapshots: usize,
        #[arg(long)]
        quad_degree: Option<usize>,
        #[arg(long, value_enum, default_value_t = EncodingArg::Ascii)]
        encoding: EncodingArg,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Convert an MSH 4.1 or VTU mesh to VTU.
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Re-interpolate to this order.
        #[arg(long)]
        order: Option<usize>,
        /// Re-interpolate onto this surface (with its --radius/--axes/--radii).
        #[arg(long, value_enum)]
        project: Option<GeometryArg>,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, value_delimiter = ',', num_args = 3)]
        axes: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', num_args = 2)]
        radii: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = EncodingArg::Ascii)]
        encoding: EncodingArg,
    },
}

#[derive(Args)]
struct SurfaceArgs {
    #[arg(long, value_enum, default_value_t = GeometryArg::Sphere)]
    geometry: GeometryArg,
    /// Sphere radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Ellipsoid semi-axes.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    axes: Option<Vec<f64>>,
    /// Torus radii (center circle, tube).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    radii: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GeometryArg {
    Sphere,
    Ellipsoid,
    Torus,
    Genus2,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefinementArg {
    Projected,
    Flat,
}

#[derive(Clone, Copy, ValueEnum)]
enum EncodingArg {
    Ascii,
    #[value(alias = "base64")]
    Binary,
}

impl From<EncodingArg> for Encoding {
    fn from(e: EncodingArg) -> Self {
        match e {
            EncodingArg::Ascii => Encoding::Ascii,
            EncodingArg::Binary => Encoding::Base64,
        }
    }
}

fn analytic(kind: GeometryArg, radius: f64, axes: Option<Vec<f64>>, radii: Option<Vec<f64>>) -> AnalyticGeometry {
    match kind {
        GeometryArg::Sphere => AnalyticGeometry::Sphere { radius },
        GeometryArg::Ellipsoid => {
            let a = axes.unwrap_or_else(|| vec![1.0, 1.25, 0.75]);
            AnalyticGeometry::Ellipsoid { axes: [a[0], a[1], a[2]] }
        }
        GeometryArg::Torus => {
            let r = radii.unwrap_or_else(|| vec![2.0, 1.0]);
            AnalyticGeometry::Torus { big_r: r[0], small_r: r[1] }
        }
        GeometryArg::Genus2 => AnalyticGeometry::Genus2,
    }
}

impl SurfaceArgs {
    fn geometry(self) -> AnalyticGeometry {
        analytic(self.geometry, self.radius, self.axes, self.radii)
    }
}

fn prepare(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GeometryErrors { surface, order, levels, first_level, refinement, quad_degree, out } => {
            prepare(&out)?;
            let config = studies::GeometryErrorsConfig {
                geometry: surface.geometry(),
                orders: order,
                levels: (first_level..first_level + levels).collect(),
                refinement: match refinement {
                    RefinementArg::Projected => Refinement::Projected,
                    RefinementArg::Flat => Refinement::Flat,
                },
                quad_degree,
            };
            let report = studies::geometry_errors(&config)?;
            let path = out.join("geometry_errors.csv");
            report.csv.write(&path)?;
            for s in &report.slopes {
                let curvature = s.curvature.map_or("-".into(), |c| format!("{c:.3}"));
                println!(
                    "k={}: slopes position {:.3}, normal {:.3}, curvature {curvature}",
                    s.order, s.position, s.normal
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Helmholtz { order, levels, beta, quad_degree, mesh, out } => {
            prepare(&out)?;
            let base_mesh = mesh.map(|p| studies::read_mesh(&p).map(|d| d.mesh().clone())).transpose()?;
            let config = studies::HelmholtzConfig {
                orders: order,
                levels: (0..levels).collect(),
                beta,
                quad_degree,
                base_mesh,
                ..Default::default()
            };
            let result = studies::helmholtz(&config)?;
            let path = out.join("helmholtz.csv");
            result.csv.write(&path)?;
            for r in &result.rows {
                let eoc = r.eoc.map_or("-".into(), |e| format!("{e:.3}"));
                println!("k={} level={} h={:.5e} error={:.5e} eoc={eoc}", r.order, r.level, r.h, r.error);
            }
            println!("wrote {}", path.display());
        }
        Command::Mcf {
            surface,
            mesh,
            order,
            levels,
            tau,
            t_end,
            perturbation,
            snapshots,
            quad_degree,
            encoding,
            out,
        } => {
            prepare(&out)?;
            let initial = match mesh {
                Some(p) => InitialSurface::File(p),
                None => InitialSurface::Analytic(surface.geometry()),
            };
            let config = studies::McfConfig {
                initial,
                level: levels,
                order,
                tau,
                t_end,
                perturbation,
                quad_degree,
                output: Some(out.clone()),
                snapshots,
                encoding: encoding.into(),
            };
            let result = studies::mcf(&config)?;
            let path = out.join("mcf.csv");
            result.csv.write(&path)?;
            if let Some(last) = result.rows.last() {
                println!("t={:.4} area={:.6e} mean radius={:.6e}", last.time, last.area, last.mean_radius);
            }
            println!("wrote {} and {} snapshots", path.display(), result.snapshots.len());
            if let Some(reason) = result.stopped {
                return Err(Error::Config(format!("flow stopped early ({reason}); last state written")));
            }
        }
        Command::Convert { input, output, order, project, radius, axes, radii, encoding } => {
            let config = ConvertConfig {
                order,
                project: project.map(|kind| analytic(kind, radius, axes, radii)),
                encoding: encoding.into(),
            };
            studies::convert(&input, &output, &config)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
