use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use twincircuit::cli::{self, Grid, RunSpec};

#[derive(Parser)]
#[command(name = "twincircuit", version, about = "Sealed-bid VM auctions computed by two non-colluding parties")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one honest auction and compare it with the plaintext result.
    Demo(Common),
    /// Sweep every combination of the listed bidder counts, VM type counts and
    /// capacities; one session per grid point.
    Bench(Common),
    /// Run seeded sessions against a scripted adversary and report detection.
    Attack(Common),
    /// Write the auction circuit as a netlist.
    DumpCircuit(Common),
}

#[derive(Args)]
struct Common {
    /// Number of bidders n (a comma list for bench).
    #[arg(long, value_delimiter = ',', default_values_t = [4usize])]
    bidders: Vec<usize>,
    /// Number of VM types m (a comma list for bench).
    #[arg(long = "vm-types", value_delimiter = ',', default_values_t = [6usize])]
    vm_types: Vec<usize>,
    /// Instances per VM type k (a comma list for bench).
    #[arg(long, value_delimiter = ',', default_values_t = [3u64])]
    capacity: Vec<u64>,
    /// Commitment copies s per input wire.
    #[arg(long, default_value_t = 10)]
    copies: usize,
    /// Bit width w of quantities and prices.
    #[arg(long, default_value_t = 16)]
    bits: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Bid file: one `id, k1, b1, ..., km, bm` line per bidder.
    #[arg(long = "bids-file")]
    bids_file: Option<PathBuf>,
    /// Auction configuration file (`m`, `capacities`, `weights`, `w`, `f`, `s`).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Largest random quantity.
    #[arg(long = "max-quantity", default_value_t = 3)]
    max_quantity: u64,
    /// Largest random unit price.
    #[arg(long = "max-price", default_value_t = 100)]
    max_price: u64,
    /// Adversary behaviour for `attack`.
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Output file (CSV for bench, netlist for dump-circuit, transcript CSV for demo).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the roles over a TCP mesh; role i listens on port + i.
    #[arg(long)]
    tcp: Option<SocketAddr>,
}

impl Common {
    fn grid(&self) -> Grid {
        Grid { bidders: self.bidders.clone(), vm_types: self.vm_types.clone(), capacities: self.capacity.clone() }
    }

    /// Run settings for a single session; lists are only meaningful for bench.
    fn spec(&self) -> Result<RunSpec> {
        let one = |len: usize, flag: &str| {
            if len != 1 {
                bail!("--{flag} takes a single value outside bench");
            }
            Ok(())
        };
        one(self.bidders.len(), "bidders")?;
        one(self.vm_types.len(), "vm-types")?;
        one(self.capacity.len(), "capacity")?;
        Ok(self.base(self.bidders[0], self.vm_types[0], self.capacity[0]))
    }

    fn base(&self, bidders: usize, vm_types: usize, capacity: u64) -> RunSpec {
        RunSpec {
            bidders,
            vm_types,
            capacity,
            copies: self.copies,
            bits: self.bits,
            seed: self.seed,
            bids_file: self.bids_file.clone(),
            config_file: self.config.clone(),
            max_quantity: self.max_quantity,
            max_price: self.max_price,
            adversary: self.adversary.clone(),
            trials: self.trials,
            tcp: self.tcp,
        }
    }
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Demo(c) => {
            let r = cli::demo(&c.spec()?)?;
            println!("{r}");
            if let Some(p) = &c.out {
                write_out(p, &r.result.transcript.to_csv())?;
            }
            Ok(r.matches_oracle())
        }
        Command::Bench(common) => {
            let spec = common.base(0, 0, 0);
            let rows = cli::bench(&spec, &common.grid(), |r| {
                eprintln!("n={} m={} k={}: {:.3} s, {} bytes", r.n, r.m, r.k, r.time_seconds, r.bytes)
            })?;
            let csv = cli::bench_csv(&rows);
            match &common.out {
                Some(p) => write_out(p, &csv)?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::Attack(c) => {
            let r = cli::attack(&c.spec()?, |t| {
                if t.wrong_accept {
                    eprintln!("seed {}: wrong output accepted", t.seed);
                }
            })?;
            print!("{r}");
            Ok(r.wrong_accepts() == 0)
        }
        Command::DumpCircuit(c) => {
            if c.adversary.is_some() {
                bail!("dump-circuit takes no adversary");
            }
            let (circuit, summary) = cli::dump_circuit(&c.spec()?)?;
            match &c.out {
                Some(p) => {
                    write_out(p, &circuit.to_netlist())?;
                    println!("{summary}");
                }
                None => {
                    let mut out = std::io::stdout().lock();
                    let written = writeln!(out, "{summary}").and_then(|_| out.write_all(circuit.to_netlist().as_bytes()));
                    // a reader such as `head` closing early is not an error
                    match written {
                        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                        _ => {}
                    }
                }
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
