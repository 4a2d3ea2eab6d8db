#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "liouville/cli.hpp"

namespace fs = std::filesystem;
using namespace liouville;

namespace {

struct Flags {
  std::string config;
  std::string out;
  int maxdeg = 0;
  std::size_t grid = 0, threads = 0;
  std::vector<std::string> tol;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", f.out, "output directory (default: [output] dir, else .)");
  sub->add_option("--maxdeg", f.maxdeg, "normal-form truncation degree");
  sub->add_option("--grid", f.grid, "angle grid points per direction for torus averages");
  sub->add_option("--threads", f.threads, "worker threads");
  sub->add_option("--tol", f.tol, "tolerance override KEY=VAL (repeatable)");
}

cli::Overrides overrides(const Flags& f) {
  cli::Overrides ov;
  if (!f.out.empty()) ov.out = f.out;
  if (f.maxdeg) ov.maxdeg = f.maxdeg;
  if (f.grid) ov.grid = f.grid;
  if (f.threads) ov.threads = f.threads;
  for (const auto& kv : f.tol) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::Config, "--tol expects KEY=VAL, got '" + kv + "'");
    ov.tol.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return ov;
}

int run_analysis(cli::Command cmd, const Flags& f) {
  const cli::AnalysisConfig cfg = cli::load_config_file(f.config, overrides(f));
  const cli::RunResult r = cli::run(cmd, cfg);
  for (const auto& [name, content] : r.files) cli::write_atomic(cfg.out / name, content);
  cli::write_atomic(cfg.out / "report.json", cli::report_text(r.report));
  std::cerr << (r.pass ? "all checks passed" : "some checks failed") << "; report in " << (cfg.out / "report.json").string()
            << "\n";
  return r.pass ? 0 : 2;
}

int run_plotdata(const std::string& out, std::string report, const std::string& what) {
  if (report.empty()) report = (fs::path(out) / "report.json").string();
  std::ifstream in(report, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read report '" + report + "'");
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, "malformed report '" + report + "': " + e.what());
  }
  const fs::path target = fs::path(out) / (what + ".csv");
  cli::write_atomic(target, cli::plotdata(j, what));
  std::cerr << "wrote " << target.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Liouville torus charts, action-angle variables, conservation checks and exact normal forms"};
  app.require_subcommand(1);
  Flags flags;
  std::vector<std::pair<CLI::App*, cli::Command>> subs;
  for (const char* name : {"analyze", "actions", "conserve", "normalize", "classify"}) {
    static const std::map<std::string, std::string> help{
        {"analyze", "chart, actions and conservation (plus normal form when configured)"},
        {"actions", "torus charts and action variables"},
        {"conserve", "torus averages of the declared tensors"},
        {"normalize", "exact normal form of the [normalform] input"},
        {"classify", "eigenvalues, toric degree and Williamson type"}};
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    add_common(sub, flags);
    subs.emplace_back(sub, *cli::parse_command(name));
  }
  std::string plot_out = ".", plot_report, plot_what;
  CLI::App* plot = app.add_subcommand("plotdata", "CSV export from a written report");
  plot->add_option("--out", plot_out, "directory holding report.json; CSV files go here");
  plot->add_option("--report", plot_report, "report path (default OUT/report.json)");
  plot->add_option("--what", plot_what, "torus | actions | deviation")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (plot->parsed()) return run_plotdata(plot_out, plot_report, plot_what);
    for (const auto& [sub, cmd] : subs)
      if (sub->parsed()) return run_analysis(cmd, flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return cli::exit_code_for(e.kind()) == 1 ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
