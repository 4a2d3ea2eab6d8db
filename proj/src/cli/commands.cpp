#include <chrono>
#include <fstream>

#include "liouville/cli.hpp"
#include "liouville/conservation.hpp"
#include "liouville/parallel.hpp"

#ifndef LIOUVILLE_VERSION
#define LIOUVILLE_VERSION "0.0.0"
#endif

namespace liouville::cli {

using json = nlohmann::ordered_json;

namespace {

json matrix_json(const Eigen::MatrixXd& a) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.push_back(a(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

json kmatrix_json(const KMatrix& a) {
  json rows = json::array();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    json r = json::array();
    for (std::size_t j = 0; j < a.cols(); ++j) r.push_back(a(i, j).str());
    rows.push_back(std::move(r));
  }
  return rows;
}

json zrows_json(const std::vector<exact::ZRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    json row = json::array();
    for (const auto& z : r) {
      if (z.fits_slong_p())
        row.push_back(z.get_si());
      else
        row.push_back(z.get_str());
    }
    out.push_back(std::move(row));
  }
  return out;
}

json error_json(const Error& e) { return {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}; }

std::vector<std::string> text_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t nl = text.find('\n', start);
    out.push_back(text.substr(start, nl - start));
    if (nl == std::string::npos) break;
    start = nl + 1;
  }
  return out;
}

Structure structure_of(const SystemSpec& s) {
  if (s.omega) return *s.omega;
  return *s.poisson;
}

class Runner {
 public:
  explicit Runner(const AnalysisConfig& cfg) : cfg_(cfg) {}

  json chart_block();
  json actions_block();
  json conservation_block();
  json normalform_block(std::map<std::string, std::string>& files);
  json classify_block();

  bool pass = true;
  json warnings = json::array();

 private:
  const TorusChart& chart(std::size_t i);
  NumberField field() const { return NumberField(cfg_.spec.basis, cfg_.products); }
  VectorSeries input_series(const NumberField& k) const;

  // Failures are recorded in the block; everything else propagates.
  template <class F>
  json guarded(F&& f) {
    try {
      json r = f();
      if (!r.value("pass", true)) pass = false;
      return r;
    } catch (const Error& e) {
      pass = false;
      return {{"pass", false}, {"error", error_json(e)}};
    }
  }

  const AnalysisConfig& cfg_;
  std::map<std::size_t, TorusChart> charts_;
};

const TorusChart& Runner::chart(std::size_t i) {
  auto it = charts_.find(i);
  if (it == charts_.end()) it = charts_.emplace(i, build_chart(cfg_.spec, cfg_.seeds[i].second)).first;
  return it->second;
}

json Runner::chart_block() {
  const SystemSpec& s = cfg_.spec;
  json out = json::array();
  for (std::size_t i = 0; i < cfg_.seeds.size(); ++i) {
    json b = guarded([&]() -> json {
      const TorusChart& c = chart(i);
      const TorusGrid g = torus_grid(c, cfg_.sample_grid, false, cfg_.threads);
      const SystemCheck chk = check_system(s, c.seed(), g.x);
      json fields = json::array();
      bool ok = true;
      for (std::size_t k = 0; k < s.p(); ++k) {
        const auto q = verify_quasiperiodicity(c, s.fields[k], 64);
        ok = ok && q.residual <= s.tol.quasi;
        fields.push_back({{"field", k + 1},
                          {"rotation", std::vector<double>(q.rotation.data(), q.rotation.data() + q.rotation.size())},
                          {"residual", q.residual}});
      }
      json samples = {{"n", g.n}, {"theta", g.theta}, {"x", g.x}};
      return {{"pass", ok},
              {"lattice", matrix_json(c.lattice())},
              {"frequencies", matrix_json(c.frequencies())},
              {"levels", c.levels()},
              {"checks",
               {{"commute", chk.commute},
                {"firstint", chk.firstint},
                {"min_sv_fields", chk.min_sv_fields},
                {"min_sv_integrals", chk.min_sv_integrals}}},
              {"quasiperiodicity", fields},
              {"samples", samples}};
    });
    json entry = {{"seed", cfg_.seeds[i].first}, {"x0", cfg_.seeds[i].second}};
    entry.update(b);
    out.push_back(std::move(entry));
  }
  return out;
}

json Runner::actions_block() {
  const SystemSpec& s = cfg_.spec;
  const bool mineur = s.omega && !cfg_.alpha.empty();
  if (!mineur && s.hamiltonians.empty())
    throw Error(ErrorKind::Config, "actions need [alpha] with [omega], or [hamiltonians]");
  if (!mineur) warnings.push_back("actions: no primitive declared; leafwise actions relative to the first seed");
  json out = json::array();
  for (std::size_t i = 0; i < cfg_.seeds.size(); ++i) {
    json b = guarded([&]() -> json {
      const TorusChart& c = chart(i);
      const Structure st = structure_of(s);
      json r;
      bool ok = true;
      ActionResidual res;
      if (mineur) {
        check_dimension_bound(s.p(), *s.omega, c.seed());
        const ActionProfile prof = action_profile(c, cfg_.alpha, *s.omega, cfg_.seeds[i].first);
        res = verify_action(c, mineur_map(c, cfg_.alpha, *s.omega), st);
        r = {{"method", "mineur"}, {"mode", std::string(to_string(prof.mode))}, {"levels", prof.levels},
             {"mu", prof.mu}, {"quad_error", prof.quad_error}};
      } else {
        LeafwiseOptions opt;
        opt.path_tol = cfg_.path_tol;
        const LeafwiseResult lw = leafwise_action(chart(0), s.hamiltonians, c.levels(), opt);
        res = verify_action(c, leafwise_map(c, s.hamiltonians), st);
        ok = lw.path_discrepancy <= cfg_.path_tol;
        r = {{"method", "leafwise"}, {"reference", cfg_.seeds[0].first}, {"levels", c.levels()}, {"mu", lw.mu},
             {"path_discrepancy", lw.path_discrepancy}};
      }
      bool res_ok = true;
      for (double v : res.residual) res_ok = res_ok && v <= cfg_.action_tol;
      r["residual"] = res.residual;
      ok = ok && res_ok;
      if (!s.hamiltonians.empty()) {
        const double iso = isotropy_defect(c, st, s.hamiltonians, 1000);
        r["isotropy"] = iso;
        ok = ok && iso <= s.tol.isotropy;
      }
      if (cfg_.normal_mode) {
        NormalFormOptions opt;
        opt.grid = cfg_.sample_grid;
        opt.threads = cfg_.threads;
        const NormalFormReport nf = assemble_normal_form(c, st, *cfg_.normal_mode, opt);
        r["normal_form"] = {{"mode", std::string(to_string(nf.mode))},
                            {"residual", nf.residual},
                            {"invariance", nf.invariance},
                            {"isotropy", nf.isotropy},
                            {"action_jacobian", matrix_json(nf.action_jacobian)},
                            {"magnetic", matrix_json(nf.magnetic)},
                            {"magnetic_norm", nf.magnetic_norm},
                            {"closedness", nf.closedness},
                            {"angle_shift", matrix_json(nf.angle_shift)}};
        ok = ok && nf.residual <= cfg_.normal_tol;
      }
      json head = {{"pass", ok}};
      head.update(r);
      return head;
    });
    json entry = {{"seed", cfg_.seeds[i].first}};
    entry.update(b);
    out.push_back(std::move(entry));
  }
  return out;
}

json Runner::conservation_block() {
  const SystemSpec& s = cfg_.spec;
  if (cfg_.tensors.empty()) throw Error(ErrorKind::Config, "conservation needs a [tensors] section");
  ConservationOptions opt;
  opt.grid = cfg_.grid;
  opt.threads = cfg_.threads;
  json out = json::array();
  for (std::size_t i = 0; i < cfg_.seeds.size(); ++i) {
    json tensors = json::array();
    bool seed_ok = true;
    for (const auto& t : cfg_.tensors) {
      json b = guarded([&]() -> json {
        const ConservationReport r = conservation_check(t.tensor, s, chart(i), opt);
        return {{"pass", r.pass},
                {"up", r.average.up},
                {"down", r.average.down},
                {"deviation", r.average.deviation},
                {"fourier", r.average.fourier},
                {"lie", r.lie},
                {"tol", r.tol},
                {"mean", r.average.mean},
                {"deviation_field", r.average.deviation_field}};
      });
      seed_ok = seed_ok && b.value("pass", false);
      json entry = {{"tensor", t.id}};
      entry.update(b);
      tensors.push_back(std::move(entry));
    }
    pass = pass && seed_ok;
    out.push_back({{"seed", cfg_.seeds[i].first},
                   {"pass", seed_ok},
                   {"grid", cfg_.grid},
                   {"p", s.p()},
                   {"tensors", std::move(tensors)}});
  }
  return out;
}

VectorSeries Runner::input_series(const NumberField& k) const {
  const NormalFormSettings& n = *cfg_.normalform;
  VectorSeries x;
  for (const auto& src : n.input)
    x.push_back(series_from_expr(parse_expr(src, n.coords, cfg_.spec.basis), n.coords.size(), n.maxdeg, k));
  return x;
}

json Runner::normalform_block(std::map<std::string, std::string>& files) {
  if (!cfg_.normalform) throw Error(ErrorKind::Config, "normalize needs a [normalform] section");
  const NormalFormSettings& n = *cfg_.normalform;
  return guarded([&]() -> json {
    const NumberField k = field();
    const PdResult r = pd_normalize(input_series(k), n.maxdeg, n.mode, k);
    const bool commutes = is_zero(semisimple_defect(r));
    const bool replays = replay(r.input, r.log, r.mode, r.poisson) == r.normalized;

    json gamma = json::array();
    for (const auto& g : r.gamma) gamma.push_back(g.str());
    json resonant = json::array();
    for (const auto& list : r.resonance.resonant) resonant.push_back(list);
    json lambdas = json::array();
    for (const auto& l : r.resonance.toric.lambdas) lambdas.push_back(l.str());
    json normalized = json::array();
    std::string series;
    for (std::size_t j = 0; j < r.normalized.size(); ++j) {
      const std::string text = series_to_text(r.normalized[j]);
      normalized.push_back(text_lines(text));
      if (r.normalized.size() > 1) series += "# component " + std::to_string(j + 1) + "\n";
      series += text;
    }
    files["normalform.series"] = series;
    json log = json::array();
    for (const auto& step : r.log) {
      json gen = json::array();
      for (const auto& c : step.generator) gen.push_back(text_lines(series_to_text(c)));
      log.push_back({{"degree", step.degree}, {"generator", gen}});
    }
    json basis = json::array();
    for (std::size_t l = 0; l < k.dim(); ++l) basis.push_back(k.name(l));
    json out = {{"pass", commutes && replays},
                {"mode", std::string(to_string(r.mode))},
                {"maxdeg", r.maxdeg},
                {"coords", n.coords},
                {"field_basis", basis},
                {"gamma", gamma},
                {"frame", kmatrix_json(r.frame)},
                {"nilpotent", r.nilpotent},
                {"resonance",
                 {{"kernel", zrows_json(r.resonance.kernel)},
                  {"resonant", resonant},
                  {"toric_degree", r.resonance.toric.degree},
                  {"generators", zrows_json(r.resonance.toric.generators)},
                  {"lambdas", lambdas}}},
                {"normalized", normalized},
                {"log", log},
                {"checks", {{"commutes_with_semisimple", commutes}, {"replay", replays}}}};
    if (r.mode == PdMode::Hamiltonian && !r.frame.is_diagonal())
      out["normalized_input_coordinates"] = text_lines(series_to_text(to_input_coordinates(r.normalized[0], r.frame)));
    return out;
  });
}

json Runner::classify_block() {
  if (!cfg_.normalform) throw Error(ErrorKind::Config, "classify needs a [normalform] section");
  const NormalFormSettings& n = *cfg_.normalform;
  json out = json::object();
  const NumberField k = field();
  const VectorSeries x = input_series(k);
  out["linear"] = guarded([&]() -> json {
    const std::size_t m = n.coords.size();
    KMatrix a(m, m);
    if (n.mode == PdMode::VectorField) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) {
          Exponent e(m, 0);
          e[j] = 1;
          a(i, j) = x[i].coeff(e);
        }
    } else {
      if (m % 2) throw Error(ErrorKind::InvalidArgument, "canonical coordinates need an even number of variables");
      const FormalSeries h2 = x[0].degree_part(2);
      KMatrix hess(m, m);
      for (const auto& [e, c] : h2.terms())
        for (std::size_t i = 0; i < m; ++i) {
          if (e[i] == 2) hess(i, i) = Rational(2) * c;
          for (std::size_t j = 0; j < m; ++j)
            if (i != j && e[i] == 1 && e[j] == 1) hess(i, j) = c;
        }
      a = canonical_structure(m / 2).transpose() * hess;
    }
    const LinearPart lp = split_linear(a, k);
    const ToricData t = toric_degree(lp.eigenvalues);
    json ev = json::array(), lambdas = json::array();
    for (const auto& g : lp.eigenvalues) ev.push_back(g.str());
    for (const auto& l : t.lambdas) lambdas.push_back(l.str());
    const bool rec = reconstructs(t, lp.eigenvalues);
    return {{"pass", rec},
            {"eigenvalues", ev},
            {"semisimple", lp.semisimple},
            {"toric_degree", t.degree},
            {"generators", zrows_json(t.generators)},
            {"lambdas", lambdas},
            {"reconstructs", rec}};
  });
  if (n.mode == PdMode::Hamiltonian) {
    out["williamson"] = guarded([&]() -> json {
      const WilliamsonType w = williamson_classify(x[0].degree_part(2));
      json blocks = json::array();
      for (const auto& b : w.blocks)
        blocks.push_back({{"kind", std::string(to_string(b.kind))}, {"eigenvalue", {b.eigenvalue.real(), b.eigenvalue.imag()}}});
      return {{"pass", true},
              {"ke", w.ke},
              {"kh", w.kh},
              {"kf", w.kf},
              {"blocks", blocks},
              {"real_toric_degree", real_toric_degree(w)}};
    });
  }
  return out;
}

}  // namespace

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config:
    case ErrorKind::Syntax:
    case ErrorKind::UnknownIdentifier:
    case ErrorKind::NonIntegerExponent:
    case ErrorKind::MissingBlock: return 1;
    default: return 2;
  }
}

RunResult run(Command cmd, const AnalysisConfig& cfg) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  set_default_threads(cfg.threads);
  // analyze runs whatever the config declares
  const bool analyze = cmd == Command::Analyze;
  const bool has_system = !cfg.spec.fields.empty();
  const bool needs_system = cmd == Command::Actions || cmd == Command::Conserve || (analyze && has_system);
  if (needs_system) {
    if (!has_system) throw Error(ErrorKind::Config, "this command needs a declared system");
    if (cfg.seeds.empty()) throw Error(ErrorKind::Config, "this command needs a [seeds] section");
  }
  if (analyze && !has_system && !cfg.normalform)
    throw Error(ErrorKind::Config, "nothing to analyze: declare a system or a [normalform] section");

  Runner runner(cfg);
  RunResult res;
  json blocks = json::object(), timing = json::object();
  auto timed = [&](const char* name, auto&& f) {
    const auto s = clock::now();
    blocks[name] = f();
    timing[name] = std::chrono::duration<double>(clock::now() - s).count();
  };
  if ((analyze && has_system) || cmd == Command::Actions) timed("chart", [&] { return runner.chart_block(); });
  if ((analyze && has_system) || cmd == Command::Actions) timed("actions", [&] { return runner.actions_block(); });
  if (analyze && has_system && !cfg.tensors.empty()) timed("conservation", [&] { return runner.conservation_block(); });
  if (cmd == Command::Conserve) timed("conservation", [&] { return runner.conservation_block(); });
  if (cmd == Command::Normalize || (analyze && cfg.normalform))
    timed("normalform", [&] { return runner.normalform_block(res.files); });
  if (cmd == Command::Classify || (analyze && cfg.normalform))
    timed("classify", [&] { return runner.classify_block(); });

  const SystemSpec& s = cfg.spec;
  const Tolerances& t = s.tol;
  json tol = {{"commute", t.commute},       {"firstint", t.firstint},   {"return", t.ret},
              {"ode_abs", t.ode_abs},       {"ode_rel", t.ode_rel},     {"box", t.box},
              {"horizon", t.horizon},       {"max_time", t.max_time},   {"avg", t.avg},
              {"hypothesis", t.hypothesis}, {"conformal", t.conformal}, {"conformal_gen", t.conformal_gen},
              {"quasi", t.quasi},           {"isotropy", t.isotropy},   {"primitive", t.primitive},
              {"rank", t.rank},             {"action", cfg.action_tol}, {"path", cfg.path_tol},
              {"normal", cfg.normal_tol}};
  json settings = {{"coords", s.coords}, {"grid", cfg.grid}, {"sample_grid", cfg.sample_grid}};
  if (cfg.normalform) settings["maxdeg"] = cfg.normalform->maxdeg;
  settings["tolerances"] = tol;

  static const char* names[] = {"analyze", "actions", "conserve", "normalize", "classify"};
  res.pass = runner.pass;
  timing["threads"] = cfg.threads;
  timing["total"] = std::chrono::duration<double>(clock::now() - t0).count();
  res.report = {{"tool", "liouville"},
                {"version", LIOUVILLE_VERSION},
                {"command", names[static_cast<int>(cmd)]},
                {"config_hash", cfg.hash},
                {"settings", settings},
                {"blocks", blocks},
                {"warnings", runner.warnings},
                {"pass", res.pass},
                {"timing", timing}};
  return res;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::Config, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot rename onto '" + path.string() + "': " + ec.message());
}

std::string report_text(const json& report) { return report.dump(2) + "\n"; }

}  // namespace liouville::cli
