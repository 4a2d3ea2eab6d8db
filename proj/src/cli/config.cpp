#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "liouville/cli.hpp"

namespace liouville::cli {

namespace {

// Canonical section order; anything else is rejected.
const std::vector<std::string> kSections{"system",   "constants", "products", "hamiltonians", "fields",
                                         "integrals", "omega",     "poisson",  "alpha",        "seeds",
                                         "tensors",  "tolerances", "actions",  "normalform",   "run",
                                         "output"};

std::string strip_all(std::string_view s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  return out;
}

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

// Whitespace runs vanish unless they separate two word characters, where one
// space is kept, so the token sequence never changes.
std::string canonical_value(std::string_view s) {
  std::string out;
  bool gap = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      gap = true;
      continue;
    }
    if (gap && !out.empty() && word_char(out.back()) && word_char(c)) out.push_back(' ');
    gap = false;
    out.push_back(c);
  }
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::Config, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t k = s.find(sep, start);
    out.push_back(s.substr(start, k - start));
    if (k == std::string::npos) break;
    start = k + 1;
  }
  return out;
}

double to_double(const ConfigEntry& e, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    fail(e.line, "'" + e.key + "': expected a number, got '" + v + "'");
  return out;
}

long to_long(const ConfigEntry& e, long lo) {
  long out = 0;
  const auto& v = e.value;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty() || out < lo)
    fail(e.line, "'" + e.key + "': expected an integer >= " + std::to_string(lo) + ", got '" + v + "'");
  return out;
}

std::size_t coord_index(const std::vector<std::string>& coords, const std::string& name, const ConfigEntry& e) {
  auto it = std::find(coords.begin(), coords.end(), name);
  if (it == coords.end()) fail(e.line, "unknown coordinate '" + name + "'");
  return static_cast<std::size_t>(it - coords.begin());
}

Expr expr_at(const std::string& src, const std::vector<std::string>& coords, const IrrationalBasis& basis,
             const std::string& where, const ConfigEntry& e) {
  try {
    return parse_expr(src, coords, basis);
  } catch (const Error& err) {
    fail(e.line, "[" + where + "] " + e.key + ": " + err.what());
  }
}

TensorField volume_form(std::size_t m) {
  TensorField t(m, 0, m);
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    int sign = 1;
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i + 1; j < m; ++j)
        if (perm[i] > perm[j]) sign = -sign;
    t.at(perm) = Expr::constant(sign);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return t;
}

// factor := omega | poisson | volume | X<k> | dH<k> | dF<k>
TensorField tensor_factor(const std::string& f, const SystemSpec& s, const ConfigEntry& e) {
  const std::size_t m = s.m();
  auto index = [&](std::size_t skip, std::size_t count) {
    const std::string digits = f.substr(skip);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || k == 0 || k > count)
      fail(e.line, "tensor factor '" + f + "' is out of range");
    return k - 1;
  };
  if (f == "omega") {
    if (!s.omega) fail(e.line, "tensor factor 'omega' needs an [omega] section");
    return s.omega->as_tensor();
  }
  if (f == "poisson") {
    if (!s.poisson) fail(e.line, "tensor factor 'poisson' needs a [poisson] section");
    return s.poisson->as_tensor();
  }
  if (f == "volume") return volume_form(m);
  if (f.rfind("dH", 0) == 0) return TensorField::differential(s.hamiltonians[index(2, s.hamiltonians.size())], m);
  if (f.rfind("dF", 0) == 0) return TensorField::differential(s.integrals[index(2, s.integrals.size())], m);
  if (f.rfind("X", 0) == 0) return TensorField::vector(s.fields[index(1, s.fields.size())]);
  fail(e.line, "unknown tensor factor '" + f + "'");
}

template <class T>
T parse_mode(const ConfigEntry& e, T (*parser)(std::string_view)) {
  try {
    return parser(e.value);
  } catch (const Error& err) {
    fail(e.line, err.what());
  }
}

PdMode pd_mode(std::string_view s) {
  if (s == "hamiltonian") return PdMode::Hamiltonian;
  if (s == "vectorfield") return PdMode::VectorField;
  throw Error(ErrorKind::Config, "normal-form mode must be 'hamiltonian' or 'vectorfield', got '" + std::string(s) + "'");
}

}  // namespace

const ConfigEntry* ConfigSection::find(std::string_view key) const {
  for (const auto& e : entries)
    if (e.key == key) return &e;
  return nullptr;
}

const ConfigSection* ConfigFile::find(std::string_view name) const {
  for (const auto& s : sections)
    if (s.name == name) return &s;
  return nullptr;
}

ConfigFile parse_config(std::string_view text) {
  std::vector<ConfigSection> found;
  ConfigSection* cur = nullptr;
  std::size_t lineno = 0;
  std::string pending;
  std::size_t pending_line = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto h = raw.find('#'); h != std::string::npos) raw.erase(h);
    std::string line = trim(raw);
    if (!pending.empty()) {
      line = pending + " " + line;
      pending.clear();
    } else {
      pending_line = lineno;
    }
    if (!line.empty() && line.back() == '\\') {
      pending = line.substr(0, line.size() - 1);
      continue;
    }
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(pending_line, "unterminated section header");
      const std::string name = strip_all(line.substr(1, line.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), name) == kSections.end())
        fail(pending_line, "unknown section [" + name + "]");
      for (const auto& s : found)
        if (s.name == name) fail(pending_line, "section [" + name + "] appears twice");
      found.push_back({name, {}, pending_line});
      cur = &found.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(pending_line, "expected 'key = value'");
    if (!cur) fail(pending_line, "entry before the first section header");
    const std::string rhs = trim(line.substr(eq + 1));
    ConfigEntry e{strip_all(line.substr(0, eq)), canonical_value(rhs), rhs, pending_line};
    if (e.key.empty()) fail(pending_line, "empty key");
    if (e.value.empty()) fail(pending_line, "empty value for '" + e.key + "'");
    if (cur->find(e.key)) fail(pending_line, "duplicate key '" + e.key + "' in [" + cur->name + "]");
    cur->entries.push_back(std::move(e));
  }
  if (!pending.empty()) fail(lineno, "continuation at end of file");
  ConfigFile out;
  for (const auto& name : kSections)
    for (auto& s : found)
      if (s.name == name) out.sections.push_back(std::move(s));
  return out;
}

std::string reprint(const ConfigFile& c) {
  std::string out;
  for (const auto& s : c.sections) {
    if (!out.empty()) out += "\n";
    out += "[" + s.name + "]\n";
    for (const auto& e : s.entries) out += e.key + " = " + e.value + "\n";
  }
  return out;
}

std::string config_hash(const ConfigFile& c) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : reprint(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void set_tolerance(AnalysisConfig& cfg, std::string_view key, std::string_view value) {
  const ConfigEntry e{std::string(key), canonical_value(value), std::string(value), 0};
  const double v = to_double(e, e.value);
  if (!(v > 0.0)) throw Error(ErrorKind::Config, "tolerance '" + e.key + "' must be positive");
  auto& t = cfg.spec.tol;
  const std::map<std::string, double*, std::less<>> slots{
      {"commute", &t.commute},     {"firstint", &t.firstint},     {"return", &t.ret},
      {"ode_abs", &t.ode_abs},     {"ode_rel", &t.ode_rel},       {"box", &t.box},
      {"horizon", &t.horizon},     {"max_time", &t.max_time},     {"avg", &t.avg},
      {"hypothesis", &t.hypothesis}, {"conformal", &t.conformal}, {"conformal_gen", &t.conformal_gen},
      {"quasi", &t.quasi},         {"isotropy", &t.isotropy},     {"primitive", &t.primitive},
      {"rank", &t.rank},           {"action", &cfg.action_tol},   {"path", &cfg.path_tol},
      {"normal", &cfg.normal_tol}};
  auto it = slots.find(key);
  if (it == slots.end()) throw Error(ErrorKind::Config, "unknown tolerance '" + e.key + "'");
  *it->second = v;
}

std::optional<Command> parse_command(std::string_view name) {
  if (name == "analyze") return Command::Analyze;
  if (name == "actions") return Command::Actions;
  if (name == "conserve") return Command::Conserve;
  if (name == "normalize") return Command::Normalize;
  if (name == "classify") return Command::Classify;
  return std::nullopt;
}

AnalysisConfig load_config(std::string_view text, const Overrides& ov) {
  AnalysisConfig cfg;
  cfg.file = parse_config(text);
  cfg.hash = config_hash(cfg.file);
  const ConfigFile& f = cfg.file;
  SystemSpec& s = cfg.spec;
  static const ConfigSection empty;
  auto section = [&](std::string_view name) -> const ConfigSection& {
    const ConfigSection* p = f.find(name);
    return p ? *p : empty;
  };

  const ConfigSection& sys = section("system");
  const ConfigEntry* coords = sys.find("coords");
  if (!coords) throw Error(ErrorKind::Config, "[system] needs 'coords'");
  s.coords = split(coords->value, ',');
  for (const auto& e : sys.entries)
    if (e.key != "coords") fail(e.line, "unknown key '" + e.key + "' in [system]");

  for (const auto& e : section("constants").entries) {
    const bool imag = e.value.rfind("i*", 0) == 0;
    try {
      s.basis.add(e.key, imag ? e.value.substr(2) : e.value, imag);
    } catch (const Error& err) {
      fail(e.line, err.what());
    }
  }
  for (const auto& e : section("products").entries) {
    const auto ab = split(e.key, '*');
    if (ab.size() != 2) fail(e.line, "product key must be 'a*b'");
    cfg.products.push_back({ab[0], ab[1], e.value});
  }

  const auto& basis = s.basis;
  for (const auto& e : section("hamiltonians").entries)
    s.hamiltonians.push_back(expr_at(e.raw, s.coords, basis, "hamiltonians", e));

  const std::size_t m = s.coords.size();
  if (const ConfigSection* om = f.find("omega")) {
    Structure2Form w(m);
    for (const auto& e : om->entries) {
      const auto ab = split(e.key, ',');
      if (ab.size() != 2) fail(e.line, "[omega] key must be 'a,b'");
      const std::size_t a = coord_index(s.coords, ab[0], e), b = coord_index(s.coords, ab[1], e);
      if (a == b) fail(e.line, "[omega] diagonal entry");
      w.set(a, b, expr_at(e.raw, s.coords, basis, "omega", e));
    }
    s.omega = std::move(w);
  }
  if (const ConfigSection* po = f.find("poisson")) {
    PoissonBivector pi(m);
    for (const auto& e : po->entries) {
      const auto ab = split(e.key, ',');
      if (ab.size() != 2) fail(e.line, "[poisson] key must be 'a,b'");
      const std::size_t a = coord_index(s.coords, ab[0], e), b = coord_index(s.coords, ab[1], e);
      if (a == b) fail(e.line, "[poisson] diagonal entry");
      pi.set(a, b, expr_at(e.raw, s.coords, basis, "poisson", e));
    }
    s.poisson = std::move(pi);
  }
  if (s.omega && s.poisson) throw Error(ErrorKind::Config, "declare either [omega] or [poisson], not both");

  if (const ConfigSection* fs = f.find("fields")) {
    for (const auto& e : fs->entries) {
      const auto parts = split(e.raw, ';');
      if (parts.size() != m) fail(e.line, "field '" + e.key + "' needs " + std::to_string(m) + " components");
      std::vector<Expr> comp;
      for (const auto& c : parts) comp.push_back(expr_at(c, s.coords, basis, "fields", e));
      s.fields.emplace_back(std::move(comp));
    }
  } else if (!s.hamiltonians.empty()) {
    if (s.omega) {
      for (const auto& h : s.hamiltonians) {
        auto solve = hamiltonian_vf_2form(*s.omega, h);
        if (!solve.symbolic)
          throw Error(ErrorKind::Config, "omega is not constant; declare the fields in a [fields] section");
        s.fields.push_back(std::move(solve.field));
      }
    } else if (s.poisson) {
      for (const auto& h : s.hamiltonians) s.fields.push_back(hamiltonian_vf_poisson(*s.poisson, h));
    } else {
      throw Error(ErrorKind::Config, "[hamiltonians] without [fields] needs [omega] or [poisson]");
    }
  }
  if (!s.hamiltonians.empty() && s.hamiltonians.size() != s.fields.size())
    throw Error(ErrorKind::Config, "one Hamiltonian per field is required");

  if (const ConfigSection* is = f.find("integrals")) {
    for (const auto& e : is->entries) s.integrals.push_back(expr_at(e.raw, s.coords, basis, "integrals", e));
  } else {
    s.integrals = s.hamiltonians;
  }

  if (const ConfigSection* al = f.find("alpha")) {
    cfg.alpha.assign(m, Expr());
    for (const auto& e : al->entries)
      cfg.alpha[coord_index(s.coords, e.key, e)] = expr_at(e.raw, s.coords, basis, "alpha", e);
  }

  for (const auto& e : section("seeds").entries) {
    std::vector<double> x;
    for (const auto& v : split(e.value, ',')) x.push_back(to_double(e, v));
    if (x.size() != m) fail(e.line, "seed '" + e.key + "' needs " + std::to_string(m) + " values");
    cfg.seeds.emplace_back(e.key, std::move(x));
  }

  if (!s.fields.empty()) {
    try {
      validate(s);
    } catch (const Error& err) {
      throw Error(ErrorKind::Config, err.what());
    }
  }

  for (const auto& e : section("tensors").entries) {
    if (s.fields.empty()) fail(e.line, "tensors need a declared system");
    std::optional<TensorField> t;
    for (const auto& factor : split(e.value, '*')) {
      TensorField g = tensor_factor(factor, s, e);
      t = t ? tensor_product(*t, g) : g;
    }
    cfg.tensors.push_back({e.key, std::move(*t)});
  }

  for (const auto& e : section("tolerances").entries) {
    try {
      set_tolerance(cfg, e.key, e.value);
    } catch (const Error& err) {
      fail(e.line, err.what());
    }
  }

  for (const auto& e : section("actions").entries) {
    if (e.key == "normal_mode")
      cfg.normal_mode = parse_mode(e, &parse_normal_mode);
    else
      fail(e.line, "unknown key '" + e.key + "' in [actions]");
  }

  if (const ConfigSection* nf = f.find("normalform")) {
    NormalFormSettings n;
    n.coords = s.coords;
    for (const auto& e : nf->entries) {
      if (e.key == "mode")
        n.mode = parse_mode(e, &pd_mode);
      else if (e.key == "coords")
        n.coords = split(e.value, ',');
      else if (e.key == "maxdeg")
        n.maxdeg = static_cast<int>(to_long(e, 2));
      else if (e.key != "input")
        fail(e.line, "unknown key '" + e.key + "' in [normalform]");
    }
    const ConfigEntry* input = nf->find("input");
    if (!input) fail(nf->line, "[normalform] needs 'input'");
    n.input = split(input->raw, ';');
    const std::size_t want = n.mode == PdMode::Hamiltonian ? 1 : n.coords.size();
    if (n.input.size() != want)
      fail(input->line, "[normalform] input needs " + std::to_string(want) + " expression(s) separated by ';'");
    for (const auto& src : n.input) expr_at(src, n.coords, basis, "normalform", *input);
    cfg.normalform = std::move(n);
  }

  for (const auto& e : section("run").entries) {
    if (e.key == "grid")
      cfg.grid = static_cast<std::size_t>(to_long(e, 2));
    else if (e.key == "sample_grid")
      cfg.sample_grid = static_cast<std::size_t>(to_long(e, 1));
    else if (e.key == "threads")
      cfg.threads = static_cast<std::size_t>(to_long(e, 1));
    else
      fail(e.line, "unknown key '" + e.key + "' in [run]");
  }
  for (const auto& e : section("output").entries) {
    if (e.key == "dir")
      cfg.out = e.value;
    else
      fail(e.line, "unknown key '" + e.key + "' in [output]");
  }

  if (ov.out) cfg.out = *ov.out;
  if (ov.grid) {
    if (*ov.grid < 2) throw Error(ErrorKind::Config, "--grid must be at least 2");
    cfg.grid = *ov.grid;
  }
  if (ov.threads) {
    if (*ov.threads < 1) throw Error(ErrorKind::Config, "--threads must be at least 1");
    cfg.threads = *ov.threads;
  }
  if (ov.maxdeg) {
    if (!cfg.normalform) throw Error(ErrorKind::Config, "--maxdeg given but the config has no [normalform]");
    if (*ov.maxdeg < 2) throw Error(ErrorKind::Config, "--maxdeg must be at least 2");
    cfg.normalform->maxdeg = *ov.maxdeg;
  }
  for (const auto& [k, v] : ov.tol) set_tolerance(cfg, k, v);
  return cfg;
}

AnalysisConfig load_config_file(const std::filesystem::path& path, const Overrides& ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot read config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_config(ss.str(), ov);
}

}  // namespace liouville::cli
