#include "besi/experiment.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "besi/classify.hpp"
#include "besi/kernels.hpp"
#include "besi/parallel.hpp"
#include "besi/pseudometrics.hpp"
#include "besi/spectral.hpp"
#include "besi/symbolic.hpp"

namespace besi {

namespace {

constexpr double kSilver = 0.41421356237309504880;  // √2 − 1

// ---------------------------------------------------------------------------
// Fixtures

struct SystemFixture {
  const char* name;
  const char* description;
  SystemHandle (*make)();
  std::vector<std::string> observables;
};

const std::vector<SystemFixture>& system_fixtures() {
  static const std::vector<SystemFixture> f = {
      {"bernoulli_half", "full shift on {0,1} with the (1/2,1/2) product measure",
       [] { return make_bernoulli_shift(0.5); },
       {"symbol(0)", "centered_symbol(0,0.5)", "parity(0,1)"}},
      {"fibonacci", "Fibonacci substitution subshift", [] { return make_substitution_subshift(SubstitutionRule::fibonacci); },
       {"symbol(0)", "centered_symbol(0,0.38196601125010515)", "parity(0,1)"}},
      {"flow_golden", "linear flow on the circle with speed 1/phi",
       [] { return make_torus_rotation({kGoldenFraction}, GroupKind::continuous); },
       {"torus_character(1)", "torus_cosine(0)", "exp_cosine(0)"}},
      {"rotation_2d", "rotation of the 2-torus by (1/phi, sqrt2-1)",
       [] { return make_torus_rotation({kGoldenFraction, kSilver}); },
       {"torus_character(1,0)", "torus_cosine(1)", "exp_cosine(0)"}},
      {"rotation_golden", "circle rotation by 1/phi", [] { return make_torus_rotation({kGoldenFraction}); },
       {"torus_character(1)", "torus_cosine(0)", "exp_cosine(0)"}},
      {"rotation_product", "product of circle rotations by 1/phi and sqrt2-1",
       [] { return make_product(make_torus_rotation({kGoldenFraction}), make_torus_rotation({kSilver})); },
       {"torus_character(1,0)", "torus_cosine(1)", "exp_cosine(0)"}},
      {"sturmian_silver", "Sturmian subshift with slope sqrt2-1", [] { return make_sturmian(kSilver); },
       {"symbol(0)", "centered_symbol(0,0.41421356237309503)", "parity(0,1)"}},
      {"thue_morse", "Thue-Morse substitution subshift", [] { return make_substitution_subshift(SubstitutionRule::thue_morse); },
       {"symbol(0)", "centered_symbol(0,0.5)", "parity(0,1)"}},
  };
  return f;
}

struct DeloneFixture {
  const char* name;
  const char* description;
  Construction construction;
  Box region;
};

const std::vector<DeloneFixture>& delone_fixtures() {
  static const std::vector<DeloneFixture> f = {
      {"delone_fibonacci", "Fibonacci cut-and-project chain on [0, 13820)", CutProjectSpec{0.5}, Box::cube(1, 0.0, 13820.0)},
      {"delone_lattice_z", "integer lattice on [0, 10000)", integer_lattice(1), Box::cube(1, 0.0, 10000.0)},
      {"delone_lattice_z2", "square lattice on [0, 100)^2", integer_lattice(2), Box::cube(2, 0.0, 100.0)},
      {"delone_poisson", "Poisson-type patch of intensity 1 on [0, 10000)", PoissonSpec{1.0}, Box::cube(1, 0.0, 10000.0)},
  };
  return f;
}

struct ObservableFamily {
  const char* name;
  const char* description;
};

const std::vector<ObservableFamily>& observable_families() {
  static const std::vector<ObservableFamily> f = {
      {"centered_symbol(i,mean)", "x_i - mean on symbolic systems"},
      {"constant(c)", "constant function"},
      {"cylinder(start:word)", "indicator of a cylinder set"},
      {"exp_cosine(i)", "exp(cos(2 pi x_i)) on tori"},
      {"parity(i,j)", "indicator of x_i = x_j on symbolic systems"},
      {"symbol(i)", "coordinate x_i on symbolic systems"},
      {"torus_character(k1,...)", "character exp(2 pi i <k, x>) on tori"},
      {"torus_cosine(i)", "cos(2 pi x_i) on tori"},
  };
  return f;
}

template <class T>
std::string valid_names(const std::vector<T>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : ", ") + std::string(x.name);
  return s;
}

}  // namespace

std::vector<FixtureInfo> list_fixtures(const std::string& filter) {
  std::vector<FixtureInfo> out;
  for (const auto& f : system_fixtures()) out.push_back({f.name, "system", to_string(f.make()->known_class()), f.description});
  for (const auto& f : delone_fixtures()) {
    const bool periodic = std::holds_alternative<LatticeSpec>(f.construction);
    const bool model = std::holds_alternative<CutProjectSpec>(f.construction);
    out.push_back({f.name, "delone", periodic || model ? "discrete_spectrum" : "unknown", f.description});
  }
  for (const auto& f : observable_families()) out.push_back({f.name, "observable", "n/a", f.description});
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
  if (!filter.empty())
    std::erase_if(out, [&](const FixtureInfo& f) {
      return f.name.find(filter) == std::string::npos && f.description.find(filter) == std::string::npos &&
             f.category != filter;
    });
  return out;
}

SystemHandle fixture_system(const std::string& name) {
  for (const auto& f : system_fixtures())
    if (name == f.name) return f.make();
  throw ConfigError("unknown system '" + name + "'; valid systems: " + valid_names(system_fixtures()));
}

std::vector<std::string> fixture_observables(const std::string& name) {
  for (const auto& f : system_fixtures())
    if (name == f.name) return f.observables;
  throw ConfigError("unknown system '" + name + "'; valid systems: " + valid_names(system_fixtures()));
}

DeloneSet fixture_delone(const std::string& name, std::uint64_t seed) {
  for (const auto& f : delone_fixtures())
    if (name == f.name) return build_delone(f.construction, f.region, seed);
  throw ConfigError("unknown Delone set '" + name + "'; valid sets: " + valid_names(delone_fixtures()));
}

Observable parse_observable(const std::string& tag) {
  const auto open = tag.find('('), close = tag.rfind(')');
  auto bad = [&](const std::string& why) -> ConfigError {
    return ConfigError("observable '" + tag + "': " + why + "; valid families: " + valid_names(observable_families()));
  };
  if (open == std::string::npos || close != tag.size() - 1 || close < open) throw bad("expected name(args)");
  const std::string name = tag.substr(0, open);
  const std::string body = tag.substr(open + 1, close - open - 1);
  std::vector<std::string> args;
  {
    std::string cur;
    for (char c : body) {
      if (c == ',') {
        args.push_back(cur);
        cur.clear();
      } else if (c != ' ') {
        cur += c;
      }
    }
    if (!cur.empty() || !args.empty()) args.push_back(cur);
  }
  auto num = [&](const std::string& s) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &pos);
    } catch (const std::exception&) {
      throw bad("'" + s + "' is not a number");
    }
    if (pos != s.size()) throw bad("'" + s + "' is not a number");
    return v;
  };
  auto integer = [&](const std::string& s) {
    const double v = num(s);
    if (v != std::floor(v) || std::abs(v) > 1e15) throw bad("'" + s + "' is not an integer");
    return static_cast<std::int64_t>(v);
  };
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (args.size() < lo || args.size() > hi) throw bad("wrong number of arguments");
  };
  try {
    if (name == "constant") {
      arity(1, 2);
      return obs::constant(cplx(num(args[0]), args.size() > 1 ? num(args[1]) : 0.0));
    }
    if (name == "torus_character") {
      arity(1, 16);
      std::vector<int> k;
      for (const auto& a : args) k.push_back(static_cast<int>(integer(a)));
      return obs::torus_character(k);
    }
    if (name == "torus_cosine" || name == "exp_cosine") {
      arity(1, 1);
      const auto i = integer(args[0]);
      if (i < 0) throw bad("coordinate index must be >= 0");
      return name == "torus_cosine" ? obs::torus_cosine(static_cast<std::size_t>(i)) : obs::exp_cosine(static_cast<std::size_t>(i));
    }
    if (name == "symbol") {
      arity(1, 1);
      return obs::symbol(integer(args[0]));
    }
    if (name == "centered_symbol") {
      arity(2, 2);
      return obs::centered_symbol(num(args[1]), integer(args[0]));
    }
    if (name == "parity") {
      arity(2, 2);
      return obs::parity(integer(args[0]), integer(args[1]));
    }
    if (name == "cylinder") {
      arity(1, 1);
      const auto colon = args[0].find(':');
      if (colon == std::string::npos) throw bad("expected cylinder(start:word)");
      std::vector<int> word;
      for (char c : args[0].substr(colon + 1)) {
        if (c != '0' && c != '1') throw bad("cylinder words use the letters 0 and 1");
        word.push_back(c - '0');
      }
      return obs::cylinder(word, integer(args[0].substr(0, colon)));
    }
  } catch (const InvalidArgument& e) {
    throw bad(e.what());
  }
  throw bad("unknown family '" + name + "'");
}

namespace {

// ---------------------------------------------------------------------------
// Config plumbing

json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined: return nullptr;
    case YAML::NodeType::Sequence: {
      json a = json::array();
      for (const auto& x : n) a.push_back(yaml_to_json(x));
      return a;
    }
    case YAML::NodeType::Map: {
      json o = json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar: {
      const std::string s = n.Scalar();
      if (n.Tag() == "!") return s;  // quoted
      if (s == "true" || s == "false") return s == "true";
      if (!s.empty()) {
        try {
          std::size_t pos = 0;
          if (s.find_first_of(".eE") == std::string::npos && s[0] != '-') {
            const unsigned long long u = std::stoull(s, &pos);
            if (pos == s.size()) return static_cast<std::uint64_t>(u);
          }
          const double v = std::stod(s, &pos);
          if (pos == s.size()) return v;
        } catch (const std::exception&) {
        }
      }
      return s;
    }
  }
  return nullptr;
}

class Section {
 public:
  Section(const json* j, std::string where, std::set<std::string> keys) : j_(j), where_(std::move(where)) {
    if (j_ == nullptr || j_->is_null()) {
      j_ = &empty_;
      return;
    }
    if (!j_->is_object()) throw ConfigError(where_ + ": expected a mapping");
    for (const auto& [k, v] : j_->items()) {
      if (!keys.count(k)) {
        std::string valid;
        for (const auto& s : keys) valid += (valid.empty() ? "" : ", ") + s;
        throw ConfigError(where_ + ": unknown key '" + k + "' (valid keys: " + valid + ")");
      }
    }
  }

  bool has(const std::string& k) const { return j_->contains(k) && !(*j_)[k].is_null(); }
  const json* sub(const std::string& k) const { return has(k) ? &(*j_)[k] : nullptr; }
  std::string path(const std::string& k) const { return where_ + "." + k; }

  double number(const std::string& k, double def) const {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (!v.is_number()) throw ConfigError(path(k) + ": expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(path(k) + ": must be finite");
    return x;
  }
  std::uint64_t u64(const std::string& k, std::uint64_t def) const {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      throw ConfigError(path(k) + ": expected a nonnegative integer");
    return v.get<std::uint64_t>();
  }
  std::string str(const std::string& k, const std::string& def) const {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (!v.is_string()) throw ConfigError(path(k) + ": expected a string");
    return v.get<std::string>();
  }
  bool boolean(const std::string& k, bool def) const {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (!v.is_boolean()) throw ConfigError(path(k) + ": expected true or false");
    return v.get<bool>();
  }
  std::vector<double> numbers(const std::string& k, std::vector<double> def) const {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (!v.is_array()) throw ConfigError(path(k) + ": expected a list of numbers");
    std::vector<double> out;
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigError(path(k) + ": expected a list of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  std::vector<std::string> strings(const std::string& k, std::vector<std::string> def) const {
    if (!has(k)) return def;
    const json& v = (*j_)[k];
    if (v.is_string()) return {v.get<std::string>()};
    if (!v.is_array()) throw ConfigError(path(k) + ": expected a list of strings");
    std::vector<std::string> out;
    for (const auto& x : v) {
      if (!x.is_string()) throw ConfigError(path(k) + ": expected a list of strings");
      out.push_back(x.get<std::string>());
    }
    return out;
  }

 private:
  const json* j_;
  std::string where_;
  inline static const json empty_ = json::object();
};

Schedule parse_schedule(const json* j, const std::string& where, Schedule def) {
  if (j == nullptr || j->is_null()) return def;
  Schedule s;
  try {
    if (j->is_array()) {
      std::vector<double> sizes;
      for (const auto& x : *j) {
        if (!x.is_number()) throw ConfigError(where + ": expected numbers");
        sizes.push_back(x.get<double>());
      }
      s = Schedule(sizes, std::min<std::size_t>(def.burn_in, sizes.empty() ? 0 : sizes.size() - 1));
    } else {
      Section sec(j, where, {"sizes", "burn_in"});
      const auto sizes = sec.numbers("sizes", def.sizes);
      s = Schedule(sizes, static_cast<std::size_t>(sec.u64("burn_in", def.burn_in)));
    }
    s.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  return s;
}

SystemHandle build_system(const json& spec, const std::string& where) {
  if (spec.is_string()) return fixture_system(spec.get<std::string>());
  Section sec(&spec, where, {"type", "alpha", "group", "p", "rule", "factors"});
  const std::string type = sec.str("type", "");
  try {
    if (type == "torus_rotation") {
      const auto alpha = sec.numbers("alpha", {});
      if (alpha.empty()) throw ConfigError(sec.path("alpha") + ": required");
      const std::string g = sec.str("group", "discrete");
      if (g != "discrete" && g != "continuous") throw ConfigError(sec.path("group") + ": discrete or continuous");
      return make_torus_rotation(alpha, g == "discrete" ? GroupKind::discrete : GroupKind::continuous);
    }
    if (type == "bernoulli_shift") return make_bernoulli_shift(sec.number("p", 0.5));
    if (type == "sturmian") {
      if (!sec.has("alpha")) throw ConfigError(sec.path("alpha") + ": required");
      return make_sturmian(sec.number("alpha", 0.0));
    }
    if (type == "substitution") {
      const std::string r = sec.str("rule", "");
      if (r == "fibonacci") return make_substitution_subshift(SubstitutionRule::fibonacci);
      if (r == "thue_morse") return make_substitution_subshift(SubstitutionRule::thue_morse);
      throw ConfigError(sec.path("rule") + ": fibonacci or thue_morse");
    }
    if (type == "product") {
      const json* f = sec.sub("factors");
      if (f == nullptr || !f->is_array() || f->size() != 2) throw ConfigError(sec.path("factors") + ": expected two systems");
      return make_product(build_system((*f)[0], sec.path("factors[0]")), build_system((*f)[1], sec.path("factors[1]")));
    }
  } catch (const InvalidArgument& e) {
    throw ConfigError(where + ": " + e.what());
  }
  throw ConfigError(where + ".type: unknown system type '" + type +
                    "' (valid: torus_rotation, bernoulli_shift, sturmian, substitution, product) or a fixture name: " +
                    valid_names(system_fixtures()));
}

std::vector<std::string> default_observable_tags(const json& spec) {
  if (spec.is_string()) return fixture_observables(spec.get<std::string>());
  const std::string type = spec.value("type", "");
  auto shift_tags = [](double mean) {
    std::ostringstream m;
    m.precision(17);
    m << "centered_symbol(0," << mean << ")";
    return std::vector<std::string>{"symbol(0)", m.str(), "parity(0,1)"};
  };
  if (type == "product") return {"torus_character(1,0)", "torus_cosine(1)", "exp_cosine(0)"};
  if (type == "torus_rotation") {
    const auto& a = spec["alpha"];
    if (a.is_array() && a.size() > 1) return {"torus_character(1,0)", "torus_cosine(1)", "exp_cosine(0)"};
    return {"torus_character(1)", "torus_cosine(0)", "exp_cosine(0)"};
  }
  if (type == "bernoulli_shift") return shift_tags(spec.value("p", 0.5));
  if (type == "sturmian") return shift_tags(spec.value("alpha", 0.5));
  if (type == "substitution" && spec.value("rule", "") == "fibonacci") return shift_tags(kFibonacciSlope);
  return shift_tags(0.5);
}

Box parse_region(const json* j, const std::string& where, const Box& def) {
  if (j == nullptr) return def;
  Section sec(j, where, {"lo", "hi"});
  const auto lo = sec.numbers("lo", {}), hi = sec.numbers("hi", {});
  if (lo.empty() || lo.size() != hi.size() || lo.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigError(where + ": lo and hi must be equal-length lists of 1..3 numbers");
  Box b;
  b.d = static_cast<int>(lo.size());
  for (std::size_t a = 0; a < lo.size(); ++a) {
    if (!(hi[a] > lo[a])) throw ConfigError(where + ": hi must exceed lo");
    b.lo[a] = lo[a];
    b.hi[a] = hi[a];
  }
  return b;
}

json region_json(const Box& b) {
  json lo = json::array(), hi = json::array();
  for (int a = 0; a < b.d; ++a) {
    lo.push_back(b.lo[static_cast<std::size_t>(a)]);
    hi.push_back(b.hi[static_cast<std::size_t>(a)]);
  }
  return {{"lo", lo}, {"hi", hi}};
}

struct DeloneInput {
  DeloneSet set;
  json echo;
};

DeloneInput build_delone_input(const json& spec, const json* region_spec, std::uint64_t seed) {
  if (spec.is_string()) {
    const std::string name = spec.get<std::string>();
    for (const auto& f : delone_fixtures())
      if (name == f.name) {
        const Box region = parse_region(region_spec, "region", f.region);
        try {
          return {build_delone(f.construction, region, seed), {{"delone", name}, {"region", region_json(region)}}};
        } catch (const InvalidArgument& e) {
          throw ConfigError("delone: " + std::string(e.what()));
        }
      }
    throw ConfigError("unknown Delone set '" + name + "'; valid sets: " + valid_names(delone_fixtures()));
  }
  Section sec(&spec, "delone", {"type", "basis", "beta", "amplitude", "intensity"});
  const std::string type = sec.str("type", "");
  if (region_spec == nullptr) throw ConfigError("region: required for an explicit Delone construction");
  const Box region = parse_region(region_spec, "region", {});
  auto basis = [&]() {
    LatticeSpec l;
    const json* b = sec.sub("basis");
    if (b == nullptr) return integer_lattice(region.d);
    if (!b->is_array()) throw ConfigError("delone.basis: expected a list of vectors");
    for (const auto& row : *b) {
      if (!row.is_array() || static_cast<int>(row.size()) != region.d)
        throw ConfigError("delone.basis: each vector needs one entry per dimension");
      Vec v{};
      for (std::size_t a = 0; a < row.size(); ++a) {
        if (!row[a].is_number()) throw ConfigError("delone.basis: expected numbers");
        v[a] = row[a].get<double>();
      }
      l.basis.push_back(v);
    }
    return l;
  };
  Construction c;
  json echo = {{"type", type}};
  if (type == "lattice") {
    c = basis();
  } else if (type == "cut_project") {
    c = CutProjectSpec{sec.number("beta", 0.5)};
    echo["beta"] = std::get<CutProjectSpec>(c).beta;
  } else if (type == "perturbed") {
    c = PerturbedSpec{basis(), sec.number("amplitude", 0.0)};
    echo["amplitude"] = std::get<PerturbedSpec>(c).amplitude;
  } else if (type == "poisson") {
    c = PoissonSpec{sec.number("intensity", 1.0)};
    echo["intensity"] = std::get<PoissonSpec>(c).intensity;
  } else {
    throw ConfigError("delone.type: unknown construction '" + type + "' (valid: lattice, cut_project, perturbed, poisson)");
  }
  if (const auto* l = std::get_if<LatticeSpec>(&c)) {
    json b = json::array();
    for (const auto& v : l->basis) {
      json row = json::array();
      for (int a = 0; a < region.d; ++a) row.push_back(v[static_cast<std::size_t>(a)]);
      b.push_back(row);
    }
    echo["basis"] = b;
  } else if (const auto* p = std::get_if<PerturbedSpec>(&c)) {
    json b = json::array();
    for (const auto& v : p->lattice.basis) {
      json row = json::array();
      for (int a = 0; a < region.d; ++a) row.push_back(v[static_cast<std::size_t>(a)]);
      b.push_back(row);
    }
    echo["basis"] = b;
  }
  try {
    return {build_delone(c, region, seed), {{"delone", echo}, {"region", region_json(region)}}};
  } catch (const InvalidArgument& e) {
    throw ConfigError("delone: " + std::string(e.what()));
  }
}

json system_echo(const json& spec) { return spec; }

std::vector<Observable> build_observables(const std::vector<std::string>& tags) {
  std::vector<Observable> out;
  for (const auto& t : tags) out.push_back(parse_observable(t));
  return out;
}

void check_observables_fit(const System& s, const std::vector<Observable>& fs) {
  // evaluate once on a sample point to surface type mismatches as config errors
  const Point p = s.sample_mu(1);
  for (const auto& f : fs) {
    try {
      (void)f(p);
    } catch (const std::exception& e) {
      throw ConfigError("observable '" + f.tag + "' does not apply to " + s.tag() + ": " + e.what());
    }
  }
}

bool observables_fit(const System& s, const std::vector<Observable>& fs) {
  try {
    check_observables_fit(s, fs);
    return true;
  } catch (const ConfigError&) {
    return false;
  }
}

json windows_json(const Schedule& sched, const GridParams& gp) {
  json a = json::array();
  for (double n : sched.sizes) {
    const Window w(n, gp.kind, gp.d, gp.mesh);
    a.push_back({{"n", n}, {"points", w.point_count()}, {"volume", w.volume()}});
  }
  return {{"burn_in", sched.burn_in}, {"mesh", gp.mesh}, {"windows", a}};
}

std::string trace_rows(const std::string& prefix, const std::vector<std::pair<double, double>>& t) {
  std::ostringstream s;
  s.precision(17);
  for (const auto& [n, v] : t) s << prefix << n << "," << v << "\n";
  return s.str();
}

SamplerParams parse_sampler(const Section& top, json& echo, SamplerParams def) {
  Section sec(top.sub("sampler"), "sampler", {"centers", "per_ball", "depths"});
  SamplerParams p;
  p.n_centers = sec.u64("centers", def.n_centers);
  p.n_per_ball = sec.u64("per_ball", def.n_per_ball);
  p.depths = sec.numbers("depths", def.depths);
  if (p.n_centers < 1 || p.n_per_ball < 1) throw ConfigError("sampler: centers and per_ball must be at least 1");
  echo["sampler"] = {{"centers", p.n_centers}, {"per_ball", p.n_per_ball}, {"depths", p.depths}};
  return p;
}

// A prepared experiment: everything validated, ready to execute.
struct Plan {
  std::string kind;
  json echo;
  std::function<void(ExperimentOutput&)> execute;
};

Plan plan_experiment(const json& cfg, const RunOverrides& ov) {
  static const std::set<std::string> keys = {
      "kind", "seed", "out", "threads", "system", "observables", "observable", "schedule", "mesh", "metrics",
      "pairs", "pair", "point", "grid", "floor_rel", "ap", "ap_cap", "flavors", "sampler", "eps_grid", "tau",
      "spectral_schedule", "expansivity_pairs", "delone", "region", "hull", "diffraction", "point_fraction_threshold"};
  Section top(&cfg, "config", keys);
  Plan plan;
  plan.kind = top.str("kind", "");
  static const std::set<std::string> kinds = {"pseudometric", "spectrum", "classify", "dichotomy", "delone"};
  if (!kinds.count(plan.kind))
    throw ConfigError("config.kind: expected one of pseudometric, spectrum, classify, dichotomy, delone");

  std::uint64_t seed = 0;
  if (ov.seed) seed = *ov.seed;
  else if (top.has("seed")) seed = top.u64("seed", 0);
  else throw ConfigError("config.seed: required (or pass --seed)");

  json& echo = plan.echo;
  echo["kind"] = plan.kind;
  echo["seed"] = seed;
  auto read_mesh = [&](double def) {
    const double m = top.number("mesh", def);
    if (!(m > 0.0)) throw ConfigError("config.mesh: must be positive");
    return m;
  };

  auto main_schedule = [&](Schedule def) {
    Schedule s = parse_schedule(top.sub("schedule"), "config.schedule", def);
    if (ov.schedule) {
      try {
        s = Schedule(*ov.schedule, std::min<std::size_t>(s.burn_in, ov.schedule->size() - 1));
        s.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("--schedule: ") + e.what());
      }
    }
    echo["schedule"] = to_json(s);
    return s;
  };

  if (plan.kind == "delone") {
    if (!top.has("delone")) throw ConfigError("config.delone: required for kind=delone");
    auto in = std::make_shared<DeloneInput>(build_delone_input(*top.sub("delone"), top.sub("region"), seed));
    for (auto& [k, v] : in->echo.items()) echo[k] = v;
    DeloneConfig dc = default_delone_config(in->set.d);
    dc.hull.seed = seed;
    dc.hull.mesh = read_mesh(dc.hull.mesh);
    dc.hull.sched = main_schedule(dc.hull.sched);
    echo["mesh"] = dc.hull.mesh;
    dc.hull.sampler = parse_sampler(top, echo, dc.hull.sampler);
    dc.hull.eps_grid = top.numbers("eps_grid", dc.hull.eps_grid);
    dc.hull.tau = top.number("tau", dc.hull.tau);
    if (!(dc.hull.tau >= 0.0 && dc.hull.tau < 0.5)) throw ConfigError("config.tau: must lie in [0, 1/2)");
    echo["eps_grid"] = dc.hull.eps_grid;
    echo["tau"] = dc.hull.tau;
    {
      Section h(top.sub("hull"), "hull", {"patch_radius"});
      dc.hull_params.patch_radius = h.number("patch_radius", in->set.d == 1 ? 256.0 : 4.0);
      echo["hull"] = {{"patch_radius", dc.hull_params.patch_radius}};
    }
    {
      Section d(top.sub("diffraction"), "diffraction", {"band", "levels", "kappa", "ratio_band", "relative_floor"});
      auto& c = dc.diffraction;
      c.band = d.number("band", c.band);
      c.window_levels = d.u64("levels", c.window_levels);
      c.kappa = d.number("kappa", c.kappa);
      c.ratio_band = d.number("ratio_band", c.ratio_band);
      c.relative_floor = d.number("relative_floor", c.relative_floor);
      if (c.window_levels < 2) throw ConfigError("diffraction.levels: at least 2");
      echo["diffraction"] = {{"band", c.band}, {"levels", c.window_levels}, {"kappa", c.kappa},
                             {"ratio_band", c.ratio_band}, {"relative_floor", c.relative_floor}};
    }
    dc.point_fraction_threshold = top.number("point_fraction_threshold", dc.point_fraction_threshold);
    echo["point_fraction_threshold"] = dc.point_fraction_threshold;
    // hull construction validates the region against patch radius and reach
    try {
      HullParams hp = dc.hull_params;
      hp.reach = dc.hull.sched.largest();
      (void)hull_system(std::make_shared<const DeloneSet>(in->set), hp);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("delone: ") + e.what());
    }
    plan.execute = [in, dc](ExperimentOutput& out) {
      const DeloneReport rep = classify_delone(in->set, dc);
      json r = to_json(rep);
      r["points"] = in->set.points.size();
      r["packing_radius"] = in->set.r;
      r["covering_radius"] = in->set.R;
      out.report["results"] = r;
      out.report["windows"] = windows_json(dc.hull.sched, {GroupKind::continuous, in->set.d, dc.hull.mesh});
      out.files.emplace_back("diffraction.csv", diffraction_csv(rep.diffraction));
    };
    return plan;
  }

  if (!top.has("system")) throw ConfigError("config.system: required");
  const json sys_spec = *top.sub("system");
  const SystemHandle sys = build_system(sys_spec, "config.system");
  echo["system"] = system_echo(sys_spec);
  const double mesh = read_mesh(0.1);
  echo["mesh"] = mesh;
  const bool explicit_obs = top.has("observable") || top.has("observables");
  std::vector<std::string> tags = top.has("observable") ? top.strings("observable", {})
                                                        : top.strings("observables", default_observable_tags(sys_spec));
  if (tags.empty()) throw ConfigError("config.observables: at least one observable is needed");
  if (!explicit_obs && !observables_fit(*sys, build_observables(tags))) {
    for (auto alt : {std::vector<std::string>{"torus_character(1)", "torus_cosine(0)", "exp_cosine(0)"},
                     std::vector<std::string>{"symbol(0)", "centered_symbol(0,0.5)", "parity(0,1)"}})
      if (observables_fit(*sys, build_observables(alt))) {
        tags = alt;
        break;
      }
  }
  const auto fs = build_observables(tags);
  check_observables_fit(*sys, fs);
  for (auto& t : tags) t = parse_observable(t).tag;
  const GridParams gp = sys->grid_params(mesh);

  if (plan.kind == "pseudometric") {
    const Schedule sched = main_schedule(Schedule::ending_at(100000, 5, 2));
    std::vector<std::string> metric_names =
        top.strings("metrics", {"df_L2", "df_L1", "rho_f", "db", "rho_b"});
    std::vector<MetricKind> metrics;
    for (const auto& m : metric_names) {
      try {
        metrics.push_back(metric_kind_from_string(m));
      } catch (const InvalidArgument&) {
        throw ConfigError("config.metrics: unknown metric '" + m + "' (valid: df_L2, df_L1, rho_f, db, rho_b)");
      }
    }
    const std::size_t n_pairs = top.u64("pairs", 20);
    std::vector<std::pair<Point, Point>> pairs;
    json pair_echo = nullptr;
    if (top.has("pair")) {
      const json& pj = *top.sub("pair");
      if (!pj.is_array() || pj.size() != 2) throw ConfigError("config.pair: expected two coordinate lists");
      auto torus_point = [&](const json& c, std::uint64_t k) {
        Point p = sys->sample_mu(derive_seed(seed, k));
        auto* tp = p.as<TorusPoint>();
        if (tp == nullptr) throw ConfigError("config.pair: explicit points need a torus system");
        if (!c.is_array() || c.size() != tp->base.size()) throw ConfigError("config.pair: wrong coordinate count");
        for (std::size_t i = 0; i < c.size(); ++i) {
          if (!c[i].is_number()) throw ConfigError("config.pair: expected numbers");
          tp->base[i] = c[i].get<double>();
        }
        tp->time = 0.0;
        return p;
      };
      pairs.emplace_back(torus_point(pj[0], 0), torus_point(pj[1], 1));
      pair_echo = pj;
    } else {
      if (n_pairs < 1) throw ConfigError("config.pairs: at least 1");
      for (std::size_t i = 0; i < n_pairs; ++i)
        pairs.emplace_back(sys->sample_mu(derive_seed(seed, 2 * i)), sys->sample_mu(derive_seed(seed, 2 * i + 1)));
    }
    echo["observables"] = tags;
    echo["metrics"] = metric_names;
    if (pair_echo.is_null()) echo["pairs"] = n_pairs;
    else echo["pair"] = pair_echo;
    plan.execute = [sys, fs, metrics, pairs, sched, mesh, gp](ExperimentOutput& out) {
      json res = json::array();
      std::string traces = "pair,metric,observable,n,value\n";
      for (const auto& m : metrics) {
        const bool fm = is_observable_metric(m);
        for (std::size_t fi = 0; fi < (fm ? fs.size() : 1); ++fi) {
          std::vector<double> vals(pairs.size());
          std::vector<MetricEstimate> est(pairs.size());
          for (std::size_t i = 0; i < pairs.size(); ++i) {
            est[i] = fm ? f_pseudometric(m, *sys, fs[fi], pairs[i].first, pairs[i].second, sched, mesh)
                        : orbit_pseudometric(m, *sys, pairs[i].first, pairs[i].second, sched, mesh);
            vals[i] = est[i].value;
            traces += trace_rows(std::to_string(i) + "," + to_string(m) + "," + (fm ? fs[fi].tag : "") + ",",
                                 est[i].per_window);
          }
          double mean = 0.0;
          for (double v : vals) mean += v;
          mean /= static_cast<double>(vals.size());
          json e = {{"metric", to_string(m)}, {"mean", mean},
                    {"min", *std::min_element(vals.begin(), vals.end())},
                    {"max", *std::max_element(vals.begin(), vals.end())}, {"values", vals}};
          if (fm) e["observable"] = fs[fi].tag;
          res.push_back(e);
        }
      }
      out.report["results"] = {{"system", sys->tag()}, {"estimates", res}};
      out.report["windows"] = windows_json(sched, gp);
      out.files.emplace_back("traces.csv", traces);
    };
    return plan;
  }

  if (plan.kind == "spectrum") {
    const Schedule sched = main_schedule(Schedule::ending_at(100000, 5, 2));
    if (sys->group_dim() != 1) throw ConfigError("config.system: spectrum scans need a one-dimensional group");
    FrequencyGrid grid = default_frequency_grid(sys->group_kind());
    {
      Section g(top.sub("grid"), "grid", {"lo", "hi", "step", "periodic"});
      grid.lo = g.number("lo", grid.lo);
      grid.hi = g.number("hi", grid.hi);
      grid.step = g.number("step", grid.step);
      grid.periodic = g.boolean("periodic", grid.periodic);
      if (!(grid.hi > grid.lo) || !(grid.step > 0.0)) throw ConfigError("grid: need lo < hi and step > 0");
    }
    ScanOptions so;
    so.floor_rel = top.number("floor_rel", so.floor_rel);
    const bool do_ap = top.boolean("ap", true);
    ApOptions ap;
    ap.k_cap = top.u64("ap_cap", ap.k_cap);
    Point x = sys->sample_mu(derive_seed(seed, 0x5045));
    if (top.has("point")) {
      auto* tp = x.as<TorusPoint>();
      const json& c = *top.sub("point");
      if (tp == nullptr) throw ConfigError("config.point: explicit points need a torus system");
      if (!c.is_array() || c.size() != tp->base.size()) throw ConfigError("config.point: wrong coordinate count");
      for (std::size_t i = 0; i < c.size(); ++i) {
        if (!c[i].is_number()) throw ConfigError("config.point: expected numbers");
        tp->base[i] = c[i].get<double>();
      }
      echo["point"] = c;
    }
    echo["observables"] = tags;
    echo["grid"] = {{"lo", grid.lo}, {"hi", grid.hi}, {"step", grid.step}, {"periodic", grid.periodic}};
    echo["floor_rel"] = so.floor_rel;
    echo["ap"] = do_ap;
    echo["ap_cap"] = ap.k_cap;
    plan.execute = [sys, fs, x, grid, so, sched, mesh, do_ap, ap, gp](ExperimentOutput& out) {
      json res = json::array();
      for (std::size_t i = 0; i < fs.size(); ++i) {
        const SpectrumScan scan = spectrum_scan(*sys, fs[i], x, grid, sched, so, mesh);
        json e = {{"observable", fs[i].tag}, {"scan", to_json(scan)}};
        try {
          e["score"] = discrete_spectrum_score(scan);
        } catch (const UndefinedScore& u) {
          e["score"] = nullptr;
          e["score_error"] = u.what();
        }
        if (do_ap) e["almost_periodicity"] = to_json(almost_periodicity_probe(*sys, fs[i], x, sched, ap, mesh));
        res.push_back(e);
        out.files.emplace_back(fs.size() == 1 ? "spectrum.csv" : "spectrum_" + std::to_string(i) + ".csv", spectrum_csv(scan));
      }
      out.report["results"] = {{"system", sys->tag()}, {"observables", res}};
      out.report["windows"] = windows_json(sched, gp);
    };
    return plan;
  }

  // classify and dichotomy share the ball sampler settings
  ClassifyConfig cc;
  cc.seed = seed;
  cc.mesh = mesh;
  cc.sched = main_schedule(default_classify_schedule());
  cc.sampler = parse_sampler(top, echo, cc.sampler);
  cc.eps_grid = top.numbers("eps_grid", cc.eps_grid);
  for (double e : cc.eps_grid)
    if (!(e > 0.0)) throw ConfigError("config.eps_grid: values must be positive");
  cc.tau = top.number("tau", cc.tau);
  if (!(cc.tau >= 0.0 && cc.tau < 0.5)) throw ConfigError("config.tau: must lie in [0, 1/2)");
  echo["eps_grid"] = cc.eps_grid;
  echo["tau"] = cc.tau;
  echo["observables"] = tags;

  if (plan.kind == "classify") {
    std::vector<std::string> fl = top.strings("flavors", {"topological", "f_relative", "mu_relative", "mu_f_relative"});
    std::vector<Flavor> flavors;
    for (const auto& f : fl) {
      if (f == "topological") flavors.push_back(Flavor::topological);
      else if (f == "f_relative") flavors.push_back(Flavor::f_relative);
      else if (f == "mu_relative") flavors.push_back(Flavor::mu_relative);
      else if (f == "mu_f_relative") flavors.push_back(Flavor::mu_f_relative);
      else throw ConfigError("config.flavors: unknown flavor '" + f + "'");
    }
    echo["flavors"] = fl;
    plan.execute = [sys, fs, flavors, cc, gp](ExperimentOutput& out) {
      json res = json::array();
      for (Flavor fl : flavors) {
        const bool wants_f = fl == Flavor::f_relative || fl == Flavor::mu_f_relative;
        if (!wants_f) {
          res.push_back(to_json(classify_flavor(*sys, nullptr, fl, cc)));
          continue;
        }
        for (const auto& f : fs) res.push_back(to_json(classify_flavor(*sys, &f, fl, cc)));
      }
      out.report["results"] = {{"system", sys->tag()}, {"known_class", to_string(sys->known_class())}, {"verdicts", res}};
      out.report["windows"] = windows_json(cc.sched, gp);
    };
    return plan;
  }

  DichotomyConfig dc;
  dc.classify = cc;
  dc.spectral_sched = parse_schedule(top.sub("spectral_schedule"), "config.spectral_schedule", dc.spectral_sched);
  dc.expansivity_pairs = top.u64("expansivity_pairs", dc.expansivity_pairs);
  dc.ap_cap = top.u64("ap_cap", dc.ap_cap);
  if (dc.expansivity_pairs < 1) throw ConfigError("config.expansivity_pairs: at least 1");
  if (sys->group_dim() != 1) throw ConfigError("config.system: dichotomy runs need a one-dimensional group");
  echo["spectral_schedule"] = to_json(dc.spectral_sched);
  echo["expansivity_pairs"] = dc.expansivity_pairs;
  echo["ap_cap"] = dc.ap_cap;
  plan.execute = [sys, fs, dc, gp](ExperimentOutput& out) {
    const DichotomyReport rep = dichotomy_report(*sys, fs, dc);
    out.report["results"] = to_json(rep);
    out.report["windows"] = windows_json(dc.classify.sched, gp);
  };
  return plan;
}

json parse_config_text(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config does not parse: ") + e.what());
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping");
  return yaml_to_json(root);
}

std::string resolve_out_dir(const json& cfg, const RunOverrides& ov) {
  if (ov.out_dir) return *ov.out_dir;
  if (cfg.contains("out") && cfg["out"].is_string()) return cfg["out"].get<std::string>();
  if (const char* env = std::getenv("BESI_OUT_DIR"); env && *env) return env;
  return "besi_out";
}

}  // namespace

ExperimentOutput run_experiment(const std::string& config_text, const RunOverrides& ov) {
  const json cfg = parse_config_text(config_text);
  if (cfg.contains("out") && !cfg["out"].is_string()) throw ConfigError("config.out: expected a string");
  std::size_t threads = thread_count();
  if (ov.threads) threads = *ov.threads;
  else if (cfg.contains("threads")) {
    if (!cfg["threads"].is_number_unsigned() || cfg["threads"].get<std::uint64_t>() < 1)
      throw ConfigError("config.threads: expected a positive integer");
    threads = cfg["threads"].get<std::size_t>();
  }
  if (threads < 1) throw ConfigError("--threads: must be at least 1");
  Plan plan = plan_experiment(cfg, ov);

  set_thread_count(static_cast<unsigned>(threads));
  ExperimentOutput out;
  out.out_dir = resolve_out_dir(cfg, ov);
  out.report["format_version"] = kReportFormatVersion;
  out.report["kind"] = plan.kind;
  out.report["config"] = plan.echo;
  const auto t0 = std::chrono::steady_clock::now();
  plan.execute(out);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.report["timing"] = {{"wall_seconds", wall},
                          {"threads", threads},
                          {"simd", std::string(kernels::level_name(kernels::active_level()))}};
  return out;
}

json strip_timing(json report) {
  report.erase("timing");
  return report;
}

int run_command(const std::string& config_path, const RunOverrides& ov, std::ostream& out, std::ostream& err) {
  std::string text;
  {
    std::ifstream is(config_path, std::ios::binary);
    if (!is) {
      err << "error: cannot read config '" << config_path << "'\n";
      return 2;
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    text = ss.str();
  }
  ExperimentOutput res;
  try {
    res = run_experiment(text, ov);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
  try {
    namespace fs = std::filesystem;
    const fs::path dir(res.out_dir);
    fs::create_directories(dir);
    for (const auto& [name, content] : res.files) write_file_atomic(dir / name, content);
    write_file_atomic(dir / "report.json", res.report.dump(2) + "\n");
    out << (dir / "report.json").string() << "\n";
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

int list_command(const std::string& filter, std::ostream& out) {
  for (const auto& f : list_fixtures(filter))
    out << f.name << "\t" << f.category << "\t" << f.known_class << "\t" << f.description << "\n";
  return 0;
}

}  // namespace besi
