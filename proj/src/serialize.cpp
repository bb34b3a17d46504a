#include "besi/serialize.hpp"

#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace besi {

namespace {

json vec_json(const Vec& v, int d) {
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back(v[static_cast<std::size_t>(i)]);
  return a;
}

json trace_json(const std::vector<std::pair<double, double>>& t) {
  json a = json::array();
  for (const auto& [n, v] : t) a.push_back({n, v});
  return a;
}

std::string num(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

}  // namespace

json to_json(const Schedule& s) { return {{"sizes", s.sizes}, {"burn_in", s.burn_in}}; }

json to_json(const MetricEstimate& m) {
  return {{"kind", to_string(m.kind)}, {"value", m.value}, {"converged", m.converged},
          {"per_window", trace_json(m.per_window)}};
}

json to_json(const EquivalenceReport& r) {
  json v = json::array();
  for (const auto& x : r.violations)
    v.push_back({{"pair", x.pair}, {"epsilon", x.epsilon}, {"implication", x.implication}, {"lhs", x.lhs}, {"rhs", x.rhs}});
  return {{"eps_grid", r.eps_grid}, {"checks", r.checks}, {"violations", v},
          {"df_L2", r.df_l2}, {"df_L1", r.df_l1}, {"rho_f", r.rho_f}};
}

json to_json(const SpectrumScan& s) {
  json peaks = json::array();
  for (const auto& p : s.peaks)
    peaks.push_back({{"w", p.w}, {"re", p.amplitude.real()}, {"im", p.amplitude.imag()}, {"magnitude", p.magnitude}});
  return {{"grid", {{"lo", s.grid.lo}, {"hi", s.grid.hi}, {"step", s.grid.step}, {"periodic", s.grid.periodic}}},
          {"f_energy", s.f_energy}, {"peak_floor", s.peak_floor}, {"coarse_points", s.coarse_points}, {"peaks", peaks}};
}

json to_json(const ApProbeResult& r) {
  json per = json::array();
  for (const auto& e : r.per_epsilon) {
    json j = {{"epsilon", e.epsilon}, {"syndetic", e.syndetic}, {"k_side", e.k_side}, {"density", e.density}};
    j["witness"] = e.witness ? json(*e.witness) : json(nullptr);
    per.push_back(j);
  }
  return {{"consistent", r.consistent}, {"reason", r.reason}, {"lags", r.lags}, {"variance", r.variance},
          {"per_epsilon", per}};
}

json to_json(const Verdict& v) {
  json table = json::array();
  for (const auto& row : v.table) table.push_back({{"epsilon", row.epsilon}, {"depth", row.depth ? json(*row.depth) : json(nullptr)}});
  json ev = json::array();
  for (const auto& w : v.evidence) ev.push_back({{"center", w.center}, {"depth", w.depth}, {"estimate", w.estimate}});
  json j = {{"label", to_string(v.label)},
            {"flavor", to_string(v.flavor)},
            {"stat", to_string(v.stat)},
            {"sensitive", v.sensitive},
            {"equicontinuous", v.equicontinuous},
            {"epsilon", v.epsilon},
            {"tau", v.tau},
            {"centers_used", v.centers_used},
            {"centers_dropped", v.centers_dropped},
            {"eps_delta", table},
            {"witnesses", ev}};
  if (!v.observable.empty()) j["observable"] = v.observable;
  return j;
}

json to_json(const ExpansivityReport& r) {
  return {{"epsilon", r.epsilon}, {"fraction", r.fraction}, {"n_pairs", r.n_pairs}};
}

json to_json(const DichotomyReport& r) {
  json obs = json::array();
  for (const auto& o : r.observables)
    obs.push_back({{"tag", o.tag},
                   {"f_relative", to_json(o.f_relative)},
                   {"mu_f_relative", to_json(o.mu_f_relative)},
                   {"spectral_score", o.spectral_score},
                   {"n_peaks", o.n_peaks},
                   {"almost_periodicity", to_json(o.ap)},
                   {"expansivity", to_json(o.expansivity)}});
  json imp = json::array();
  for (const auto& i : r.implications) imp.push_back({{"name", i.name}, {"holds", i.holds}, {"detail", i.detail}});
  return {{"system", r.system},
          {"known_class", r.known_class},
          {"minimal", r.minimal},
          {"ergodic", r.ergodic},
          {"topological", to_json(r.topological)},
          {"plain", to_json(r.plain)},
          {"mu_relative", to_json(r.mu_relative)},
          {"orbit_expansivity", to_json(r.orbit_expansivity)},
          {"observables", obs},
          {"mean_score", r.mean_score},
          {"implications", imp},
          {"violations", r.violations()}};
}

json to_json(const PeriodReport& r, int d) {
  json p = json::array();
  for (const auto& v : r.periods) p.push_back(vec_json(v, d));
  return {{"rank", r.rank}, {"periods", p}, {"candidates_tested", r.candidates_tested}};
}

json to_json(const DiffractionSpectrum& s) {
  json peaks = json::array();
  for (const auto& p : s.peaks) {
    json pos = json::array();
    for (const auto& v : p.positions) pos.push_back(vec_json(v, s.d));
    peaks.push_back({{"k", vec_json(p.k, s.d)}, {"intensity", p.intensity}, {"accepted", p.accepted},
                     {"ratios", p.ratios}, {"positions", pos}});
  }
  return {{"point_fraction", s.point_fraction},
          {"window_sizes", s.window_sizes},
          {"step", s.step},
          {"zero_exclusion", s.zero_exclusion},
          {"grid_points", s.freqs.size()},
          {"accepted_peaks", s.accepted_count()},
          {"max_position_drift", s.max_position_drift()},
          {"peaks", peaks}};
}

json to_json(const DeloneReport& r) {
  return {{"class", to_string(r.cls)},
          {"system", r.system},
          {"periods", to_json(r.periods, r.diffraction.d)},
          {"plain", to_json(r.plain)},
          {"mu", to_json(r.mu)},
          {"diffraction", to_json(r.diffraction)}};
}

std::string spectrum_csv(const SpectrumScan& s) {
  std::string out = "w,re,im,abs\n";
  for (std::size_t i = 0; i < s.coarse.size(); ++i) {
    const cplx a = s.coarse[i];
    out += num(s.grid.at(i)) + "," + num(a.real()) + "," + num(a.imag()) + "," + num(std::abs(a)) + "\n";
  }
  return out;
}

std::string diffraction_csv(const DiffractionSpectrum& s) {
  std::string out;
  for (int a = 0; a < s.d; ++a) out += "k" + std::to_string(a) + ",";
  out += "intensity,is_peak\n";
  for (std::size_t i = 0; i < s.freqs.size(); ++i) {
    for (int a = 0; a < s.d; ++a) out += num(s.freqs[i][static_cast<std::size_t>(a)]) + ",";
    out += num(s.intensities[i]) + "," + (s.is_peak[i] ? "1" : "0") + "\n";
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.parent_path() / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace besi
