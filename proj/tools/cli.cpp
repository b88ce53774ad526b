#include "cli.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>

#include "photocorr/csv.hpp"
#include "photocorr/error.hpp"
#include "photocorr/parallel.hpp"
#include "photocorr/tagstore.hpp"

#ifndef PHOTOCORR_VERSION
#define PHOTOCORR_VERSION "0.0.0"
#endif

namespace photocorr::cli {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t ns_to_ps(double ns, const char* what) {
  require(std::isfinite(ns) && ns >= 0.0, ErrorKind::config, std::string(what) + " must be >= 0");
  return static_cast<std::uint64_t>(std::llround(ns * 1000.0));
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, ErrorKind::io, "cannot create " + dir.string() + ": " + ec.message());
}

RunManifest start_manifest(std::string command, json config, std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  m.config_hash = config_hash(config);
  m.config = std::move(config);
  m.seed = seed;
  m.tool_version = PHOTOCORR_VERSION;
  return m;
}

// Simulate schema ---------------------------------------------------------

enum class Type { number, integer, string };

struct Key {
  const char* name;
  Type type;
  bool required;
  json fallback;
};

const std::vector<Key>& common_keys() {
  static const std::vector<Key> keys{
      {"scenario", Type::string, true, nullptr},   {"seed", Type::integer, true, nullptr},
      {"shots", Type::integer, true, nullptr},     {"duration_ns", Type::number, true, nullptr},
      {"output", Type::string, false, nullptr},    {"gamma_hz", Type::number, false, 6.0e6},
      {"detuning", Type::number, false, 0.0},
  };
  return keys;
}

std::vector<Key> field_keys(bool rabi_required) {
  return {{"rabi", Type::number, rabi_required, nullptr},
          {"n_emitters", Type::number, rabi_required, nullptr},
          {"rate_per_ns", Type::number, false, 0.01},
          {"efficiency", Type::number, false, 1.0},
          {"dt_ps", Type::integer, false, 0}};
}

std::vector<Key> scenario_keys(const std::string& scenario, const json& raw) {
  if (scenario == "mcwf")
    return {{"rabi", Type::number, true, nullptr},
            {"efficiency", Type::number, false, 1.0},
            {"dead_time_ns", Type::number, false, 0.0},
            {"dt_gamma", Type::number, false, 0.0}};
  if (scenario == "chaotic") return field_keys(true);
  if (scenario == "coherent_mix") {
    auto k = field_keys(true);
    k.push_back({"coherent_fraction", Type::number, true, nullptr});
    return k;
  }
  if (scenario == "fixture") {
    const bool from_file = raw.contains("input");
    auto k = field_keys(!from_file);
    k.push_back({"input", Type::string, false, nullptr});
    k.push_back({"delete_prob", Type::number, true, nullptr});
    k.push_back({"tau_c_ns", Type::number, true, nullptr});
    return k;
  }
  if (scenario == "beat") {
    auto k = field_keys(true);
    k.push_back({"coherent_fraction", Type::number, false, 0.0});
    k.push_back({"omega_lo_hz", Type::number, false, 110e6});
    k.push_back({"i_lo", Type::number, false, 1.0});
    k.push_back({"i_sc", Type::number, false, 0.1});
    return k;
  }
  fail(ErrorKind::config, "unknown scenario '" + scenario +
                              "' (expected mcwf, chaotic, coherent_mix, fixture or beat)");
}

bool type_ok(const json& v, Type t) {
  switch (t) {
    case Type::number: return v.is_number();
    case Type::integer: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case Type::string: return v.is_string();
  }
  return false;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ", ") + s;
  return out;
}

TwoLevelParams params_of(const json& c) {
  TwoLevelParams p;
  p.rabi = c.value("rabi", 0.0);
  p.gamma_hz = c.at("gamma_hz").get<double>();
  p.detuning = c.at("detuning").get<double>();
  p.validate();
  return p;
}

FieldStreamConfig field_config_of(const json& c, unsigned workers) {
  FieldStreamConfig f;
  f.params = params_of(c);
  f.n_emitters = c.at("n_emitters").get<double>();
  require(f.n_emitters > 0.0, ErrorKind::config, "n_emitters must be > 0");
  f.duration_ps = ns_to_ps(c.at("duration_ns").get<double>(), "duration_ns");
  f.dt_ps = c.at("dt_ps").get<std::uint64_t>();
  f.shots = c.at("shots").get<std::size_t>();
  f.seed = c.at("seed").get<std::uint64_t>();
  f.rate_per_ns = c.at("rate_per_ns").get<double>();
  f.efficiency = c.at("efficiency").get<double>();
  f.workers = workers;
  const double fraction = c.value("coherent_fraction", 0.0);
  require(fraction >= 0.0 && fraction < 1.0, ErrorKind::config, "coherent_fraction must be in [0, 1)");
  f.coherent_amplitude = coherent_amplitude_for_fraction(fraction, f.n_emitters);
  return f;
}

// Correlation helpers -----------------------------------------------------

SteadyStateWindow window_for(const TagStream& s, const CorrelateOptions& o) {
  const std::uint64_t bin = ns_to_ps(o.bin_ns, "bin-ns");
  require(bin > 0, ErrorKind::config, "bin-ns must be positive");
  const std::uint64_t duration = s.header().shot_duration_ps;
  auto w = default_window(duration, bin, 250'000, ns_to_ps(o.tau_max_ns, "tau-max-ns"));
  if (o.window_start_ns || o.window_end_ns) {
    if (o.window_start_ns) w.t_start_ps = ns_to_ps(*o.window_start_ns, "window-start-ns");
    if (o.window_end_ns) w.t_end_ps = ns_to_ps(*o.window_end_ns, "window-end-ns");
    w.tau_max_ps = ns_to_ps(o.tau_max_ns, "tau-max-ns");
  }
  w.validate(duration);
  return w;
}

struct Window2Average {
  double value = 0.0;
  double sigma = 0.0;
};

// Mean over |tau| <= half; +tau and -tau carry the same symmetrised estimate,
// so their errors add linearly.
Window2Average zero_average(const CoherenceSeries& s, std::int64_t half_ps) {
  double sum = 0.0, n = 0.0;
  std::map<std::int64_t, std::pair<double, double>> by_lag;  // |tau| -> (weight, sigma)
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (std::llabs(s.tau_ps[i]) > half_ps || is_missing(s.real(i))) continue;
    sum += s.real(i);
    n += 1.0;
    auto& e = by_lag[std::llabs(s.tau_ps[i])];
    e.first += 1.0;
    e.second = is_missing(s.sigma[i]) ? 0.0 : s.sigma[i];
  }
  require(n > 0.0, ErrorKind::domain, "no g2 points within the zero-lag window");
  double var = 0.0;
  for (const auto& [lag, e] : by_lag) var += (e.first * e.second) * (e.first * e.second);
  return {sum / n, std::sqrt(var) / n};
}

CoherenceSeries restrict_to(const CoherenceSeries& src, const std::vector<std::int64_t>& tau) {
  CoherenceSeries out;
  out.kind = src.kind;
  for (auto t : tau) {
    const auto i = src.index_of(t);
    require(i.has_value(), ErrorKind::alignment,
            "g1 grid has no point at tau = " + std::to_string(t) + " ps");
    out.tau_ps.push_back(t);
    out.values.push_back(src.values[*i]);
    out.sigma.push_back(src.sigma[*i]);
  }
  return out;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::io, "cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::format, path.string() + ": " + e.what());
  }
}

}  // namespace

// Manifest ----------------------------------------------------------------

json to_json(const RunManifest& m) {
  return json{{"command", m.command},       {"config_hash", m.config_hash}, {"seed", m.seed},
              {"tool_version", m.tool_version}, {"input_paths", m.input_paths},
              {"output_paths", m.output_paths}, {"wall_time_s", m.wall_time_s}, {"config", m.config}};
}

RunManifest manifest_from_json(const json& j) {
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.tool_version = j.at("tool_version").get<std::string>();
    m.input_paths = j.at("input_paths").get<std::vector<std::string>>();
    m.output_paths = j.at("output_paths").get<std::vector<std::string>>();
    m.wall_time_s = j.at("wall_time_s").get<double>();
    m.config = j.at("config");
  } catch (const json::exception& e) {
    fail(ErrorKind::format, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const RunManifest& m, const fs::path& path) { write_json(to_json(m), path); }

RunManifest read_manifest(const fs::path& path) { return manifest_from_json(read_json(path)); }

std::string config_hash(const json& j) {
  const std::string text = j.dump();
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) == 1, ErrorKind::io,
          "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return 2;
    case ErrorKind::accuracy:
    case ErrorKind::separability: return 4;
    default: return 3;
  }
}

// simulate ----------------------------------------------------------------

json normalize_simulate_config(const json& raw) {
  require(raw.is_object(), ErrorKind::config, "simulate config must be a JSON object");
  require(raw.contains("scenario") && raw["scenario"].is_string(), ErrorKind::config,
          "missing required key: scenario");
  const auto scenario = raw["scenario"].get<std::string>();
  auto keys = common_keys();
  for (auto& k : scenario_keys(scenario, raw)) keys.push_back(std::move(k));

  std::vector<std::string> missing, unknown, bad_type;
  std::set<std::string> known;
  json out = json::object();
  for (const auto& k : keys) {
    known.insert(k.name);
    if (!raw.contains(k.name)) {
      if (k.required)
        missing.emplace_back(k.name);
      else if (!k.fallback.is_null())
        out[k.name] = k.fallback;
      continue;
    }
    if (!type_ok(raw[k.name], k.type)) {
      bad_type.emplace_back(k.name);
      continue;
    }
    out[k.name] = raw[k.name];
  }
  for (const auto& [name, v] : raw.items())
    if (!known.count(name)) unknown.push_back(name);

  std::string msg;
  if (!missing.empty()) msg += "missing required key(s): " + join(missing);
  if (!bad_type.empty()) msg += std::string(msg.empty() ? "" : "; ") + "wrong type for key(s): " + join(bad_type);
  if (!unknown.empty()) msg += std::string(msg.empty() ? "" : "; ") + "unknown key(s): " + join(unknown);
  require(msg.empty(), ErrorKind::config, "scenario '" + scenario + "': " + msg);
  require(out["shots"].get<std::uint64_t>() > 0, ErrorKind::config, "shots must be > 0");
  return out;
}

TagStream simulate_from_config(const json& c, unsigned workers) {
  const auto scenario = c.at("scenario").get<std::string>();
  const auto seed = c.at("seed").get<std::uint64_t>();
  const auto shots = c.at("shots").get<std::size_t>();
  const auto duration = ns_to_ps(c.at("duration_ns").get<double>(), "duration_ns");

  if (scenario == "mcwf") {
    McwfOptions opt;
    opt.dt_gamma = c.at("dt_gamma").get<double>();
    opt.workers = workers;
    return mcwf_photon_stream(params_of(c), duration, shots, seed, c.at("efficiency").get<double>(),
                              ns_to_ps(c.at("dead_time_ns").get<double>(), "dead_time_ns"), opt);
  }
  if (scenario == "chaotic" || scenario == "coherent_mix") return simulate_field_stream(field_config_of(c, workers));
  if (scenario == "beat") {
    BeatStreamConfig b;
    b.field = field_config_of(c, workers);
    b.het.omega_lo_hz = c.at("omega_lo_hz").get<double>();
    b.het.i_lo = c.at("i_lo").get<double>();
    b.het.i_sc = c.at("i_sc").get<double>();
    return simulate_beat_stream(b);
  }
  // fixture
  const TagStream base = c.contains("input") ? read_stream(c.at("input").get<std::string>())
                                             : simulate_field_stream(field_config_of(c, workers));
  return nongaussian_fixture(base, c.at("delete_prob").get<double>(),
                             ns_to_ps(c.at("tau_c_ns").get<double>(), "tau_c_ns"), derive_seed(seed, 0x66697874));
}

RunManifest cmd_simulate(const fs::path& config_path, const std::optional<fs::path>& output, unsigned workers) {
  const auto t0 = Clock::now();
  json config = normalize_simulate_config(read_json(config_path));
  fs::path out_path;
  if (output)
    out_path = *output;
  else if (config.contains("output"))
    out_path = config["output"].get<std::string>();
  else
    out_path = config_path.parent_path() / (config_path.stem().string() + ".ptag");
  config.erase("output");

  auto m = start_manifest("simulate", config, config.at("seed").get<std::uint64_t>());
  const TagStream stream = simulate_from_config(config, workers);
  if (!out_path.parent_path().empty()) ensure_dir(out_path.parent_path());
  write_stream(stream, out_path);

  m.input_paths.push_back(config_path.string());
  if (config.contains("input")) m.input_paths.push_back(config["input"].get<std::string>());
  m.output_paths.push_back(out_path.string());
  m.wall_time_s = seconds_since(t0);
  write_manifest(m, fs::path(out_path.string() + ".manifest.json"));
  return m;
}

// correlate ---------------------------------------------------------------

CorrelateResult cmd_correlate(const CorrelateOptions& o) {
  const auto t0 = Clock::now();
  json config{{"stream", o.stream.string()}, {"bin_ns", o.bin_ns},     {"tau_max_ns", o.tau_max_ns},
              {"bootstrap", o.bootstrap},    {"seed", o.seed}};
  if (o.window_start_ns) config["window_start_ns"] = *o.window_start_ns;
  if (o.window_end_ns) config["window_end_ns"] = *o.window_end_ns;

  CorrelateResult r;
  r.manifest = start_manifest("correlate", config, o.seed);
  r.manifest.input_paths.push_back(o.stream.string());
  const TagStream stream = read_stream(o.stream);
  ensure_dir(o.out_dir);
  const auto matrix_path = o.out_dir / "g2_matrix.csv";
  const auto tau_path = o.out_dir / "g2_tau.csv";
  const auto intensity_path = o.out_dir / "intensity.csv";

  if (stream.tag_count() == 0) {
    std::cerr << "warning: " << o.stream.string() << " holds no tags; writing empty outputs\n";
    r.empty = true;
    r.g2.kind = SeriesKind::g2;
    CsvWriter(matrix_path, {"t1_ps"});
    CsvWriter(tau_path, {"tau_ps", "g2", "stderr"});
    CsvWriter(intensity_path, {"bin_start_ps", "intensity"});
  } else {
    const auto w = window_for(stream, o);
    r.window = w;
    const auto grid = coincidence_grid(stream, w, {o.workers, 256});
    r.g2 = steady_state_g2(grid, w, {o.bootstrap, o.seed, o.workers});
    write_g2_matrix_csv(g2_matrix(grid), matrix_path);
    write_g2_tau_csv(r.g2, tau_path);
    write_intensity_csv(intensity_trace(stream, w.bin_width_ps), w.bin_width_ps, intensity_path);
  }
  r.manifest.output_paths = {matrix_path.string(), tau_path.string(), intensity_path.string()};
  r.manifest.wall_time_s = seconds_since(t0);
  write_manifest(r.manifest, o.out_dir / "manifest.json");
  return r;
}

// analyze -----------------------------------------------------------------

json to_json(const AnalyzeSummary& s) {
  json j{{"g2_zero", s.g2_zero},
         {"g2_zero_stderr", s.g2_zero_sigma},
         {"siegert_zero", s.siegert_zero},
         {"bound_zero", s.bound_zero},
         {"bound_zero_stderr", s.bound_zero_sigma},
         {"sigma_level", s.sigma_level},
         {"C_zero", s.connected_zero},
         {"C_zero_stderr", s.connected_zero_sigma},
         {"mean_field_ratio", s.mean_field_ratio},
         {"verdict", s.verdict}};
  if (s.tail)
    j["g1_tail"] = {{"bound", s.tail->bound}, {"mean", s.tail->mean}, {"stderr", s.tail->sigma},
                    {"points", s.tail->points}};
  return j;
}

AnalyzeSummary cmd_analyze(const AnalyzeOptions& o) {
  const auto t0 = Clock::now();
  const auto g2 = read_series_csv(o.g2_csv, SeriesKind::g2, "g2");
  require(g2.size() > 0, ErrorKind::domain, o.g2_csv.string() + " holds no g2 points");
  const std::int64_t step = g2.uniform_step();

  json config{{"g2", o.g2_csv.string()},
              {"mean_field_ratio", o.mean_field_ratio},
              {"mean_field_threshold", o.mean_field_threshold},
              {"zero_window_ns", o.zero_window_ns}};
  AnalyzeSummary s;
  s.mean_field_ratio = o.mean_field_ratio;
  CoherenceSeries g1;
  if (o.g1_csv) {
    config["g1"] = o.g1_csv->string();
    const auto full = read_series_csv(*o.g1_csv, SeriesKind::g1, "g1_recovered");
    g1 = restrict_to(full, g2.tau_ps);
    const auto tail_start = default_tail_start_ps();
    if (!full.tau_ps.empty() && full.tau_ps.back() >= tail_start) {
      s.tail = mean_field_from_g1_tail(full, tail_start);
      s.mean_field_ratio = s.tail->bound;
    }
  } else if (o.oracle) {
    config["oracle"] = {{"rabi", o.oracle->rabi}, {"gamma_hz", o.oracle->gamma_hz}, {"detuning", o.oracle->detuning}};
    require(step > 0, ErrorKind::alignment, "g2 grid is not uniform; cannot bin the oracle g1");
    g1 = single_atom_g1_binned(*o.oracle, g2.tau_ps, step);
  } else {
    fail(ErrorKind::config, "analyze needs a g1 source: --g1 CSV or oracle parameters (--rabi)");
  }
  require(same_grid(g1, g2), ErrorKind::alignment, "g1 and g2 lag grids differ");

  auto m = start_manifest("analyze", config, 0);
  m.input_paths.push_back(o.g2_csv.string());
  if (o.g1_csv) m.input_paths.push_back(o.g1_csv->string());

  GaussianDecomposition d;
  d.g1 = g1;
  d.mean_field_ratio = s.mean_field_ratio;
  const auto cc = connected_correlation(g2, d, o.mean_field_threshold);
  const auto siegert = siegert_prediction(g1);

  const auto half = static_cast<std::int64_t>(std::llround(o.zero_window_ns * 1000.0));
  const auto g2z = zero_average(g2, half);
  const auto sz = zero_average(siegert, half);
  s.g2_zero = g2z.value;
  s.g2_zero_sigma = g2z.sigma;
  s.siegert_zero = sz.value;
  s.bound_zero = sz.value - g2z.value;
  s.bound_zero_sigma = std::hypot(sz.sigma, g2z.sigma);
  s.sigma_level = s.bound_zero_sigma > 0.0 ? s.bound_zero / s.bound_zero_sigma : 0.0;
  if (const auto i0 = cc.connected.index_of(0)) {
    s.connected_zero = cc.connected.real(*i0);
    s.connected_zero_sigma = cc.connected.sigma[*i0];
  }
  if (s.bound_zero_sigma == 0.0)
    s.verdict = "no error estimate";
  else if (s.sigma_level > 5.0)
    s.verdict = "violation";
  else if (std::abs(s.sigma_level) <= 3.0)
    s.verdict = "consistent with Siegert";
  else
    s.verdict = "inconclusive";

  ensure_dir(o.out_dir);
  {
    CsvWriter csv(o.out_dir / "siegert.csv", {"tau_ps", "g1_abs", "siegert", "stderr"});
    for (std::size_t i = 0; i < siegert.size(); ++i)
      csv.row(siegert.tau_ps[i], g1.magnitude(i), siegert.real(i), siegert.sigma[i]);
  }
  write_connected_csv(g2, siegert, cc, o.out_dir / "connected.csv");
  write_json(to_json(s), o.out_dir / "summary.json");
  m.output_paths = {(o.out_dir / "siegert.csv").string(), (o.out_dir / "connected.csv").string(),
                    (o.out_dir / "summary.json").string()};
  m.wall_time_s = seconds_since(t0);
  write_manifest(m, o.out_dir / "manifest.json");
  return s;
}

// heterodyne --------------------------------------------------------------

HeterodyneResult cmd_heterodyne(const HeterodyneOptions& o) {
  const auto t0 = Clock::now();
  o.het.validate();
  json config{{"omega_lo_hz", o.het.omega_lo_hz},
              {"i_lo", o.het.i_lo},
              {"i_sc", o.het.i_sc},
              {"cutoff_hz", o.demod.cutoff_hz},
              {"kernel_cutoff_periods", o.demod.kernel_cutoff_periods},
              {"bin_width_ps", o.demod.bin_width_ps},
              {"window", static_cast<int>(o.spectrum.window)},
              {"tukey_alpha", o.spectrum.tukey_alpha},
              {"band_half_width_hz", o.spectrum.band_half_width_hz},
              {"step_hz", o.spectrum.step_hz}};
  HeterodyneResult r;
  ensure_dir(o.out_dir);
  std::vector<std::string> inputs, outputs;
  if (o.g2_hd_csv) {
    config["g2_hd"] = o.g2_hd_csv->string();
    const auto table = read_csv(*o.g2_hd_csv);
    const bool named = std::find(table.columns.begin(), table.columns.end(), "g2_hd") != table.columns.end();
    r.g2_hd = read_series_csv(*o.g2_hd_csv, SeriesKind::g2, named ? "g2_hd" : "g2");
    inputs.push_back(o.g2_hd_csv->string());
  } else if (o.model) {
    config["model"] = {{"rabi", o.model->rabi},
                       {"gamma_hz", o.model->gamma_hz},
                       {"detuning", o.model->detuning},
                       {"tau_max_ns", o.model_tau_max_ns},
                       {"step_ps", o.model_step_ps}};
    require(o.model_step_ps > 0, ErrorKind::config, "model step must be positive");
    const auto tau = symmetric_tau_grid(static_cast<std::int64_t>(std::llround(o.model_tau_max_ns * 1000.0)) /
                                            o.model_step_ps * o.model_step_ps,
                                        o.model_step_ps);
    const auto g1 = single_atom_g1(*o.model, tau);
    r.g2_hd = g2_hd_model(g1, siegert_prediction(g1), o.het);
    write_g2_hd_csv(r.g2_hd, o.out_dir / "g2_hd.csv");
    outputs.push_back((o.out_dir / "g2_hd.csv").string());
  } else {
    fail(ErrorKind::config, "heterodyne needs --g2-hd CSV or model parameters (--rabi)");
  }
  auto m = start_manifest("heterodyne", config, 0);
  m.input_paths = inputs;

  r.g1 = demodulate_g1(r.g2_hd, o.het, o.demod);
  r.spectrum = spectrum_from_hd(r.g2_hd, o.het, o.spectrum);
  write_g1_csv(r.g1, o.out_dir / "g1.csv");
  write_spectrum_csv(r.spectrum, o.out_dir / "spectrum.csv");
  outputs.push_back((o.out_dir / "g1.csv").string());
  outputs.push_back((o.out_dir / "spectrum.csv").string());
  m.output_paths = outputs;
  m.wall_time_s = seconds_since(t0);
  write_manifest(m, o.out_dir / "manifest.json");
  return r;
}

// scaling -----------------------------------------------------------------

ScalingPoint scaling_point_from_manifest(const fs::path& manifest) {
  const auto m = read_manifest(manifest);
  require(m.command == "simulate" && !m.output_paths.empty(), ErrorKind::format,
          manifest.string() + " is not a simulate manifest");
  const auto& c = m.config;
  const auto scenario = c.value("scenario", std::string{});
  require(scenario == "chaotic" || scenario == "coherent_mix", ErrorKind::config,
          manifest.string() + ": scaling needs chaotic or coherent_mix runs, got '" + scenario + "'");
  fs::path stream_path = m.output_paths.front();
  if (!fs::exists(stream_path) && stream_path.is_relative()) stream_path = manifest.parent_path() / stream_path.filename();
  const auto stream = read_stream(stream_path);
  const double per_ns = c.at("rate_per_ns").get<double>() * c.at("efficiency").get<double>();
  require(per_ns > 0.0, ErrorKind::config, manifest.string() + ": zero detection rate");
  const double exposure_ns = static_cast<double>(stream.shot_count()) *
                             static_cast<double>(stream.header().shot_duration_ps) * 1e-3;
  return {c.at("n_emitters").get<double>(), static_cast<double>(stream.tag_count()) / (exposure_ns * per_ns)};
}

ScalingFit cmd_scaling(const ScalingOptions& o) {
  const auto t0 = Clock::now();
  std::vector<ScalingPoint> points;
  json config{{"confidence_sigmas", o.confidence_sigmas}};
  std::vector<std::string> inputs;
  if (o.csv) {
    const auto table = read_csv(*o.csv);
    const auto n = table.column_values("N");
    const auto i = table.column_values("intensity");
    for (std::size_t k = 0; k < n.size(); ++k) points.push_back({n[k], i[k]});
    inputs.push_back(o.csv->string());
  }
  for (const auto& path : o.manifests) {
    points.push_back(scaling_point_from_manifest(path));
    inputs.push_back(path.string());
  }
  config["inputs"] = inputs;
  auto m = start_manifest("scaling", config, 0);
  m.input_paths = inputs;

  const auto fit = intensity_scaling_fit(points, o.confidence_sigmas);
  ensure_dir(o.out_dir);
  write_scaling_csv(fit, o.out_dir / "scaling.csv");
  write_json(json{{"exponent", fit.exponent},
                  {"exponent_stderr", fit.exponent_sigma},
                  {"prefactor", fit.prefactor},
                  {"linear", fit.linear},
                  {"quadratic", fit.quadratic},
                  {"quadratic_stderr", fit.quadratic_sigma},
                  {"coherent_bound", fit.coherent_bound},
                  {"max_g2_bias", max_g2_bias(fit.coherent_bound)}},
             o.out_dir / "fit.json");
  m.output_paths = {(o.out_dir / "scaling.csv").string(), (o.out_dir / "fit.json").string()};
  m.wall_time_s = seconds_since(t0);
  write_manifest(m, o.out_dir / "manifest.json");
  return fit;
}

// command line ------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Photon time-tag correlation toolkit", "photocorr"};
  app.set_version_flag("--version", PHOTOCORR_VERSION);
  app.require_subcommand(1);

  unsigned workers = 1;

  auto* sim = app.add_subcommand("simulate", "Simulate a photon stream from a JSON config");
  std::string sim_config, sim_output;
  sim->add_option("config", sim_config, "Scenario config (JSON)")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--output", sim_output, "Output PTAG file (overrides the config)");
  sim->add_option("--workers", workers, "Worker threads (0 = all cores)");

  auto* cor = app.add_subcommand("correlate", "Estimate g2 from a PTAG stream");
  CorrelateOptions co;
  std::string cor_stream, cor_out = ".";
  double ws = -1.0, we = -1.0;
  cor->add_option("stream", cor_stream, "PTAG file")->required()->check(CLI::ExistingFile);
  cor->add_option("-o,--out-dir", cor_out, "Output directory");
  cor->add_option("--bin-ns", co.bin_ns, "Bin width in ns")->capture_default_str();
  cor->add_option("--window-start-ns", ws, "Window start in ns (default: last 250 ns)");
  cor->add_option("--window-end-ns", we, "Window end in ns (default: end of shot)");
  cor->add_option("--tau-max-ns", co.tau_max_ns, "Largest |tau| in ns")->capture_default_str();
  cor->add_option("--bootstrap", co.bootstrap, "Bootstrap resamples")->capture_default_str();
  cor->add_option("--seed", co.seed, "Bootstrap seed")->capture_default_str();
  cor->add_option("--workers", workers, "Worker threads (0 = all cores)");

  auto* ana = app.add_subcommand("analyze", "Siegert comparison and connected correlation");
  AnalyzeOptions ao;
  std::string ana_g2, ana_g1, ana_out = ".";
  TwoLevelParams ana_p;
  ana->add_option("g2", ana_g2, "g2_tau.csv from correlate")->required()->check(CLI::ExistingFile);
  ana->add_option("--g1", ana_g1, "Demodulated g1.csv")->check(CLI::ExistingFile);
  auto* ana_rabi = ana->add_option("--rabi", ana_p.rabi, "Oracle Rabi frequency (units of Gamma)");
  ana->add_option("--gamma-hz", ana_p.gamma_hz, "Oracle linewidth Gamma/2pi")->capture_default_str();
  ana->add_option("--detuning", ana_p.detuning, "Oracle detuning (units of Gamma)")->capture_default_str();
  ana->add_option("--mean-field", ao.mean_field_ratio, "|<E>|^2/<I> when no g1 tail is available");
  ana->add_option("--mean-field-threshold", ao.mean_field_threshold)->capture_default_str();
  ana->add_option("--zero-window-ns", ao.zero_window_ns, "Half width of the g2(0) average")->capture_default_str();
  ana->add_option("-o,--out-dir", ana_out, "Output directory");

  auto* het = app.add_subcommand("heterodyne", "Demodulate g1 and the spectrum from g2_HD");
  HeterodyneOptions ho;
  std::string het_g2, het_out = ".", het_window = "tukey";
  TwoLevelParams het_p;
  double cutoff_mhz = 0.0, lo_mhz = 110.0;
  bool bin_correction = false;
  het->add_option("--g2-hd", het_g2, "g2_tau.csv of a beat stream")->check(CLI::ExistingFile);
  auto* het_rabi = het->add_option("--rabi", het_p.rabi, "Model Rabi frequency (units of Gamma)");
  het->add_option("--gamma-hz", het_p.gamma_hz)->capture_default_str();
  het->add_option("--detuning", het_p.detuning)->capture_default_str();
  het->add_option("--tau-max-ns", ho.model_tau_max_ns, "Model lag span")->capture_default_str();
  het->add_option("--step-ps", ho.model_step_ps, "Model lag step")->capture_default_str();
  het->add_option("--omega-lo-mhz", lo_mhz, "LO offset omega_LO/2pi in MHz")->capture_default_str();
  het->add_option("--i-lo", ho.het.i_lo)->capture_default_str();
  het->add_option("--i-sc", ho.het.i_sc)->capture_default_str();
  het->add_option("--cutoff-mhz", cutoff_mhz, "Low-pass cutoff (default omega_LO/2)");
  het->add_flag("--bin-correction", bin_correction, "Undo the bin-averaging loss at omega_LO");
  het->add_option("--window", het_window, "Spectral window")
      ->check(CLI::IsMember({"tukey", "hann", "rectangular"}))
      ->capture_default_str();
  het->add_option("--tukey-alpha", ho.spectrum.tukey_alpha)->capture_default_str();
  het->add_option("-o,--out-dir", het_out, "Output directory");

  auto* sca = app.add_subcommand("scaling", "Intensity versus atom number fit");
  ScalingOptions so;
  std::vector<std::string> sca_manifests;
  std::string sca_csv, sca_out = ".";
  sca->add_option("manifests", sca_manifests, "Simulate manifests");
  sca->add_option("--csv", sca_csv, "CSV with columns N,intensity")->check(CLI::ExistingFile);
  sca->add_option("--sigmas", so.confidence_sigmas, "Confidence level of the quadratic term")->capture_default_str();
  sca->add_option("-o,--out-dir", sca_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*sim) {
      const auto m = cmd_simulate(sim_config, sim_output.empty() ? std::nullopt : std::optional<fs::path>(sim_output),
                                  workers);
      std::cout << "wrote " << m.output_paths.front() << " (config " << m.config_hash.substr(0, 12) << ")\n";
    } else if (*cor) {
      co.stream = cor_stream;
      co.out_dir = cor_out;
      co.workers = workers;
      if (ws >= 0.0) co.window_start_ns = ws;
      if (we >= 0.0) co.window_end_ns = we;
      const auto r = cmd_correlate(co);
      if (!r.empty) {
        const auto i0 = r.g2.index_of(0);
        std::cout << "g2(0) = " << format_number(r.g2.real(*i0)) << " +- " << format_number(r.g2.sigma[*i0]) << "\n";
      }
    } else if (*ana) {
      ao.g2_csv = ana_g2;
      ao.out_dir = ana_out;
      if (!ana_g1.empty()) ao.g1_csv = ana_g1;
      if (ana_rabi->count() > 0) ao.oracle = ana_p;
      const auto s = cmd_analyze(ao);
      std::cout << "g2(0) over |tau| <= " << format_number(ao.zero_window_ns) << " ns = " << format_number(s.g2_zero)
                << " +- " << format_number(s.g2_zero_sigma) << "\n"
                << "bound 1 + |g1|^2 - g2 = " << format_number(s.bound_zero) << " (" << format_number(s.sigma_level)
                << " sigma): " << s.verdict << "\n";
    } else if (*het) {
      ho.out_dir = het_out;
      ho.het.omega_lo_hz = lo_mhz * 1e6;
      ho.demod.cutoff_hz = cutoff_mhz * 1e6;
      ho.spectrum.window = het_window == "hann"          ? SpectralWindow::hann
                           : het_window == "rectangular" ? SpectralWindow::rectangular
                                                         : SpectralWindow::tukey;
      if (!het_g2.empty()) ho.g2_hd_csv = het_g2;
      if (het_rabi->count() > 0) ho.model = het_p;
      if (bin_correction && ho.g2_hd_csv) {
        const auto s = read_series_csv(*ho.g2_hd_csv, SeriesKind::g2, "g2");
        ho.demod.bin_width_ps = s.uniform_step();
      }
      const auto r = cmd_heterodyne(ho);
      std::cout << "wrote g1.csv (" << r.g1.size() << " lags) and spectrum.csv (" << r.spectrum.values.size()
                << " frequencies)\n";
    } else if (*sca) {
      so.out_dir = sca_out;
      if (!sca_csv.empty()) so.csv = sca_csv;
      for (const auto& p : sca_manifests) so.manifests.emplace_back(p);
      const auto f = cmd_scaling(so);
      std::cout << "exponent " << format_number(f.exponent) << " +- " << format_number(f.exponent_sigma)
                << ", coherent bound " << format_number(f.coherent_bound) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error (config): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace photocorr::cli
