// phidim: formula dimensions, random arrangements, cover estimates and
// experiment manifests from the command line.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "phidim/config.hpp"
#include "phidim/error.hpp"
#include "phidim/manifest.hpp"

namespace fs = std::filesystem;
using namespace phidim;

namespace {

// A config key and its default. The flag is the key with '_' -> '-'.
struct Param {
  std::string key;
  Json fallback;
  std::string help;
};

struct Command {
  CLI::App* app = nullptr;
  std::vector<Param> params;
  std::map<std::string, std::string> text;
  std::map<std::string, bool> flag;
  std::string config_path;
};

std::string flag_name(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

void declare(Command& cmd) {
  cmd.app->add_option("--config", cmd.config_path,
                      "JSON file with the same keys as the flags (a previous report works too)");
  for (const auto& p : cmd.params) {
    if (p.fallback.is_boolean())
      cmd.app->add_flag(flag_name(p.key), cmd.flag[p.key], p.help);
    else
      cmd.app->add_option(flag_name(p.key), cmd.text[p.key], p.help);
  }
}

Json from_text(const Param& p, const std::string& v) {
  try {
    if (p.fallback.is_number_unsigned()) {
      if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
      return std::stoull(v, nullptr, 0);
    }
    if (p.fallback.is_number_integer()) return std::stoll(v);
    if (p.fallback.is_number_float()) return std::stod(v);
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "field '" + p.key + "': '" + v + "' is not a number");
  }
  return v;
}

// Defaults, then the config file, then explicit flags.
Json resolve(const Command& cmd) {
  Json file = Json::object();
  if (!cmd.config_path.empty()) {
    file = read_json_file(cmd.config_path);
    if (file.contains("schema_version") && file.contains("config")) file = file.at("config");
    if (!file.is_object()) throw Error(ErrorKind::config, "config file must hold a JSON object");
  }
  Json out = Json::object();
  for (const auto& p : cmd.params) out[p.key] = p.fallback;
  for (const auto& [k, v] : file.items()) {
    if (k == "command" || k == "schema_version") continue;
    if (!out.contains(k)) throw Error(ErrorKind::config, "field '" + k + "': unknown key");
    out[k] = v;
  }
  for (const auto& p : cmd.params) {
    const auto* opt = cmd.app->get_option(flag_name(p.key));
    if (opt->count() == 0) continue;
    out[p.key] = p.fallback.is_boolean() ? Json(cmd.flag.at(p.key)) : from_text(p, cmd.text.at(p.key));
  }
  return out;
}

SequenceSpec sequence_of(const Json& v) {
  return v.is_string() ? parse_sequence_arg(v.get<std::string>()) : sequence_from_json(v);
}

PhiSpec phi_of(const Json& v) { return v.is_string() ? parse_phi_arg(v.get<std::string>()) : phi_from_json(v); }

template <class T>
T get(const Json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorKind::config, std::string("field '") + key + "' has the wrong type");
  }
}

struct Output {
  fs::path dir;

  fs::path path(const std::string& name) const { return dir / name; }

  void write(const std::string& name, const std::string& text) const {
    fs::create_directories(dir);
    write_text_file(path(name).string(), text);
    std::cout << "wrote " << path(name).string() << "\n";
  }
};

Json header(const std::string& command, const Json& cfg) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", cfg}};
}

int cmd_dims(Json cfg, const Output& out) {
  const SequenceSpec seq = sequence_of(cfg.at("seq"));
  const PhiSpec phi = phi_of(cfg.at("phi"));
  cfg["seq"] = to_json(seq);
  cfg["phi"] = to_json(phi);
  const GapSequence a = seq.build();
  // Short explicit lists support few levels; the formula then reports what is missing.
  const int N = std::min(get<int>(cfg, "levels"), a.max_level());
  // Windows need k >= 4 and n >= 1.
  if (N < 5)
    throw Error(ErrorKind::no_admissible_window,
                "the sequence supports " + std::to_string(N) + " levels, windows need at least 5");
  const DimensionFunction f = phi.build();
  const LevelProfile p = level_sums(a, N);
  const DepthTable d = depth_function(f, p);
  const FormulaEstimate up = upper_phi_dim_formula(p, d, N);
  const FormulaEstimate low = lower_phi_dim_formula(p, d, N);

  Json report = header("dims", cfg);
  Json results{{"levels_used", N},
               {"upper", to_json(up)}, {"lower", to_json(low)}, {"profile", to_json(p)},
               {"depth", to_json(d)}};
  if (p.depth() >= 16)
    results["box"] = box_dim_estimate(p).value;
  else
    results["box"] = nullptr;
  report["results"] = results;
  out.write("dims.json", dump(report));
  std::cout << "beta_up = " << up.beta_limit << "  beta_low = " << low.beta_limit
            << "  regime = " << to_string(d.regime) << "\n";
  return 0;
}

int cmd_sample(Json cfg, const Output& out) {
  const SequenceSpec seq = sequence_of(cfg.at("seq"));
  cfg["seq"] = to_json(seq);
  const auto kind = parse_arrangement(get<std::string>(cfg, "arrangement"));
  const int W = get<int>(cfg, "W");
  const auto format = get<std::string>(cfg, "format");
  if (format != "json" && format != "bin")
    throw Error(ErrorKind::config, "field 'format': must be json or bin");

  const GapSequence a = seq.build();
  const ApproxSet s = kind == ArrangementKind::random
                          ? build_set(a, RandomOrder::sample(get<uint64_t>(cfg, "seed"), W), W)
                          : build_set(a, kind, W);
  Json table = gap_table_json(s);
  if (format == "json") {
    table["config"] = cfg;
    out.write("gaps.json", dump(table));
  } else {
    fs::create_directories(out.dir);
    std::ofstream bin(out.path("gaps.bin"), std::ios::binary);
    if (!bin) throw Error(ErrorKind::io, "cannot write " + out.path("gaps.bin").string());
    write_gap_table_binary(bin, s);
    std::cout << "wrote " << out.path("gaps.bin").string() << "\n";
    Json meta = header("sample", cfg);
    table.erase("gaps");
    meta["table"] = table;
    out.write("gaps.meta.json", dump(meta));
  }
  CompensatedSum placed;
  for (const auto& g : s.gaps()) placed.add(g.length);
  std::cout << s.gaps().size() << " gaps, placed mass " << placed.value() << ", tail "
            << s.tail_mass() << "\n";
  return 0;
}

ApproxSet load_gaps(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".bin") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    return read_gap_table_binary(in);
  }
  return gap_table_from_json(read_json_file(path));
}

int cmd_estimate(Json cfg, const Output& out) {
  const SequenceSpec seq = sequence_of(cfg.at("seq"));
  const PhiSpec phi = phi_of(cfg.at("phi"));
  cfg["seq"] = to_json(seq);
  cfg["phi"] = to_json(phi);
  const int W = get<int>(cfg, "W");

  WindowPolicy policy;
  policy.n_lo = get<int>(cfg, "n_lo");
  policy.n_hi = get<int>(cfg, "n_hi");
  policy.radius_span = get<int>(cfg, "radius_span");
  policy.min_separation = get<int>(cfg, "min_separation");
  policy.ladder_length = get<int>(cfg, "ladder_length");
  policy.subsample_cap = get<std::size_t>(cfg, "subsample_cap");
  policy.seed = get<uint64_t>(cfg, "seed");
  policy.contracted = get<bool>(cfg, "contracted");

  const GapSequence a = seq.build();
  const DimensionFunction f = phi.build();
  ApproxSet s = [&] {
    if (!cfg.at("gaps").is_null()) return load_gaps(get<std::string>(cfg, "gaps"));
    const auto kind = parse_arrangement(get<std::string>(cfg, "arrangement"));
    return kind == ArrangementKind::random
               ? build_set(a, RandomOrder::sample(get<uint64_t>(cfg, "seed"), W), W)
               : build_set(a, kind, W);
  }();
  const int levels = std::min(a.max_level(), std::max(s.depth() + 8, 256));
  const LevelProfile p = level_sums(a, levels);
  const DepthTable d = depth_function(f, p);
  const EstimatePair est = estimate_dimensions(s, f, p, d, policy);

  Json report = header("estimate", cfg);
  report["results"] = {{"upper", to_json(est.upper)},
                       {"lower", to_json(est.lower)},
                       {"windows", est.upper.records.size()}};
  out.write("estimate.json", dump(report));
  std::ostringstream csv;
  write_windows_csv(csv, est.upper.records);
  out.write("windows.csv", csv.str());
  std::cout << "beta_up_hat = " << est.upper.beta_hat << "  beta_low_hat = " << est.lower.beta_hat
            << "  windows = " << est.upper.records.size() << "\n";
  return 0;
}

int finish_run(const RunOutput& r, const Output& out, const std::string& stem) {
  out.write(stem + ".json", dump(r.report));
  out.write(stem + ".csv", r.csv);
  for (const auto& c : r.report.at("checks")) {
    std::cout << (c.at("pass").get<bool>() ? "PASS " : "FAIL ")
              << (c.at("binding").get<bool>() ? "[binding] " : "[advisory] ")
              << c.at("name").get<std::string>() << "\n";
  }
  std::cout << (r.pass ? "all binding checks pass\n" : "binding check failed\n");
  return r.pass ? 0 : 1;
}

int cmd_experiment(const std::string& manifest_path, const Json& overrides, int threads,
                   const Output& out) {
  Json m = read_json_file(manifest_path);
  if (m.contains("schema_version") && m.contains("config") && m.contains("checks")) m = m.at("config");
  for (const auto& [k, v] : overrides.items()) m[k] = v;
  const auto stem = fs::path(manifest_path).stem().string();
  return finish_run(run_manifest(m, threads), out, stem);
}

int cmd_tailcheck(Json cfg, int threads, const Output& out) {
  Json grid = cfg.at("grid");
  if (grid.is_string() && grid.get<std::string>() != "default") {
    // "M:N,M:N,..."
    Json rows = Json::array();
    std::istringstream in(grid.get<std::string>());
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto colon = item.find(':');
      if (colon == std::string::npos)
        throw Error(ErrorKind::config, "field 'grid': expected M:N pairs, got '" + item + "'");
      try {
        rows.push_back({std::stoull(item.substr(0, colon)), std::stoi(item.substr(colon + 1))});
      } catch (const std::exception&) {
        throw Error(ErrorKind::config, "field 'grid': bad pair '" + item + "'");
      }
    }
    grid = rows;
  }
  Json m{{"experiment", "tailcheck"}, {"grid", grid}, {"eta", cfg.at("eta")}};
  return finish_run(run_manifest(m, threads), out, "tailcheck");
}

std::string hint(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::truncation_violation:
      return "raise W or keep the inner radius r above the truncation floor (smaller "
             "ladder_length or n_hi)";
    case ErrorKind::out_of_regime:
      return "the max-load threshold needs 2^phi well below ln 2^n; lower phi or raise n";
    case ErrorKind::not_level_comparable:
      return "level sums must shrink by a factor below 1/2; use ratios under 0.5";
    case ErrorKind::no_admissible_window:
      return "the sequence is too shallow for the window ladder; use more levels or a longer "
             "list";
    case ErrorKind::insufficient_depth:
    case ErrorKind::depth_unsupported:
      return "lower --levels / --W or supply a deeper sequence";
    case ErrorKind::invalid_policy:
      return "widen the window policy (n_lo..n_hi, ladder_length) so that r < R somewhere";
    case ErrorKind::config:
      return "fix the named field in the flags or the config file";
    case ErrorKind::io:
      return "check the path and permissions";
    default:
      return "check the inputs";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phi-dimensions of complementary sets: formulas, random arrangements, cover "
               "estimates and experiments"};
  app.require_subcommand(1);
  std::string out_dir = std::getenv("PHIDIM_OUT_DIR") ? std::getenv("PHIDIM_OUT_DIR") : ".";
  int threads = default_threads();
  app.add_option("--out-dir", out_dir, "output directory (default $PHIDIM_OUT_DIR or .)");
  app.add_option("--threads", threads, "worker threads; results do not depend on it")
      ->check(CLI::PositiveNumber);

  Command dims{app.add_subcommand("dims", "formula Phi-dimensions of the Cantor set C_a"),
               {{"seq", "middle-third", "sequence: middle-third | central:r1,r2,.. | explicit:.. | explicit-file:path"},
                {"phi", "zero", "dimension function: zero | const:d | invlog:c | psi | scaledpsi:g | powlog:p | table:file"},
                {"levels", 64, "number of levels N"}}};
  Command sample{app.add_subcommand("sample", "gap table of an arrangement at depth W"),
                 {{"seq", "middle-third", "sequence spec"},
                  {"W", 10, "working depth: gaps 1 .. 2^W - 1 are placed"},
                  {"seed", uint64_t{0}, "seed of the random order"},
                  {"arrangement", "random", "random | cantor | decreasing"},
                  {"format", "json", "json | bin"}}};
  Command estimate{app.add_subcommand("estimate", "cover-count estimates of both Phi-dimensions"),
                   {{"seq", "middle-third", "sequence spec"},
                    {"phi", "zero", "dimension function"},
                    {"W", 20, "working depth"},
                    {"seed", uint64_t{0}, "seed of the random order and of center subsampling"},
                    {"arrangement", "random", "random | cantor | decreasing"},
                    {"gaps", nullptr, "use a stored gap table (.json or .bin) instead of sampling"},
                    {"n_lo", 6, "lowest center level"},
                    {"n_hi", 12, "highest center level"},
                    {"radius_span", 1, "R = s_m for m in [n - radius_span + 1, n]"},
                    {"min_separation", 0, "r starts at level m + max(phi(m), min_separation)"},
                    {"ladder_length", 64, "number of r values per (x, R)"},
                    {"subsample_cap", uint64_t{0}, "centers per level, 0 = all"},
                    {"contracted", false, "also use the contracted radius"}}};
  Command tail{app.add_subcommand("tailcheck", "exact binomial tails against the tail bounds"),
               {{"grid", "default", "default | M:N,M:N,..."}, {"eta", 1.0 / 12.0, "relative deviation"}}};
  for (Command* c : {&dims, &sample, &estimate, &tail}) declare(*c);

  auto* experiment = app.add_subcommand("experiment", "run an experiment manifest");
  std::string manifest_path;
  uint64_t master_seed = 0;
  int trials = 0;
  experiment->add_option("manifest", manifest_path, "manifest JSON (or a previous report)")->required();
  auto* seed_opt = experiment->add_option("--master-seed", master_seed, "override master_seed");
  auto* trials_opt = experiment->add_option("--trials", trials, "override trials")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  const Output out{fs::path(out_dir)};
  try {
    if (dims.app->parsed()) return cmd_dims(resolve(dims), out);
    if (sample.app->parsed()) return cmd_sample(resolve(sample), out);
    if (estimate.app->parsed()) return cmd_estimate(resolve(estimate), out);
    if (tail.app->parsed()) return cmd_tailcheck(resolve(tail), threads, out);
    Json overrides = Json::object();
    if (seed_opt->count()) overrides["master_seed"] = master_seed;
    if (trials_opt->count()) overrides["trials"] = trials;
    return cmd_experiment(manifest_path, overrides, threads, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n"
              << "hint: " << hint(e.kind()) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
