#include "phidim/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "phidim/error.hpp"

namespace phidim {

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::config, "field '" + field + "': " + why);
}

double to_double(const std::string& text, const std::string& field) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    bad_field(field, "'" + text + "' is not a number");
  }
  if (used != text.size()) bad_field(field, "'" + text + "' is not a number");
  return v;
}

std::vector<double> number_list(const std::string& text, const std::string& field) {
  std::vector<double> out;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    token.erase(0, token.find_first_not_of(" \t"));
    token.erase(token.find_last_not_of(" \t") + 1);
    if (!token.empty()) out.push_back(to_double(token, field));
  }
  if (out.empty()) bad_field(field, "empty list");
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<double> numbers_from_file(const std::string& path) {
  const std::string text = slurp(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      return Json::parse(text).get<std::vector<double>>();
    } catch (const Json::exception& e) {
      throw Error(ErrorKind::config, path + ": " + e.what());
    }
  }
  std::string flat = text;
  std::replace_if(flat.begin(), flat.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }, ',');
  return number_list(flat, path);
}

template <class T>
T get_field(const Json& j, const char* key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    bad_field(where + key, "has the wrong type");
  }
}

std::string split_head(const std::string& text, std::string& tail) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) {
    tail.clear();
    return text;
  }
  tail = text.substr(colon + 1);
  return text.substr(0, colon);
}

}  // namespace

GapSequence SequenceSpec::build() const {
  if (kind == "middle-third") return GapSequence::middle_third(max_depth);
  if (kind == "central") {
    if (ratios.empty()) bad_field("sequence.ratios", "central sequences need at least one ratio");
    return GapSequence::central(ratios, max_depth);
  }
  if (kind == "explicit") return GapSequence::explicit_list(list);
  bad_field("sequence.kind", "unknown kind '" + kind + "' (middle-third, central, explicit)");
}

SequenceSpec parse_sequence_arg(const std::string& text) {
  std::string tail;
  const std::string head = split_head(text, tail);
  SequenceSpec s;
  if (head == "middle-third") {
    s.kind = "middle-third";
  } else if (head == "central") {
    s.kind = "central";
    s.ratios = number_list(tail, "seq");
  } else if (head == "explicit") {
    s.kind = "explicit";
    s.list = number_list(tail, "seq");
  } else if (head == "explicit-file") {
    s.kind = "explicit";
    s.list = numbers_from_file(tail);
  } else {
    bad_field("seq", "unknown sequence '" + text +
                         "' (middle-third, central:r1,r2,..., explicit:a1,a2,..., explicit-file:path)");
  }
  return s;
}

SequenceSpec sequence_from_json(const Json& j) {
  if (!j.is_object()) bad_field("sequence", "must be an object");
  SequenceSpec s;
  s.kind = get_field<std::string>(j, "kind", "sequence.", s.kind);
  s.ratios = get_field<std::vector<double>>(j, "ratios", "sequence.", {});
  s.list = get_field<std::vector<double>>(j, "list", "sequence.", {});
  s.max_depth = get_field<int>(j, "max_depth", "sequence.", s.max_depth);
  if (s.kind != "middle-third" && s.kind != "central" && s.kind != "explicit")
    bad_field("sequence.kind", "unknown kind '" + s.kind + "'");
  return s;
}

Json to_json(const SequenceSpec& s) {
  Json j{{"kind", s.kind}};
  if (s.kind == "central") j["ratios"] = s.ratios;
  if (s.kind == "explicit") j["list"] = s.list;
  if (s.kind != "explicit") j["max_depth"] = s.max_depth;
  return j;
}

DimensionFunction PhiSpec::build() const {
  if (family == "zero") return DimensionFunction::zero();
  if (family == "const") return DimensionFunction::constant(param);
  if (family == "invlog") return DimensionFunction::inverse_log(param);
  if (family == "psi") return DimensionFunction::psi();
  if (family == "scaledpsi") return DimensionFunction::scaled_psi(param);
  if (family == "powlog") return DimensionFunction::power_of_log(param);
  if (family == "table") return DimensionFunction::tabulated(table);
  bad_field("phi.family",
            "unknown family '" + family + "' (zero, const, invlog, psi, scaledpsi, powlog, table)");
}

PhiSpec parse_phi_arg(const std::string& text) {
  std::string tail;
  const std::string head = split_head(text, tail);
  PhiSpec f;
  f.family = head;
  if (head == "zero" || head == "psi") {
    if (!tail.empty()) bad_field("phi", "'" + head + "' takes no parameter");
  } else if (head == "const" || head == "invlog" || head == "scaledpsi" || head == "powlog") {
    f.param = to_double(tail, "phi");
  } else if (head == "table") {
    const Json j = read_json_file(tail);
    f.table = phi_from_json(Json{{"family", "table"}, {"table", j}}).table;
  } else {
    bad_field("phi", "unknown dimension function '" + text + "'");
  }
  return f;
}

PhiSpec phi_from_json(const Json& j) {
  if (j.is_string()) return parse_phi_arg(j.get<std::string>());
  if (!j.is_object()) bad_field("phi", "must be a string or an object");
  PhiSpec f;
  f.family = get_field<std::string>(j, "family", "phi.", f.family);
  f.param = get_field<double>(j, "param", "phi.", 0.0);
  if (j.contains("table")) {
    const Json& t = j.at("table");
    if (!t.is_array()) bad_field("phi.table", "must be an array of [x, phi] pairs");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!t[i].is_array() || t[i].size() != 2 || !t[i][0].is_number() || !t[i][1].is_number())
        bad_field("phi.table[" + std::to_string(i) + "]", "must be a pair of numbers");
      f.table.emplace_back(t[i][0].get<double>(), t[i][1].get<double>());
    }
  }
  return f;
}

Json to_json(const PhiSpec& f) {
  Json j{{"family", f.family}};
  if (f.family == "const" || f.family == "invlog" || f.family == "scaledpsi" ||
      f.family == "powlog")
    j["param"] = f.param;
  if (f.family == "table") {
    Json t = Json::array();
    for (const auto& [x, v] : f.table) t.push_back({x, v});
    j["table"] = t;
  }
  return j;
}

std::string describe(const PhiSpec& f) { return f.build().describe(); }

ArrangementKind parse_arrangement(const std::string& text) {
  if (text == "random") return ArrangementKind::random;
  if (text == "cantor") return ArrangementKind::cantor;
  if (text == "decreasing") return ArrangementKind::decreasing;
  bad_field("arrangement", "unknown arrangement '" + text + "' (random, cantor, decreasing)");
}

Direction parse_direction(const std::string& text) {
  if (text == "upper") return Direction::upper;
  if (text == "lower") return Direction::lower;
  bad_field("direction", "unknown direction '" + text + "' (upper, lower)");
}

WindowPolicy window_policy_from_json(const Json& j, WindowPolicy w) {
  if (!j.is_object()) bad_field("policy", "must be an object");
  w.n_lo = get_field<int>(j, "n_lo", "policy.", w.n_lo);
  w.n_hi = get_field<int>(j, "n_hi", "policy.", w.n_hi);
  w.radius_span = get_field<int>(j, "radius_span", "policy.", w.radius_span);
  w.min_separation = get_field<int>(j, "min_separation", "policy.", w.min_separation);
  w.ladder_length = get_field<int>(j, "ladder_length", "policy.", w.ladder_length);
  w.subsample_cap = get_field<std::size_t>(j, "subsample_cap", "policy.", w.subsample_cap);
  w.seed = get_field<uint64_t>(j, "seed", "policy.", w.seed);
  w.contracted = get_field<bool>(j, "contracted", "policy.", w.contracted);
  return w;
}

Json to_json(const WindowPolicy& w) {
  return {{"n_lo", w.n_lo},
          {"n_hi", w.n_hi},
          {"radius_span", w.radius_span},
          {"min_separation", w.min_separation},
          {"ladder_length", w.ladder_length},
          {"subsample_cap", w.subsample_cap},
          {"seed", w.seed},
          {"contracted", w.contracted}};
}

DichotomyPolicy dichotomy_policy_from_json(const Json& j, DichotomyPolicy w) {
  if (!j.is_object()) bad_field("policy", "must be an object");
  w.center_back = get_field<int>(j, "center_back", "policy.", w.center_back);
  w.radius_span = get_field<int>(j, "radius_span", "policy.", w.radius_span);
  w.min_separation = get_field<int>(j, "min_separation", "policy.", w.min_separation);
  w.ladder_length = get_field<int>(j, "ladder_length", "policy.", w.ladder_length);
  w.subsample_cap = get_field<std::size_t>(j, "subsample_cap", "policy.", w.subsample_cap);
  w.contracted = get_field<bool>(j, "contracted", "policy.", w.contracted);
  return w;
}

Json to_json(const DichotomyPolicy& w) {
  return {{"center_back", w.center_back},
          {"radius_span", w.radius_span},
          {"min_separation", w.min_separation},
          {"ladder_length", w.ladder_length},
          {"subsample_cap", w.subsample_cap},
          {"contracted", w.contracted}};
}

Json to_json(const LevelProfile& p) {
  return {{"levels", p.depth()},
          {"s", p.s},
          {"tau_hat", p.tau_hat},
          {"lambda_hat", p.lambda_hat},
          {"kappa_hat", p.kappa_hat},
          {"level_comparable", p.level_comparable},
          {"doubling", p.doubling}};
}

Json to_json(const DepthTable& d) {
  Json ratio = Json::array();
  for (const auto& r : d.asymptotic_ratio) ratio.push_back(r ? Json(*r) : Json(nullptr));
  return {{"first_level", d.first_level},
          {"phi", d.phi},
          {"asymptotic_ratio", ratio},
          {"regime", to_string(d.regime)}};
}

Json to_json(const FormulaEstimate& e) {
  Json ladder = Json::array();
  for (const auto& r : e.ladder)
    ladder.push_back({{"k0", r.k0}, {"beta", r.beta}, {"window", {r.extremal.k, r.extremal.n}}});
  return {{"direction", to_string(e.direction)},
          {"levels", e.levels},
          {"k0_ladder", ladder},
          {"beta_limit", e.beta_limit},
          {"argmax_window", {e.window_argmax.k, e.window_argmax.n}},
          {"stability", e.stability},
          {"skipped_levels", e.skipped_levels}};
}

Json to_json(const CoverQuery& q) {
  return {{"n", q.n}, {"x", q.x}, {"R", q.R}, {"r", q.r}, {"N", q.count},
          {"exponent", q.exponent}};
}

Json to_json(const DimensionEstimate& e) {
  return {{"direction", to_string(e.direction)},
          {"beta_hat", e.beta_hat},
          {"extremal_window", to_json(e.extremal)},
          {"windows", e.records.size()},
          {"depth_used", e.depth_used},
          {"window_policy", to_json(e.policy)}};
}

Json to_json(const TrialStats& t) {
  return {{"trial_id", t.trial_id},
          {"seed", t.seed},
          {"beta_up", t.beta_up},
          {"beta_low", t.beta_low},
          {"up_window", to_json(t.up_window)},
          {"low_window", to_json(t.low_window)},
          {"n", t.n},
          {"phi_n", t.phi_n},
          {"M_n", t.M_n},
          {"K_n", t.K_n ? Json(*t.K_n) : Json(nullptr)},
          {"empty_bin", t.empty_bin},
          {"max_len_n", t.max_len_n},
          {"len_bound_n", t.len_bound_n},
          {"epsilon_n", t.epsilon_n}};
}

namespace {

Json to_json(const Quartiles& q) { return {{"q1", q.q1}, {"median", q.median}, {"q3", q.q3}}; }

}  // namespace

Json to_json(const ExperimentReport& r) {
  Json ladder = Json::array();
  for (const auto& ds : r.ladder) {
    Json trials = Json::array();
    for (const auto& t : ds.trials) trials.push_back(to_json(t));
    ladder.push_back({{"W", ds.W},
                      {"beta_up", to_json(ds.beta_up)},
                      {"beta_low", to_json(ds.beta_low)},
                      {"cantor_up", ds.cantor_up},
                      {"cantor_low", ds.cantor_low},
                      {"trials", trials}});
  }
  return {{"regime", to_string(r.regime)},
          {"cantor_upper", to_json(r.cantor_upper)},
          {"cantor_lower", to_json(r.cantor_lower)},
          {"box", r.box},
          {"ladder", ladder}};
}

Json to_json(const MaxLoadReport& r) {
  return {{"n", r.n},
          {"phi", r.phi},
          {"K_n", r.K_n},
          {"M", r.M},
          {"histogram", r.histogram},
          {"frequency", r.frequency},
          {"cantor_M", r.cantor_M}};
}

Json to_json(const EmptyBinReport& r) {
  return {{"bins_log2", r.bins_log2},
          {"balls", r.balls},
          {"empty_counts", r.empty_counts},
          {"frequency", r.frequency},
          {"poisson_expected_empty", r.poisson_expected_empty}};
}

Json to_json(const LengthLemmaReport& r) {
  return {{"n", r.n},
          {"C", r.C},
          {"epsilon_n", r.epsilon_n},
          {"bound", r.bound},
          {"max_length", r.max_length},
          {"frequency", r.frequency},
          {"cantor_max_length", r.cantor_max_length}};
}

Json to_json(const TailCheck& t) {
  Json j{{"M", t.M},
         {"N", t.N},
         {"eta", t.eta},
         {"mean", t.mean},
         {"hypothesis_met", t.hypothesis_met},
         {"corollary_applies", t.corollary_applies},
         {"pass", t.pass}};
  if (t.hypothesis_met) {
    j["exact_two_sided"] = t.exact_two_sided;
    j["dml_bound"] = t.dml_bound;
  }
  if (t.corollary_applies) {
    j["exact_upper"] = t.exact_upper;
    j["exact_lower"] = t.exact_lower;
    j["corollary_bound"] = t.corollary_bound;
  }
  return j;
}

void write_windows_csv(std::ostream& out, const std::vector<CoverQuery>& records) {
  out << "# schema_version=" << kSchemaVersion << "\n";
  out << "n,x,R,r,N,exponent\n";
  out << std::setprecision(17);
  for (const auto& q : records)
    out << q.n << ',' << q.x << ',' << q.R << ',' << q.r << ',' << q.count << ',' << q.exponent
        << '\n';
}

Json gap_table_json(const ApproxSet& s) {
  Json rows = Json::array();
  for (const auto& g : s.gaps()) rows.push_back({g.index, g.level, g.length, g.left});
  Json j{{"schema_version", kSchemaVersion},
         {"depth", s.depth()},
         {"arrangement", to_string(s.arrangement())},
         {"tail_mass", s.tail_mass()},
         {"extent", s.extent()},
         {"columns", {"index", "level", "length", "left"}},
         {"gaps", rows}};
  j["seed"] = s.seed() ? Json(*s.seed()) : Json(nullptr);
  return j;
}

ApproxSet gap_table_from_json(const Json& j) {
  try {
    std::vector<PlacedGap> gaps;
    for (const auto& row : j.at("gaps"))
      gaps.push_back({row.at(0).get<uint32_t>(), row.at(1).get<int>(), row.at(2).get<double>(),
                      row.at(3).get<double>()});
    std::optional<uint64_t> seed;
    if (j.contains("seed") && !j.at("seed").is_null()) seed = j.at("seed").get<uint64_t>();
    return ApproxSet::from_gap_table(j.at("depth").get<int>(), j.at("tail_mass").get<double>(),
                                     parse_arrangement(j.at("arrangement").get<std::string>()),
                                     seed, std::move(gaps), j.at("extent").get<double>());
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::config, std::string("gap table: ") + e.what());
  }
}

namespace {

constexpr char kMagic[8] = {'P', 'H', 'I', 'G', 'A', 'P', 'S', '1'};

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw Error(ErrorKind::io, "truncated gap table");
  return v;
}

}  // namespace

// Little-endian host layout: magic, depth, arrangement, has_seed, seed,
// tail_mass, extent, count, then (index u32, length f64, left f64) per gap.
void write_gap_table_binary(std::ostream& out, const ApproxSet& s) {
  out.write(kMagic, sizeof kMagic);
  put<int32_t>(out, s.depth());
  put<int32_t>(out, static_cast<int32_t>(s.arrangement()));
  put<uint8_t>(out, s.seed() ? 1 : 0);
  put<uint64_t>(out, s.seed().value_or(0));
  put<double>(out, s.tail_mass());
  put<double>(out, s.extent());
  put<uint64_t>(out, s.gaps().size());
  for (const auto& g : s.gaps()) {
    put<uint32_t>(out, g.index);
    put<double>(out, g.length);
    put<double>(out, g.left);
  }
}

ApproxSet read_gap_table_binary(std::istream& in) {
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw Error(ErrorKind::io, "not a binary gap table");
  const int depth = take<int32_t>(in);
  const auto arrangement = static_cast<ArrangementKind>(take<int32_t>(in));
  const bool has_seed = take<uint8_t>(in) != 0;
  const uint64_t seed = take<uint64_t>(in);
  const double tail = take<double>(in);
  const double extent = take<double>(in);
  const uint64_t count = take<uint64_t>(in);
  if (count > (uint64_t{1} << RandomOrder::kMaxDepth))
    throw Error(ErrorKind::io, "gap table too large");
  std::vector<PlacedGap> gaps(count);
  for (auto& g : gaps) {
    g.index = take<uint32_t>(in);
    g.length = take<double>(in);
    g.left = take<double>(in);
  }
  return ApproxSet::from_gap_table(depth, tail, arrangement,
                                   has_seed ? std::optional<uint64_t>(seed) : std::nullopt,
                                   std::move(gaps), extent);
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::string& path) {
  const std::string text = slurp(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::config, path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorKind::io, "write failed for " + path);
}

}  // namespace phidim
