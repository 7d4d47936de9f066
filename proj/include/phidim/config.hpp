#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "phidim/cantor_formula.hpp"
#include "phidim/covering.hpp"
#include "phidim/dimension_function.hpp"
#include "phidim/experiments.hpp"
#include "phidim/random_model.hpp"
#include "phidim/sequence.hpp"

namespace phidim {

using Json = nlohmann::json;

// Bumped whenever a JSON layout or CSV column set changes.
inline constexpr int kSchemaVersion = 1;

// Config-level description of a gap sequence.
//   {"kind": "middle-third"}
//   {"kind": "central", "ratios": [0.2, 0.45], "max_depth": 2048}
//   {"kind": "explicit", "list": [0.5, 0.3, 0.2]}
struct SequenceSpec {
  std::string kind = "middle-third";
  std::vector<double> ratios;
  std::vector<double> list;
  int max_depth = GapSequence::kDefaultMaxDepth;

  GapSequence build() const;
};

// "middle-third", "central:0.25", "central:0.2,0.45", "explicit:0.5,0.3,0.2",
// "explicit-file:terms.txt" (whitespace or comma separated numbers, or a JSON
// array).
SequenceSpec parse_sequence_arg(const std::string& text);
SequenceSpec sequence_from_json(const Json& j);
Json to_json(const SequenceSpec& s);

// Config-level description of a dimension function.
//   {"family": "const", "param": 0.5}
//   {"family": "table", "table": [[1e-3, 0.2], [1e-9, 0.1]]}
struct PhiSpec {
  std::string family = "zero";
  double param = 0.0;
  std::vector<std::pair<double, double>> table;

  DimensionFunction build() const;
};

// "zero", "const:0.5", "invlog:1", "psi", "scaledpsi:2", "powlog:0.5",
// "table:knots.json".
PhiSpec parse_phi_arg(const std::string& text);
PhiSpec phi_from_json(const Json& j);
Json to_json(const PhiSpec& f);
std::string describe(const PhiSpec& f);

ArrangementKind parse_arrangement(const std::string& text);
Direction parse_direction(const std::string& text);

WindowPolicy window_policy_from_json(const Json& j, WindowPolicy defaults = {});
Json to_json(const WindowPolicy& w);
DichotomyPolicy dichotomy_policy_from_json(const Json& j, DichotomyPolicy defaults = {});
Json to_json(const DichotomyPolicy& w);

Json to_json(const LevelProfile& p);
Json to_json(const DepthTable& d);
Json to_json(const FormulaEstimate& e);
Json to_json(const CoverQuery& q);
// Summary only; the window records go to CSV.
Json to_json(const DimensionEstimate& e);
Json to_json(const TrialStats& t);
Json to_json(const ExperimentReport& r);
Json to_json(const MaxLoadReport& r);
Json to_json(const EmptyBinReport& r);
Json to_json(const LengthLemmaReport& r);
Json to_json(const TailCheck& t);

// CSV with columns n,x,R,r,N,exponent. The first line is a comment carrying
// the schema version.
void write_windows_csv(std::ostream& out, const std::vector<CoverQuery>& records);

// Gap tables: index, level, length, left coordinate per gap.
Json gap_table_json(const ApproxSet& s);
ApproxSet gap_table_from_json(const Json& j);
void write_gap_table_binary(std::ostream& out, const ApproxSet& s);
ApproxSet read_gap_table_binary(std::istream& in);

// Doubles are written with the shortest representation that round-trips,
// so equal inputs always produce byte-identical text.
std::string dump(const Json& j);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace phidim
