#pragma once

#include <string>

#include "phidim/config.hpp"

namespace phidim {

// Experiment manifests: a JSON object with an "experiment" tag
// (dichotomy, max-load, empty-bin, interval-length, tailcheck), the
// experiment's parameters, a master_seed and a "thresholds" object.
//
// resolve_manifest fills in every default so that the resolved form, which
// is embedded in each report, re-runs to the identical report.
Json resolve_manifest(const Json& manifest);

struct RunOutput {
  Json report;
  std::string csv;
  // True iff every binding check passed.
  bool pass = false;
};

// Runs a manifest. Results do not depend on `threads`.
RunOutput run_manifest(const Json& manifest, int threads);

}  // namespace phidim
